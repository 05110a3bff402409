#include "core/grasp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "core/error.hpp"

namespace ginet {

namespace {

constexpr double kPi = std::numbers::pi;

double distance(const Point& a, const Point& b) { return std::hypot(a.row - b.row, a.col - b.col); }

// Screen-space direction angle of the segment a->b (counter-clockwise positive).
double direction(const Point& a, const Point& b) {
  return std::atan2(-(b.row - a.row), b.col - a.col);
}

// Angle between two undirected lines, in [0, pi/2].
double line_angle_between(double a, double b) {
  double d = std::fmod(std::abs(a - b), kPi);
  return std::min(d, kPi - d);
}

struct IntRun {
  long begin = 0;
  long end = -1;  // inclusive; empty when end < begin
  long length() const { return end >= begin ? end - begin + 1 : 0; }
};

IntRun pixel_run(const GraspRectangle& rect, long row) {
  double lo = 0.0;
  double hi = 0.0;
  if (!row_span(rect, static_cast<double>(row) + 0.5, lo, hi)) return {};
  return {static_cast<long>(std::ceil(lo - 0.5)), static_cast<long>(std::floor(hi - 0.5))};
}

std::pair<long, long> pixel_rows(const GraspRectangle& rect) {
  double lo = rect.vertices[0].row;
  double hi = lo;
  for (const auto& v : rect.vertices) {
    lo = std::min(lo, v.row);
    hi = std::max(hi, v.row);
  }
  return {static_cast<long>(std::ceil(lo - 0.5)), static_cast<long>(std::floor(hi - 0.5))};
}

}  // namespace

void MetricThresholds::validate() const {
  if (!(iou_min > 0.0 && iou_min < 1.0)) {
    fail(ErrorCode::Config, "iou_min must lie in (0, 1)");
  }
  if (!(angle_max_deg > 0.0 && angle_max_deg <= 90.0)) {
    fail(ErrorCode::Config, "angle_max must lie in (0, 90] degrees");
  }
}

double wrap_angle(double radians) {
  double wrapped = radians - kPi * std::floor((radians + kPi / 2.0) / kPi);
  // Rounding can land exactly on the open end.
  if (wrapped >= kPi / 2.0) wrapped -= kPi;
  if (wrapped < -kPi / 2.0) wrapped += kPi;
  return wrapped;
}

double polygon_area(std::span<const Point> polygon) {
  double twice = 0.0;
  for (std::size_t i = 0; i < polygon.size(); ++i) {
    const Point& p = polygon[i];
    const Point& q = polygon[(i + 1) % polygon.size()];
    twice += p.col * q.row - q.col * p.row;
  }
  return std::abs(twice) / 2.0;
}

RectangleCheck check_rectangle(const GraspRectangle& rect) {
  const auto& v = rect.vertices;
  RectangleCheck check;
  check.area = polygon_area(v);
  for (const auto& p : v) {
    if (!std::isfinite(p.row) || !std::isfinite(p.col)) {
      check.degenerate = true;
      return check;
    }
  }
  double scale = std::max({distance(v[0], v[1]), distance(v[1], v[2]), 1e-12});
  if (check.area <= 1e-9 * scale * scale || distance(v[0], v[1]) <= 1e-9 ||
      distance(v[1], v[2]) <= 1e-9) {
    check.degenerate = true;
    return check;
  }
  check.max_skew = std::max(line_angle_between(direction(v[0], v[1]), direction(v[3], v[2])),
                            line_angle_between(direction(v[1], v[2]), direction(v[0], v[3])));
  check.skewed = check.max_skew > kSkewTolerance;
  return check;
}

double jaw_height(const GraspRectangle& rect) {
  const auto& v = rect.vertices;
  return 0.5 * (distance(v[1], v[2]) + distance(v[0], v[3]));
}

ImageGrasp rect_to_image_grasp(const GraspRectangle& rect) {
  if (check_rectangle(rect).degenerate) {
    fail(ErrorCode::InvalidGeometry, "degenerate grasp rectangle (zero area)");
  }
  const auto& v = rect.vertices;
  ImageGrasp g;
  for (const auto& p : v) {
    g.center.row += p.row / 4.0;
    g.center.col += p.col / 4.0;
  }
  g.angle = wrap_angle(direction(v[0], v[1]));
  g.width = 0.5 * (distance(v[0], v[1]) + distance(v[3], v[2]));
  g.quality = 1.0;
  return g;
}

GraspRectangle image_grasp_to_rect(const ImageGrasp& grasp, double jaw) {
  if (!(grasp.width > 0.0)) fail(ErrorCode::InvalidGeometry, "degenerate grasp (zero width)");
  if (!(jaw > 0.0)) fail(ErrorCode::InvalidArgument, "jaw height must be positive");
  // Opening axis and its normal in (row, col) components.
  const double s = std::sin(grasp.angle);
  const double c = std::cos(grasp.angle);
  const Point axis{-s * grasp.width / 2.0, c * grasp.width / 2.0};
  const Point normal{c * jaw / 2.0, s * jaw / 2.0};
  const Point& o = grasp.center;
  GraspRectangle rect;
  rect.vertices[0] = {o.row - axis.row - normal.row, o.col - axis.col - normal.col};
  rect.vertices[1] = {o.row + axis.row - normal.row, o.col + axis.col - normal.col};
  rect.vertices[2] = {o.row + axis.row + normal.row, o.col + axis.col + normal.col};
  rect.vertices[3] = {o.row - axis.row + normal.row, o.col - axis.col + normal.col};
  return rect;
}

GraspRectangle image_grasp_to_rect(const ImageGrasp& grasp) {
  return image_grasp_to_rect(grasp, grasp.width / 2.0);
}

double angle_from_components(double sin2, double cos2) {
  if (sin2 == 0.0 && cos2 == 0.0) {
    fail(ErrorCode::InvalidArgument, "angle undefined for zero (sin, cos) components");
  }
  return wrap_angle(0.5 * std::atan2(sin2, cos2));
}

double angle_offset_deg(double a, double b) {
  return line_angle_between(a, b) * 180.0 / kPi;
}

bool row_span(const GraspRectangle& rect, double y, double& col_min, double& col_max) {
  col_min = std::numeric_limits<double>::infinity();
  col_max = -std::numeric_limits<double>::infinity();
  const auto& v = rect.vertices;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Point& p = v[i];
    const Point& q = v[(i + 1) % v.size()];
    const double lo = std::min(p.row, q.row);
    const double hi = std::max(p.row, q.row);
    if (y < lo || y > hi) continue;
    if (p.row == q.row) {
      col_min = std::min({col_min, p.col, q.col});
      col_max = std::max({col_max, p.col, q.col});
      continue;
    }
    const double x = p.col + (y - p.row) * (q.col - p.col) / (q.row - p.row);
    col_min = std::min(col_min, x);
    col_max = std::max(col_max, x);
  }
  return col_min <= col_max;
}

double iou(const GraspRectangle& a, const GraspRectangle& b) {
  if (check_rectangle(a).degenerate || check_rectangle(b).degenerate) {
    fail(ErrorCode::InvalidGeometry, "iou of a degenerate rectangle");
  }
  const auto [a_lo, a_hi] = pixel_rows(a);
  const auto [b_lo, b_hi] = pixel_rows(b);
  long inter = 0;
  long uni = 0;
  for (long r = std::min(a_lo, b_lo); r <= std::max(a_hi, b_hi); ++r) {
    const IntRun ra = (r >= a_lo && r <= a_hi) ? pixel_run(a, r) : IntRun{};
    const IntRun rb = (r >= b_lo && r <= b_hi) ? pixel_run(b, r) : IntRun{};
    const IntRun both{std::max(ra.begin, rb.begin), std::min(ra.end, rb.end)};
    const long overlap = (ra.length() > 0 && rb.length() > 0) ? both.length() : 0;
    inter += overlap;
    uni += ra.length() + rb.length() - overlap;
  }
  if (uni == 0) fail(ErrorCode::InvalidGeometry, "iou undefined: union covers no pixel");
  return static_cast<double>(inter) / static_cast<double>(uni);
}

bool rectangle_metric(const ImageGrasp& prediction, std::span<const GraspRectangle> positives,
                      const MetricThresholds& thresholds) {
  if (positives.empty()) fail(ErrorCode::InvalidArgument, "rectangle metric needs positives");
  thresholds.validate();
  if (!(prediction.width > 0.0)) return false;
  const GraspRectangle predicted = image_grasp_to_rect(prediction);
  for (const auto& gt : positives) {
    if (check_rectangle(gt).degenerate) continue;
    const double offset = angle_offset_deg(prediction.angle, rect_to_image_grasp(gt).angle);
    if (offset >= thresholds.angle_max_deg) continue;
    double overlap = 0.0;
    try {
      overlap = iou(predicted, gt);
    } catch (const Error&) {
      continue;  // neither covers a pixel centre
    }
    if (overlap > thresholds.iou_min) return true;
  }
  return false;
}

}  // namespace ginet
