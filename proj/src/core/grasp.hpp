#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

namespace ginet {

/// Pixel coordinate; rows grow downward, columns grow to the right.
struct Point {
  double row = 0.0;
  double col = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

/// Cornell-style rotated rectangle. Edge v0->v1 runs along the gripper
/// opening axis; edge v1->v2 spans the jaw.
struct GraspRectangle {
  std::array<Point, 4> vertices;
};

/// Grasp in the image frame: center (row, col), angle in [-pi/2, pi/2)
/// measured counter-clockwise as seen on screen, opening width in pixels and
/// a quality score in [0, 1].
struct ImageGrasp {
  Point center;
  double angle = 0.0;
  double width = 0.0;
  double quality = 0.0;
};

struct MetricThresholds {
  double iou_min = 0.25;
  double angle_max_deg = 30.0;

  void validate() const;
};

inline constexpr double kMaxGraspWidthPx = 150.0;

/// Wraps any angle into the half-open range [-pi/2, pi/2). A grasp is
/// symmetric under a half turn, so the period is pi.
double wrap_angle(double radians);

struct RectangleCheck {
  double area = 0.0;
  /// Largest angle (radians) between opposite edges.
  double max_skew = 0.0;
  bool degenerate = false;
  /// Skew beyond the tolerated 0.05 rad.
  bool skewed = false;
};

inline constexpr double kSkewTolerance = 0.05;

RectangleCheck check_rectangle(const GraspRectangle& rect);

double polygon_area(std::span<const Point> polygon);

/// Length of the jaw edge v1->v2 (mean with the opposite edge).
double jaw_height(const GraspRectangle& rect);

ImageGrasp rect_to_image_grasp(const GraspRectangle& rect);

GraspRectangle image_grasp_to_rect(const ImageGrasp& grasp, double jaw_height);

/// Uses the default jaw height of half the opening width.
GraspRectangle image_grasp_to_rect(const ImageGrasp& grasp);

/// Recovers the grasp angle from its (sin 2a, cos 2a) encoding.
double angle_from_components(double sin2, double cos2);

/// Orientation difference in degrees, in [0, 90].
double angle_offset_deg(double a, double b);

/// Closed-interval horizontal span of a convex polygon at a given row value.
/// Returns false when the line misses the polygon.
bool row_span(const GraspRectangle& rect, double y, double& col_min, double& col_max);

/// Visits every pixel (row, col) whose center (row + 0.5, col + 0.5) lies
/// inside the rectangle, clipped to [0, rows) x [0, cols) when rows/cols > 0.
template <typename Visit>
void rasterize(const GraspRectangle& rect, int rows, int cols, Visit&& visit);

/// Intersection over union counted on the integer pixel grid.
double iou(const GraspRectangle& a, const GraspRectangle& b);

/// True iff some positive rectangle has IOU above the minimum and an
/// orientation offset below the maximum. Zero-width predictions never pass.
bool rectangle_metric(const ImageGrasp& prediction,
                      std::span<const GraspRectangle> positives,
                      const MetricThresholds& thresholds = {});

// Implementation of the rasterizer template.

template <typename Visit>
void rasterize(const GraspRectangle& rect, int rows, int cols, Visit&& visit) {
  double min_row = rect.vertices[0].row;
  double max_row = min_row;
  for (const auto& v : rect.vertices) {
    min_row = v.row < min_row ? v.row : min_row;
    max_row = v.row > max_row ? v.row : max_row;
  }
  // Pixel centers sit at r + 0.5.
  long r_begin = static_cast<long>(std::ceil(min_row - 0.5));
  long r_end = static_cast<long>(std::floor(max_row - 0.5));
  if (rows > 0) {
    r_begin = std::max<long>(r_begin, 0);
    r_end = std::min<long>(r_end, rows - 1);
  }
  for (long r = r_begin; r <= r_end; ++r) {
    double lo = 0.0;
    double hi = 0.0;
    if (!row_span(rect, static_cast<double>(r) + 0.5, lo, hi)) continue;
    long c_begin = static_cast<long>(std::ceil(lo - 0.5));
    long c_end = static_cast<long>(std::floor(hi - 0.5));
    if (cols > 0) {
      c_begin = std::max<long>(c_begin, 0);
      c_end = std::min<long>(c_end, cols - 1);
    }
    for (long c = c_begin; c <= c_end; ++c) visit(static_cast<int>(r), static_cast<int>(c));
  }
}

}  // namespace ginet
