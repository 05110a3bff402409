#include "core/grasp_maps.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <tuple>

#include "core/error.hpp"

namespace ginet {

namespace {

int mirror_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

std::vector<float> gaussian_kernel(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(4.0 * sigma)));
  std::vector<float> kernel(2 * radius + 1);
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
    kernel[i + radius] = static_cast<float>(v);
    total += v;
  }
  for (auto& v : kernel) v = static_cast<float>(v / total);
  return kernel;
}

struct Peak {
  int row;
  int col;
  float value;
};

// Regional maxima: 8-connected plateaus of equal value with no higher
// neighbour and at least one lower one. Each is represented by its member
// closest to the plateau centroid.
std::vector<Peak> regional_maxima(const Grid<float>& q) {
  const int rows = q.rows();
  const int cols = q.cols();
  Grid<unsigned char> seen(rows, cols, 0);
  std::vector<Peak> peaks;
  std::vector<std::pair<int, int>> members;
  std::vector<std::pair<int, int>> stack;
  for (int r0 = 0; r0 < rows; ++r0) {
    for (int c0 = 0; c0 < cols; ++c0) {
      if (seen(r0, c0)) continue;
      const float v = q(r0, c0);
      bool higher = false;
      bool lower = false;
      members.clear();
      stack.assign(1, {r0, c0});
      seen(r0, c0) = 1;
      while (!stack.empty()) {
        const auto [r, c] = stack.back();
        stack.pop_back();
        members.emplace_back(r, c);
        for (int dr = -1; dr <= 1; ++dr) {
          for (int dc = -1; dc <= 1; ++dc) {
            const int nr = r + dr;
            const int nc = c + dc;
            if ((dr == 0 && dc == 0) || !q.contains(nr, nc)) continue;
            const float n = q(nr, nc);
            if (n > v) {
              higher = true;
            } else if (n < v) {
              lower = true;
            } else if (!seen(nr, nc)) {
              seen(nr, nc) = 1;
              stack.emplace_back(nr, nc);
            }
          }
        }
      }
      if (higher || !lower) continue;
      double mean_r = 0.0;
      double mean_c = 0.0;
      for (const auto& [r, c] : members) {
        mean_r += r;
        mean_c += c;
      }
      mean_r /= static_cast<double>(members.size());
      mean_c /= static_cast<double>(members.size());
      std::pair<int, int> best = members.front();
      double best_d = std::numeric_limits<double>::infinity();
      for (const auto& m : members) {
        const double d = (m.first - mean_r) * (m.first - mean_r) +
                         (m.second - mean_c) * (m.second - mean_c);
        if (d < best_d || (d == best_d && m < best)) {
          best_d = d;
          best = m;
        }
      }
      peaks.push_back({best.first, best.second, v});
    }
  }
  return peaks;
}

// Moves a peak to the middle of the 8-connected pixels around it whose value
// is at least (1 - tolerance) times the peak value. The peak keeps its value.
Peak settle_on_plateau(const Grid<float>& q, const Peak& peak, double tolerance) {
  if (!(tolerance > 0.0)) return peak;
  const double floor_value = static_cast<double>(peak.value) * (1.0 - tolerance);
  Grid<unsigned char> seen(q.rows(), q.cols(), 0);
  std::vector<std::pair<int, int>> members;
  std::vector<std::pair<int, int>> stack{{peak.row, peak.col}};
  seen(peak.row, peak.col) = 1;
  while (!stack.empty()) {
    const auto [r, c] = stack.back();
    stack.pop_back();
    members.emplace_back(r, c);
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        const int nr = r + dr;
        const int nc = c + dc;
        if (!q.contains(nr, nc) || seen(nr, nc) || q(nr, nc) < floor_value) continue;
        seen(nr, nc) = 1;
        stack.emplace_back(nr, nc);
      }
    }
  }
  double mean_r = 0.0;
  double mean_c = 0.0;
  for (const auto& [r, c] : members) {
    mean_r += r;
    mean_c += c;
  }
  mean_r /= static_cast<double>(members.size());
  mean_c /= static_cast<double>(members.size());
  std::pair<int, int> best{peak.row, peak.col};
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& m : members) {
    const double d = (m.first - mean_r) * (m.first - mean_r) + (m.second - mean_c) * (m.second - mean_c);
    if (d < best_d || (d == best_d && m < best)) {
      best_d = d;
      best = m;
    }
  }
  return {best.first, best.second, peak.value};
}

ImageGrasp grasp_at(const GraspMapSet& maps, const Grid<float>& smoothed, int r, int c) {
  ImageGrasp g;
  // Pixel (r, c) covers [r, r + 1) x [c, c + 1); report its center.
  g.center = {r + 0.5, c + 0.5};
  const double s = maps.sin2(r, c);
  const double co = maps.cos2(r, c);
  g.angle = (s == 0.0 && co == 0.0) ? 0.0 : angle_from_components(s, co);
  g.width = std::clamp(static_cast<double>(maps.width(r, c)), 0.0, 1.0) * kMaxGraspWidthPx;
  g.quality = std::clamp(static_cast<double>(smoothed(r, c)), 0.0, 1.0);
  return g;
}

}  // namespace

void GraspMapSet::validate() const {
  if (!quality.same_shape(sin2) || !quality.same_shape(cos2) || !quality.same_shape(width)) {
    fail(ErrorCode::Shape, "grasp maps must share one shape");
  }
  for (float v : quality.values()) {
    if (!(v >= 0.0f && v <= 1.0f)) fail(ErrorCode::InvalidArgument, "quality outside [0, 1]");
  }
  for (const auto* grid : {&sin2, &cos2}) {
    for (float v : grid->values()) {
      if (!(v >= -1.0f && v <= 1.0f)) {
        fail(ErrorCode::InvalidArgument, "angle component outside [-1, 1]");
      }
    }
  }
}

GraspMapSet encode_target_maps(std::span<const GraspRectangle> rects, int rows, int cols) {
  if (rows <= 0 || cols <= 0) fail(ErrorCode::Shape, "target maps need a positive shape");
  GraspMapSet maps(rows, cols);
  for (const auto& rect : rects) {
    const ImageGrasp g = rect_to_image_grasp(rect);
    ImageGrasp core = g;
    core.width = g.width / 3.0;
    const GraspRectangle region = image_grasp_to_rect(core, jaw_height(rect));
    const float s = static_cast<float>(std::sin(2.0 * g.angle));
    const float c = static_cast<float>(std::cos(2.0 * g.angle));
    const float w = static_cast<float>(std::clamp(g.width / kMaxGraspWidthPx, 0.0, 1.0));
    rasterize(region, rows, cols, [&](int r, int col) {
      maps.quality(r, col) = 1.0f;
      maps.sin2(r, col) = s;
      maps.cos2(r, col) = c;
      maps.width(r, col) = w;
    });
  }
  return maps;
}

Grid<float> gaussian_smooth(const Grid<float>& image, double sigma) {
  if (!(sigma > 0.0)) return image;
  const auto kernel = gaussian_kernel(sigma);
  const int radius = static_cast<int>(kernel.size() / 2);
  const int rows = image.rows();
  const int cols = image.cols();
  Grid<float> tmp(rows, cols);
  Grid<float> out(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        acc += kernel[k + radius] * image(r, mirror_index(c + k, cols));
      }
      tmp(r, c) = static_cast<float>(acc);
    }
  }
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        acc += kernel[k + radius] * tmp(mirror_index(r + k, rows), c);
      }
      out(r, c) = static_cast<float>(acc);
    }
  }
  return out;
}

std::vector<ImageGrasp> decode_grasps(const GraspMapSet& maps, int k,
                                      const DecodeOptions& options) {
  if (k < 1) fail(ErrorCode::InvalidArgument, "decode_grasps needs k >= 1");
  if (!maps.quality.same_shape(maps.sin2) || !maps.quality.same_shape(maps.cos2) ||
      !maps.quality.same_shape(maps.width) || maps.quality.empty()) {
    fail(ErrorCode::Shape, "grasp maps must share one non-empty shape");
  }
  const Grid<float> smoothed = gaussian_smooth(maps.quality, options.smoothing_sigma);
  std::vector<Peak> candidates = regional_maxima(smoothed);
  for (auto& p : candidates) p = settle_on_plateau(smoothed, p, options.plateau_tolerance);
  std::sort(candidates.begin(), candidates.end(), [](const Peak& a, const Peak& b) {
    return std::tie(b.value, a.row, a.col) < std::tie(a.value, b.row, b.col);
  });

  std::vector<Peak> chosen;
  const double min_d2 = static_cast<double>(options.min_distance) * options.min_distance;
  for (const auto& p : candidates) {
    if (static_cast<int>(chosen.size()) == k) break;
    const bool clear = std::none_of(chosen.begin(), chosen.end(), [&](const Peak& q) {
      const double dr = p.row - q.row;
      const double dc = p.col - q.col;
      return dr * dr + dc * dc < min_d2;
    });
    if (clear) chosen.push_back(p);
  }
  if (chosen.empty()) {
    // Flat map: global argmax, first in (row, col) order.
    Peak best{0, 0, smoothed(0, 0)};
    for (int r = 0; r < smoothed.rows(); ++r) {
      for (int c = 0; c < smoothed.cols(); ++c) {
        if (smoothed(r, c) > best.value) best = {r, c, smoothed(r, c)};
      }
    }
    chosen.push_back(best);
  }

  std::vector<ImageGrasp> grasps;
  grasps.reserve(chosen.size());
  for (const auto& p : chosen) grasps.push_back(grasp_at(maps, smoothed, p.row, p.col));
  return grasps;
}

}  // namespace ginet
