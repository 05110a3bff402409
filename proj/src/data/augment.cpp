#include "data/augment.hpp"

#include <cmath>
#include <numeric>

#include <opencv2/imgproc.hpp>

#include "core/error.hpp"
#include "core/random.hpp"

namespace ginet::data {

namespace {

cv::Mat warp(const cv::Mat& src, const Affine2& t, int size, int interpolation) {
  // OpenCV puts pixel centers on integers and works in (x = col, y = row);
  // our coordinates put them at +0.5.
  const auto& m = t.m;
  const double tr = m[2] + 0.5 * (m[0] + m[1]) - 0.5;
  const double tc = m[5] + 0.5 * (m[3] + m[4]) - 0.5;
  cv::Mat forward = (cv::Mat_<double>(2, 3) << m[4], m[3], tc, m[1], m[0], tr);
  cv::Mat out;
  cv::warpAffine(src, out, forward, cv::Size(size, size), interpolation, cv::BORDER_REFLECT_101);
  return out;
}

}  // namespace

Point Affine2::apply(const Point& p) const {
  return {m[0] * p.row + m[1] * p.col + m[2], m[3] * p.row + m[4] * p.col + m[5]};
}

GraspRectangle Affine2::apply(const GraspRectangle& rect) const {
  GraspRectangle out;
  for (std::size_t i = 0; i < 4; ++i) out.vertices[i] = apply(rect.vertices[i]);
  return out;
}

Affine2 Affine2::from_params(const AugmentParams& p) {
  const double c = std::cos(p.rotation) * p.zoom;
  const double s = std::sin(p.rotation) * p.zoom;
  const double half = p.size / 2.0;
  Affine2 t;
  // row' = c (r - r0) - s (col - c0) + half;  col' = s (r - r0) + c (col - c0) + half
  t.m = {c, -s, half - c * p.center.row + s * p.center.col,
         s, c, half - s * p.center.row - c * p.center.col};
  return t;
}

Point object_center(const std::vector<GraspRectangle>& positives, int rows, int cols) {
  if (positives.empty()) return {rows / 2.0, cols / 2.0};
  Point sum;
  for (const auto& r : positives) {
    for (const auto& v : r.vertices) {
      sum.row += v.row;
      sum.col += v.col;
    }
  }
  const double n = 4.0 * static_cast<double>(positives.size());
  return {sum.row / n, sum.col / n};
}

std::vector<GraspRectangle> transform_rects(const std::vector<GraspRectangle>& rects,
                                            const Affine2& transform, int size) {
  std::vector<GraspRectangle> out;
  for (const auto& r : rects) {
    const GraspRectangle moved = transform.apply(r);
    Point center;
    for (const auto& v : moved.vertices) {
      center.row += v.row / 4.0;
      center.col += v.col / 4.0;
    }
    if (center.row >= 0.0 && center.row < size && center.col >= 0.0 && center.col < size) {
      out.push_back(moved);
    }
  }
  return out;
}

SampledCrop sample_crop(const std::vector<GraspRectangle>& positives, int rows, int cols,
                        std::uint64_t seed, const AugmentRanges& ranges) {
  const Point anchor = object_center(positives, rows, cols);
  Rng rng(seed);
  for (int attempt = 0; attempt < ranges.max_attempts; ++attempt) {
    AugmentParams p;
    p.rotation = rng.uniform(ranges.rotation_min, ranges.rotation_max);
    p.zoom = rng.uniform(ranges.zoom_min, ranges.zoom_max);
    p.center = {anchor.row + rng.uniform(-ranges.jitter_px, ranges.jitter_px),
                anchor.col + rng.uniform(-ranges.jitter_px, ranges.jitter_px)};
    if (positives.empty() ||
        !transform_rects(positives, Affine2::from_params(p), p.size).empty()) {
      return {p, false};
    }
  }
  AugmentParams identity;
  identity.center = anchor;
  return {identity, true};
}

AugmentedScene augment_with(const SceneRecord& scene, const AugmentParams& params) {
  scene.validate();
  if (params.size <= 0 || !(params.zoom > 0.0)) fail(ErrorCode::InvalidArgument, "invalid crop parameters");
  AugmentedScene out;
  out.params = params;
  out.transform = Affine2::from_params(params);
  out.scene.id = scene.id;
  out.scene.rgb = warp(scene.rgb, out.transform, params.size, cv::INTER_LINEAR);
  cv::Mat depth(scene.depth.rows(), scene.depth.cols(), CV_32F,
                const_cast<float*>(scene.depth.data()));
  cv::Mat warped = warp(depth, out.transform, params.size, cv::INTER_LINEAR);
  out.scene.depth = Grid<float>(params.size, params.size);
  for (int r = 0; r < params.size; ++r)
    for (int c = 0; c < params.size; ++c) out.scene.depth(r, c) = warped.at<float>(r, c);
  out.scene.positives = transform_rects(scene.positives, out.transform, params.size);
  out.scene.negatives = transform_rects(scene.negatives, out.transform, params.size);
  return out;
}

AugmentedScene augment(const SceneRecord& scene, std::uint64_t seed, const AugmentRanges& ranges) {
  const SampledCrop crop = sample_crop(scene.positives, scene.rows(), scene.cols(), seed, ranges);
  AugmentedScene out = augment_with(scene, crop.params);
  out.fell_back = crop.fell_back;
  return out;
}

AugmentedScene center_crop(const SceneRecord& scene) {
  AugmentParams p;
  p.center = object_center(scene.positives, scene.rows(), scene.cols());
  return augment_with(scene, p);
}

InputTensor normalize_input(const SceneRecord& scene, InputMode mode) {
  scene.validate();
  const int rows = scene.rows();
  const int cols = scene.cols();
  const std::size_t plane = static_cast<std::size_t>(rows) * cols;
  InputTensor t;
  t.channels = channel_count(mode);
  t.rows = rows;
  t.cols = cols;
  t.data.assign(t.channels * plane, 0.0f);

  double rgb_sum = 0.0;
  for (int r = 0; r < rows; ++r) {
    const auto* px = scene.rgb.ptr<cv::Vec3b>(r);
    for (int c = 0; c < cols; ++c) {
      for (int k = 0; k < 3; ++k) {
        const float v = px[c][k] / 255.0f;
        t.data[k * plane + static_cast<std::size_t>(r) * cols + c] = v;
        rgb_sum += v;
      }
    }
  }
  const auto rgb_mean = static_cast<float>(rgb_sum / (3.0 * static_cast<double>(plane)));
  for (std::size_t i = 0; i < 3 * plane; ++i) t.data[i] -= rgb_mean;

  if (mode == InputMode::Rgbd) {
    Grid<float> depth = scene.depth;
    inpaint_depth(depth);
    double sum = 0.0;
    std::size_t valid = 0;
    for (float v : depth.values()) {
      if (depth_valid(v)) {
        sum += v;
        ++valid;
      }
    }
    if (valid == 0) fail(ErrorCode::InvalidScene, "scene " + scene.id + " has no valid depth");
    const double mean = sum / static_cast<double>(valid);
    float* d = t.data.data() + 3 * plane;
    for (std::size_t i = 0; i < plane; ++i) {
      d[i] = static_cast<float>(std::clamp(static_cast<double>(depth.values()[i]) - mean, -1.0, 1.0));
    }
  }
  return t;
}

long augmented_grasp_count(const CacheIndex& index, int multiplicity, std::uint64_t seed,
                           const AugmentRanges& ranges) {
  long total = 0;
  for (const auto& e : index.entries) {
    for (int k = 0; k < multiplicity; ++k) {
      const auto crop = sample_crop(e.positives, e.rows, e.cols,
                                    derive_seed(seed, e.id, static_cast<std::uint64_t>(k)), ranges);
      total += static_cast<long>(
          transform_rects(e.positives, Affine2::from_params(crop.params), crop.params.size).size());
    }
  }
  return total;
}

}  // namespace ginet::data
