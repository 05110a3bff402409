#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "core/grasp.hpp"
#include "data/cornell.hpp"

namespace ginet::data {

inline constexpr int kInputSize = 224;

/// Similarity transform parameters for one crop.
struct AugmentParams {
  double rotation = 0.0;  // radians, counter-clockwise on screen
  double zoom = 1.0;
  Point center;           // source point mapped to the crop center
  int size = kInputSize;
};

/// Maps source (row, col) to crop coordinates:
///   p' = zoom * R(rotation) * (p - center) + (size / 2, size / 2)
struct Affine2 {
  std::array<double, 6> m{};  // row' = m0 r + m1 c + m2; col' = m3 r + m4 c + m5

  Point apply(const Point& p) const;
  GraspRectangle apply(const GraspRectangle& rect) const;
  static Affine2 from_params(const AugmentParams& params);
};

struct AugmentRanges {
  double rotation_min = -std::numbers::pi / 2.0;
  double rotation_max = std::numbers::pi / 2.0;
  double zoom_min = 0.85;
  double zoom_max = 1.15;
  double jitter_px = 20.0;
  int max_attempts = 10;
};

struct AugmentedScene {
  SceneRecord scene;
  AugmentParams params;
  Affine2 transform;
  bool fell_back = false;  // every sampled crop lost all positives
};

/// Centroid of the positive rectangle centers (image center if none).
Point object_center(const std::vector<GraspRectangle>& positives, int rows, int cols);

struct SampledCrop {
  AugmentParams params;
  bool fell_back = false;
};

/// The crop sampler behind augment(); needs only the annotation geometry.
SampledCrop sample_crop(const std::vector<GraspRectangle>& positives, int rows, int cols,
                        std::uint64_t seed, const AugmentRanges& ranges = {});

/// Transformed rectangles whose center stays inside the crop.
std::vector<GraspRectangle> transform_rects(const std::vector<GraspRectangle>& rects,
                                            const Affine2& transform, int size);

/// Applies a fixed transform. Rectangles whose center leaves the crop are
/// dropped.
AugmentedScene augment_with(const SceneRecord& scene, const AugmentParams& params);

/// Samples a random crop. Draws that keep no positive rectangle are redrawn
/// up to max_attempts times before falling back to the untransformed crop
/// about the object center.
AugmentedScene augment(const SceneRecord& scene, std::uint64_t seed, const AugmentRanges& ranges = {});

/// Unaugmented crop about the object center.
AugmentedScene center_crop(const SceneRecord& scene);

enum class InputMode { Rgbd, Rgb };

inline int channel_count(InputMode mode) { return mode == InputMode::Rgbd ? 4 : 3; }

/// Channel-major network input (R, G, B[, D]).
struct InputTensor {
  int channels = 0;
  int rows = 0;
  int cols = 0;
  std::vector<float> data;
  AugmentParams params;
};

/// RGB scaled to [0, 1] and centered on the image mean; depth inpainted,
/// centered on its mean and clipped to [-1, 1].
InputTensor normalize_input(const SceneRecord& scene, InputMode mode);

/// Total positives surviving `multiplicity` augmented copies of every scene.
long augmented_grasp_count(const CacheIndex& index, int multiplicity, std::uint64_t seed,
                           const AugmentRanges& ranges = {});

}  // namespace ginet::data
