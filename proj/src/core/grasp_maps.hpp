#pragma once

#include <span>
#include <vector>

#include "core/grasp.hpp"
#include "core/grid.hpp"

namespace ginet {

/// Per-pixel grasp maps. Width is stored normalized by kMaxGraspWidthPx.
struct GraspMapSet {
  Grid<float> quality;
  Grid<float> sin2;
  Grid<float> cos2;
  Grid<float> width;

  GraspMapSet() = default;
  GraspMapSet(int rows, int cols)
      : quality(rows, cols), sin2(rows, cols), cos2(rows, cols), width(rows, cols) {}

  int rows() const { return quality.rows(); }
  int cols() const { return quality.cols(); }

  /// Throws Shape on mismatched arrays and InvalidArgument on out-of-range
  /// quality or angle components.
  void validate() const;
};

/// Fills Q/sin/cos/width over the central third (along the opening axis) of
/// every rectangle. Later rectangles overwrite earlier ones.
GraspMapSet encode_target_maps(std::span<const GraspRectangle> rects, int rows, int cols);

struct DecodeOptions {
  double smoothing_sigma = 2.0;
  /// Minimum center-to-center distance between returned peaks, in pixels.
  int min_distance = 5;
  /// A peak is reported at the middle of the connected pixels whose smoothed
  /// quality is within this fraction of the peak value, so nearly flat tops
  /// are not reported at an arbitrary ripple. Rasterized thin strips leave a
  /// staircase ripple of a few percent along the ridge, hence 0.1.
  double plateau_tolerance = 0.1;
};

/// Separable Gaussian blur with mirrored borders.
Grid<float> gaussian_smooth(const Grid<float>& image, double sigma);

/// Top-k grasps at local maxima of the smoothed quality map, best first.
std::vector<ImageGrasp> decode_grasps(const GraspMapSet& maps, int k,
                                      const DecodeOptions& options = {});

}  // namespace ginet
