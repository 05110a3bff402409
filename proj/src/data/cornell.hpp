#pragma once

#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "core/grasp.hpp"
#include "core/grid.hpp"

namespace ginet::data {

/// One RGB-D scene with its annotated grasps. rgb is 8-bit RGB (not BGR),
/// depth is in metres.
struct SceneRecord {
  std::string id;
  cv::Mat rgb;
  Grid<float> depth;
  std::vector<GraspRectangle> positives;
  std::vector<GraspRectangle> negatives;

  int rows() const { return depth.rows(); }
  int cols() const { return depth.cols(); }
  void validate() const;
};

struct RectParseResult {
  std::vector<GraspRectangle> rects;
  int skipped_nan = 0;
  int flagged_skew = 0;
};

/// Cornell rectangle files: four "x y" lines (x = column, y = row) per
/// rectangle. Groups containing NaN are skipped and counted.
RectParseResult parse_rects(std::istream& in, const std::string& source = "<stream>");
RectParseResult parse_rect_file(const std::filesystem::path& path);

enum class DepthUnits { Auto, Metres, Millimetres };

/// ASCII point cloud to a depth image. Each point's `index` field is its
/// row-major pixel index; the depth is its z coordinate. Pixels without a
/// point are filled by inpaint_depth.
Grid<float> pcd_to_depth(std::istream& in, int rows, int cols, DepthUnits units = DepthUnits::Auto,
                         const std::string& source = "<stream>");
Grid<float> pcd_to_depth(const std::filesystem::path& path, int rows, int cols,
                         DepthUnits units = DepthUnits::Auto);

/// Iterative nearest-neighbour fill: each pass assigns every missing
/// (non-finite or <= 0) pixel that touches a valid one the mean of its valid
/// 8-neighbours. Returns the number of pixels filled; a map with no valid
/// pixel is left unchanged.
int inpaint_depth(Grid<float>& depth);

bool depth_valid(float d);

/// Loads an RGB image file as 8-bit RGB.
cv::Mat load_rgb(const std::filesystem::path& path);

// Raw Cornell layout, searched recursively:
//   pcdNNNNr.png, pcdNNNN.txt, pcdNNNNcpos.txt, pcdNNNNcneg.txt
struct RawScenePaths {
  std::string id;
  std::filesystem::path rgb;
  std::filesystem::path cloud;
  std::filesystem::path positives;
  std::filesystem::path negatives;
};

struct RawScan {
  std::vector<RawScenePaths> scenes;  // complete scenes sorted by id
  std::vector<std::string> missing;   // "pcdNNNN: missing <file>" entries
};

RawScan scan_raw_dataset(const std::filesystem::path& root);

SceneRecord load_raw_scene(const RawScenePaths& paths, DepthUnits units = DepthUnits::Auto);

// Preprocessed cache:
//   index.txt            text index, first line "ginet-cache <version>"
//   <id>.rgb.garr        uint8  h x w x 3
//   <id>.depth.garr      float32 h x w (metres, inpainted)
inline constexpr int kCacheVersion = 1;

struct CacheEntry {
  std::string id;
  int rows = 0;
  int cols = 0;
  std::vector<GraspRectangle> positives;
  std::vector<GraspRectangle> negatives;
};

struct CacheIndex {
  std::filesystem::path root;
  std::vector<CacheEntry> entries;

  const CacheEntry& find(const std::string& id) const;
  std::vector<std::string> ids() const;
};

void write_cache_scene(const std::filesystem::path& root, const SceneRecord& scene);
void write_cache_index(const std::filesystem::path& root, const std::vector<CacheEntry>& entries);
CacheIndex read_cache_index(const std::filesystem::path& root);
SceneRecord load_cached_scene(const CacheIndex& index, const std::string& id);

struct ConvertSummary {
  int scenes = 0;
  int positives = 0;
  int negatives = 0;
  int skipped_nan = 0;
  int flagged_skew = 0;
};

/// Converts a raw Cornell directory into a cache. Throws Io listing missing
/// files when the raw layout is incomplete or empty.
ConvertSummary convert_dataset(const std::filesystem::path& raw_root,
                               const std::filesystem::path& cache_root,
                               DepthUnits units = DepthUnits::Auto);

}  // namespace ginet::data
