#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

namespace ginet::testing {

struct SyntheticOptions {
  int scenes = 12;
  int rows = 240;
  int cols = 320;
  int positives_per_scene = 3;
  int negatives_per_scene = 2;
  std::uint64_t seed = 1;
  int first_index = 100;  // scene ids start at pcd0100
};

/// Writes a raw dataset in the Cornell layout: one bar-shaped object per
/// scene on a flat table, grasps across the bar as positives and along it as
/// negatives, point clouds in millimetres.
void write_synthetic_dataset(const std::filesystem::path& root, const SyntheticOptions& options = {});

}  // namespace ginet::testing

namespace ginet::testing {

/// Fresh empty directory under the system temp dir, unique per process.
std::filesystem::path scratch_dir(const std::string& name);

/// Whole file as bytes.
std::string read_file(const std::filesystem::path& path);

}  // namespace ginet::testing

namespace ginet::testing {

/// Converts a synthetic raw dataset into a cache under the temp dir and
/// returns the cache root. Same options, same bytes.
std::filesystem::path synthetic_cache(const std::string& name, const SyntheticOptions& options = {});

}  // namespace ginet::testing
