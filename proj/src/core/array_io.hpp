#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "core/grasp_maps.hpp"
#include "core/grid.hpp"

namespace ginet {

// Array container (".garr"), little-endian:
//   8 bytes  magic "GINETARR"
//   u32      format version (1)
//   u32      dtype (1 = float32, 2 = uint8)
//   u32      rank
//   u64      extent per axis, outermost first
//   payload  row-major elements
enum class DType : std::uint32_t { Float32 = 1, UInt8 = 2 };

inline constexpr std::uint32_t kArrayFormatVersion = 1;

struct NdArray {
  DType dtype = DType::Float32;
  std::vector<std::uint64_t> shape;
  std::vector<std::byte> bytes;

  std::size_t element_count() const;
  std::size_t element_size() const { return dtype == DType::Float32 ? 4 : 1; }

  static NdArray from_floats(std::vector<std::uint64_t> shape, std::span<const float> values);
  static NdArray from_bytes(std::vector<std::uint64_t> shape, std::span<const std::uint8_t> values);
  std::vector<float> floats() const;
};

void write_array(const std::filesystem::path& path, const NdArray& array);
NdArray read_array(const std::filesystem::path& path);

/// Serializes maps as a 4 x h x w float32 array, channels Q, sin2, cos2, width.
NdArray maps_to_array(const GraspMapSet& maps);
GraspMapSet maps_from_array(const NdArray& array);

NdArray grid_to_array(const Grid<float>& grid);
Grid<float> grid_from_array(const NdArray& array);

}  // namespace ginet
