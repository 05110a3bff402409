#include "core/array_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "core/error.hpp"

namespace ginet {

static_assert(std::endian::native == std::endian::little, "array container assumes little-endian");

namespace {

constexpr char kMagic[8] = {'G', 'I', 'N', 'E', 'T', 'A', 'R', 'R'};

template <typename T>
void put(std::ofstream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::ifstream& in, const std::filesystem::path& path) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    fail(ErrorCode::Parse, "truncated array header in " + path.string());
  }
  return value;
}

}  // namespace

std::size_t NdArray::element_count() const {
  std::size_t n = 1;
  for (auto d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

NdArray NdArray::from_floats(std::vector<std::uint64_t> shape, std::span<const float> values) {
  NdArray a;
  a.dtype = DType::Float32;
  a.shape = std::move(shape);
  if (a.element_count() != values.size()) fail(ErrorCode::Shape, "array shape/value mismatch");
  a.bytes.resize(values.size_bytes());
  std::memcpy(a.bytes.data(), values.data(), values.size_bytes());
  return a;
}

NdArray NdArray::from_bytes(std::vector<std::uint64_t> shape,
                            std::span<const std::uint8_t> values) {
  NdArray a;
  a.dtype = DType::UInt8;
  a.shape = std::move(shape);
  if (a.element_count() != values.size()) fail(ErrorCode::Shape, "array shape/value mismatch");
  a.bytes.resize(values.size());
  std::memcpy(a.bytes.data(), values.data(), values.size());
  return a;
}

std::vector<float> NdArray::floats() const {
  if (dtype != DType::Float32) fail(ErrorCode::Shape, "array is not float32");
  std::vector<float> out(element_count());
  std::memcpy(out.data(), bytes.data(), out.size() * sizeof(float));
  return out;
}

void write_array(const std::filesystem::path& path, const NdArray& array) {
  if (array.bytes.size() != array.element_count() * array.element_size()) {
    fail(ErrorCode::Shape, "array payload does not match its shape");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kArrayFormatVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(array.dtype));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(array.shape.size()));
  for (auto d : array.shape) put<std::uint64_t>(out, d);
  out.write(reinterpret_cast<const char*>(array.bytes.data()),
            static_cast<std::streamsize>(array.bytes.size()));
  if (!out) fail(ErrorCode::Io, "failed writing " + path.string());
}

NdArray read_array(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  char magic[8];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(magic)) != 0) {
    fail(ErrorCode::Parse, path.string() + " is not an array container");
  }
  const auto version = get<std::uint32_t>(in, path);
  if (version != kArrayFormatVersion) {
    fail(ErrorCode::Version, "unsupported array container version " + std::to_string(version));
  }
  NdArray a;
  const auto dtype = get<std::uint32_t>(in, path);
  if (dtype != 1 && dtype != 2) fail(ErrorCode::Parse, "unknown dtype in " + path.string());
  a.dtype = static_cast<DType>(dtype);
  const auto rank = get<std::uint32_t>(in, path);
  if (rank > 8) fail(ErrorCode::Parse, "implausible rank in " + path.string());
  for (std::uint32_t i = 0; i < rank; ++i) a.shape.push_back(get<std::uint64_t>(in, path));
  a.bytes.resize(a.element_count() * a.element_size());
  if (!in.read(reinterpret_cast<char*>(a.bytes.data()), static_cast<std::streamsize>(a.bytes.size()))) {
    fail(ErrorCode::Parse, "truncated array payload in " + path.string());
  }
  return a;
}

NdArray maps_to_array(const GraspMapSet& maps) {
  const std::size_t plane = maps.quality.size();
  std::vector<float> values(4 * plane);
  std::size_t offset = 0;
  for (const auto* g : {&maps.quality, &maps.sin2, &maps.cos2, &maps.width}) {
    if (g->size() != plane) fail(ErrorCode::Shape, "grasp maps must share one shape");
    std::memcpy(values.data() + offset, g->data(), plane * sizeof(float));
    offset += plane;
  }
  return NdArray::from_floats({4, static_cast<std::uint64_t>(maps.rows()),
                               static_cast<std::uint64_t>(maps.cols())},
                              values);
}

GraspMapSet maps_from_array(const NdArray& array) {
  if (array.dtype != DType::Float32 || array.shape.size() != 3 || array.shape[0] != 4) {
    fail(ErrorCode::Shape, "grasp maps must be a 4 x h x w float32 array");
  }
  const int rows = static_cast<int>(array.shape[1]);
  const int cols = static_cast<int>(array.shape[2]);
  GraspMapSet maps(rows, cols);
  const auto values = array.floats();
  const std::size_t plane = maps.quality.size();
  std::size_t offset = 0;
  for (auto* g : {&maps.quality, &maps.sin2, &maps.cos2, &maps.width}) {
    std::memcpy(g->data(), values.data() + offset, plane * sizeof(float));
    offset += plane;
  }
  return maps;
}

NdArray grid_to_array(const Grid<float>& grid) {
  return NdArray::from_floats(
      {static_cast<std::uint64_t>(grid.rows()), static_cast<std::uint64_t>(grid.cols())},
      grid.values());
}

Grid<float> grid_from_array(const NdArray& array) {
  if (array.dtype != DType::Float32 || array.shape.size() != 2) {
    fail(ErrorCode::Shape, "expected an h x w float32 array");
  }
  Grid<float> grid(static_cast<int>(array.shape[0]), static_cast<int>(array.shape[1]));
  const auto values = array.floats();
  std::memcpy(grid.data(), values.data(), values.size() * sizeof(float));
  return grid;
}

}  // namespace ginet
