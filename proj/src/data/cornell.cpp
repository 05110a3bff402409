#include "data/cornell.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <regex>
#include <sstream>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "core/array_io.hpp"
#include "core/error.hpp"

namespace ginet::data {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> tokens;
  std::string t;
  while (in >> t) tokens.push_back(t);
  return tokens;
}

bool parse_real(const std::string& token, double& value) {
  const char* begin = token.c_str();
  char* end = nullptr;
  value = std::strtod(begin, &end);
  return end != begin && *end == '\0';
}

std::string format_real(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::ifstream open_or_fail(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  return in;
}

void write_rect_line(std::ostream& out, char tag, const GraspRectangle& rect) {
  out << tag;
  for (const auto& v : rect.vertices) out << ' ' << format_real(v.row) << ' ' << format_real(v.col);
  out << '\n';
}

}  // namespace

void SceneRecord::validate() const {
  if (rgb.empty() || depth.empty()) fail(ErrorCode::InvalidScene, "scene " + id + " has no image");
  if (rgb.type() != CV_8UC3) fail(ErrorCode::InvalidScene, "scene " + id + " rgb must be 8-bit, 3 channels");
  if (rgb.rows != depth.rows() || rgb.cols != depth.cols()) {
    fail(ErrorCode::Shape, "scene " + id + " rgb and depth shapes differ");
  }
}

bool depth_valid(float d) { return std::isfinite(d) && d > 0.0f; }

RectParseResult parse_rects(std::istream& in, const std::string& source) {
  RectParseResult result;
  std::string line;
  int line_no = 0;
  std::vector<Point> group;
  bool group_has_nan = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    double x = 0.0;
    double y = 0.0;
    if (tokens.size() != 2 || !parse_real(tokens[0], x) || !parse_real(tokens[1], y)) {
      fail(ErrorCode::Parse, source + ":" + std::to_string(line_no) + ": expected 'x y', got '" + line + "'");
    }
    if (std::isnan(x) || std::isnan(y)) group_has_nan = true;
    group.push_back({y, x});
    if (group.size() == 4) {
      if (group_has_nan) {
        ++result.skipped_nan;
      } else {
        GraspRectangle rect;
        std::copy(group.begin(), group.end(), rect.vertices.begin());
        const auto check = check_rectangle(rect);
        if (check.degenerate) {
          fail(ErrorCode::InvalidGeometry,
               source + ":" + std::to_string(line_no) + ": degenerate rectangle");
        }
        if (check.skewed) ++result.flagged_skew;
        result.rects.push_back(rect);
      }
      group.clear();
      group_has_nan = false;
    }
  }
  if (!group.empty()) {
    fail(ErrorCode::Parse, source + ":" + std::to_string(line_no) +
                               ": point count is not a multiple of four");
  }
  return result;
}

RectParseResult parse_rect_file(const fs::path& path) {
  auto in = open_or_fail(path);
  return parse_rects(in, path.string());
}

Grid<float> pcd_to_depth(std::istream& in, int rows, int cols, DepthUnits units,
                         const std::string& source) {
  if (rows <= 0 || cols <= 0) fail(ErrorCode::Shape, "depth shape must be positive");
  std::vector<std::string> fields;
  bool data_ascii = false;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tokens = split_ws(line);
    if (tokens.empty() || tokens[0][0] == '#') continue;
    if (tokens[0] == "FIELDS") {
      fields.assign(tokens.begin() + 1, tokens.end());
    } else if (tokens[0] == "DATA") {
      if (tokens.size() < 2 || tokens[1] != "ascii") {
        fail(ErrorCode::Parse, source + ": only ascii point clouds are supported");
      }
      data_ascii = true;
      break;
    }
  }
  if (!data_ascii || fields.empty()) {
    fail(ErrorCode::Parse, source + ": missing point-cloud header (FIELDS/DATA)");
  }
  auto field_pos = [&](const std::string& name) -> int {
    auto it = std::find(fields.begin(), fields.end(), name);
    return it == fields.end() ? -1 : static_cast<int>(it - fields.begin());
  };
  const int z_at = field_pos("z");
  const int index_at = field_pos("index");
  if (z_at < 0 || index_at < 0) {
    fail(ErrorCode::Parse, source + ": point cloud needs 'z' and 'index' fields");
  }

  Grid<float> depth(rows, cols, std::numeric_limits<float>::quiet_NaN());
  std::vector<std::pair<long, double>> points;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    if (tokens.size() != fields.size()) {
      fail(ErrorCode::Parse, source + ":" + std::to_string(line_no) + ": expected " +
                                 std::to_string(fields.size()) + " values");
    }
    double z = 0.0;
    double index = 0.0;
    if (!parse_real(tokens[static_cast<std::size_t>(z_at)], z) ||
        !parse_real(tokens[static_cast<std::size_t>(index_at)], index)) {
      fail(ErrorCode::Parse, source + ":" + std::to_string(line_no) + ": malformed point");
    }
    if (!std::isfinite(z)) continue;
    points.emplace_back(static_cast<long>(index), z);
  }

  double scale = 1.0;
  if (units == DepthUnits::Millimetres) {
    scale = 1e-3;
  } else if (units == DepthUnits::Auto && !points.empty()) {
    std::vector<double> zs;
    zs.reserve(points.size());
    for (const auto& p : points) zs.push_back(std::abs(p.second));
    std::nth_element(zs.begin(), zs.begin() + static_cast<long>(zs.size() / 2), zs.end());
    if (zs[zs.size() / 2] > 10.0) scale = 1e-3;
  }
  for (const auto& [index, z] : points) {
    if (index < 0 || index >= static_cast<long>(rows) * cols) {
      fail(ErrorCode::Parse, source + ": pixel index " + std::to_string(index) + " outside image");
    }
    depth(static_cast<int>(index / cols), static_cast<int>(index % cols)) = static_cast<float>(z * scale);
  }
  inpaint_depth(depth);
  return depth;
}

Grid<float> pcd_to_depth(const fs::path& path, int rows, int cols, DepthUnits units) {
  auto in = open_or_fail(path);
  return pcd_to_depth(in, rows, cols, units, path.string());
}

int inpaint_depth(Grid<float>& depth) {
  const int rows = depth.rows();
  const int cols = depth.cols();
  int filled = 0;
  bool any_valid = false;
  for (float v : depth.values()) any_valid = any_valid || depth_valid(v);
  if (!any_valid) return 0;

  std::vector<std::pair<int, int>> pending;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      if (!depth_valid(depth(r, c))) pending.emplace_back(r, c);

  std::vector<std::pair<std::pair<int, int>, float>> updates;
  while (!pending.empty()) {
    updates.clear();
    std::vector<std::pair<int, int>> still;
    for (const auto& [r, c] : pending) {
      double sum = 0.0;
      int n = 0;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          if ((dr == 0 && dc == 0) || !depth.contains(r + dr, c + dc)) continue;
          const float v = depth(r + dr, c + dc);
          if (depth_valid(v)) {
            sum += v;
            ++n;
          }
        }
      }
      if (n > 0) {
        updates.push_back({{r, c}, static_cast<float>(sum / n)});
      } else {
        still.emplace_back(r, c);
      }
    }
    for (const auto& [pos, v] : updates) depth(pos.first, pos.second) = v;
    filled += static_cast<int>(updates.size());
    pending.swap(still);
  }
  return filled;
}

cv::Mat load_rgb(const fs::path& path) {
  cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) fail(ErrorCode::Decode, "cannot decode image " + path.string());
  cv::Mat rgb;
  cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  return rgb;
}

RawScan scan_raw_dataset(const fs::path& root) {
  if (!fs::is_directory(root)) fail(ErrorCode::Io, "dataset directory not found: " + root.string());
  static const std::regex pattern(R"(pcd(\d{4})(r\.png|\.txt|cpos\.txt|cneg\.txt))");
  std::map<std::string, RawScenePaths> found;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    std::smatch m;
    if (!std::regex_match(name, m, pattern)) continue;
    const std::string id = "pcd" + m[1].str();
    auto& paths = found[id];
    paths.id = id;
    const std::string kind = m[2].str();
    if (kind == "r.png") paths.rgb = entry.path();
    else if (kind == ".txt") paths.cloud = entry.path();
    else if (kind == "cpos.txt") paths.positives = entry.path();
    else paths.negatives = entry.path();
  }
  RawScan scan;
  for (auto& [id, paths] : found) {
    std::vector<std::string> missing;
    if (paths.rgb.empty()) missing.push_back(id + "r.png");
    if (paths.cloud.empty()) missing.push_back(id + ".txt");
    if (paths.positives.empty()) missing.push_back(id + "cpos.txt");
    if (paths.negatives.empty()) missing.push_back(id + "cneg.txt");
    for (const auto& m : missing) scan.missing.push_back(id + ": missing " + m);
    if (missing.empty()) scan.scenes.push_back(paths);
  }
  return scan;
}

SceneRecord load_raw_scene(const RawScenePaths& paths, DepthUnits units) {
  SceneRecord scene;
  scene.id = paths.id;
  scene.rgb = load_rgb(paths.rgb);
  scene.depth = pcd_to_depth(paths.cloud, scene.rgb.rows, scene.rgb.cols, units);
  scene.positives = parse_rect_file(paths.positives).rects;
  scene.negatives = parse_rect_file(paths.negatives).rects;
  scene.validate();
  return scene;
}

const CacheEntry& CacheIndex::find(const std::string& id) const {
  for (const auto& e : entries)
    if (e.id == id) return e;
  fail(ErrorCode::InvalidArgument, "scene " + id + " not in cache " + root.string());
}

std::vector<std::string> CacheIndex::ids() const {
  std::vector<std::string> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.id);
  return out;
}

void write_cache_scene(const fs::path& root, const SceneRecord& scene) {
  scene.validate();
  fs::create_directories(root);
  cv::Mat rgb = scene.rgb.isContinuous() ? scene.rgb : scene.rgb.clone();
  const auto* bytes = rgb.ptr<std::uint8_t>(0);
  write_array(root / (scene.id + ".rgb.garr"),
              NdArray::from_bytes({static_cast<std::uint64_t>(rgb.rows),
                                   static_cast<std::uint64_t>(rgb.cols), 3},
                                  std::span<const std::uint8_t>(bytes, rgb.total() * 3)));
  write_array(root / (scene.id + ".depth.garr"), grid_to_array(scene.depth));
}

void write_cache_index(const fs::path& root, const std::vector<CacheEntry>& entries) {
  fs::create_directories(root);
  std::ofstream out(root / "index.txt", std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write cache index in " + root.string());
  out << "ginet-cache " << kCacheVersion << '\n';
  out << "scenes " << entries.size() << '\n';
  for (const auto& e : entries) {
    out << "scene " << e.id << ' ' << e.rows << ' ' << e.cols << ' ' << e.positives.size() << ' '
        << e.negatives.size() << '\n';
    for (const auto& r : e.positives) write_rect_line(out, 'p', r);
    for (const auto& r : e.negatives) write_rect_line(out, 'n', r);
  }
  if (!out) fail(ErrorCode::Io, "failed writing cache index in " + root.string());
}

CacheIndex read_cache_index(const fs::path& root) {
  const fs::path path = root / "index.txt";
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "no cache index at " + path.string());
  CacheIndex index;
  index.root = root;
  std::string line;
  int line_no = 0;
  auto bad = [&](const std::string& what) {
    fail(ErrorCode::Parse, path.string() + ":" + std::to_string(line_no) + ": " + what);
  };
  std::getline(in, line);
  ++line_no;
  {
    const auto t = split_ws(line);
    if (t.size() != 2 || t[0] != "ginet-cache") bad("not a cache index");
    if (t[1] != std::to_string(kCacheVersion)) {
      fail(ErrorCode::Version, "cache version " + t[1] + " unsupported (expected " +
                                   std::to_string(kCacheVersion) + ")");
    }
  }
  std::size_t expected = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = split_ws(line);
    if (t.empty()) continue;
    if (t[0] == "scenes" && t.size() == 2) {
      expected = std::stoul(t[1]);
    } else if (t[0] == "scene" && t.size() == 6) {
      CacheEntry e;
      e.id = t[1];
      e.rows = std::stoi(t[2]);
      e.cols = std::stoi(t[3]);
      index.entries.push_back(std::move(e));
    } else if ((t[0] == "p" || t[0] == "n") && t.size() == 9 && !index.entries.empty()) {
      GraspRectangle rect;
      for (int i = 0; i < 4; ++i) {
        double r = 0.0;
        double c = 0.0;
        if (!parse_real(t[static_cast<std::size_t>(1 + 2 * i)], r) ||
            !parse_real(t[static_cast<std::size_t>(2 + 2 * i)], c)) {
          bad("malformed rectangle");
        }
        rect.vertices[static_cast<std::size_t>(i)] = {r, c};
      }
      (t[0] == "p" ? index.entries.back().positives : index.entries.back().negatives).push_back(rect);
    } else {
      bad("unrecognised record '" + line + "'");
    }
  }
  if (index.entries.size() != expected) bad("scene count does not match header");
  return index;
}

SceneRecord load_cached_scene(const CacheIndex& index, const std::string& id) {
  const CacheEntry& e = index.find(id);
  SceneRecord scene;
  scene.id = e.id;
  const NdArray rgb = read_array(index.root / (id + ".rgb.garr"));
  if (rgb.dtype != DType::UInt8 || rgb.shape.size() != 3 || rgb.shape[2] != 3 ||
      static_cast<int>(rgb.shape[0]) != e.rows || static_cast<int>(rgb.shape[1]) != e.cols) {
    fail(ErrorCode::Shape, "cached rgb for " + id + " has an unexpected shape");
  }
  scene.rgb = cv::Mat(e.rows, e.cols, CV_8UC3);
  std::memcpy(scene.rgb.data, rgb.bytes.data(), rgb.bytes.size());
  scene.depth = grid_from_array(read_array(index.root / (id + ".depth.garr")));
  scene.positives = e.positives;
  scene.negatives = e.negatives;
  scene.validate();
  return scene;
}

ConvertSummary convert_dataset(const fs::path& raw_root, const fs::path& cache_root, DepthUnits units) {
  const RawScan scan = scan_raw_dataset(raw_root);
  if (!scan.missing.empty()) {
    std::string msg = "incomplete dataset:";
    for (const auto& m : scan.missing) msg += "\n  " + m;
    fail(ErrorCode::Io, msg);
  }
  if (scan.scenes.empty()) fail(ErrorCode::Io, "no Cornell scenes found under " + raw_root.string());

  ConvertSummary summary;
  std::vector<CacheEntry> entries;
  for (const auto& paths : scan.scenes) {
    SceneRecord scene;
    scene.id = paths.id;
    scene.rgb = load_rgb(paths.rgb);
    scene.depth = pcd_to_depth(paths.cloud, scene.rgb.rows, scene.rgb.cols, units);
    const auto pos = parse_rect_file(paths.positives);
    const auto neg = parse_rect_file(paths.negatives);
    scene.positives = pos.rects;
    scene.negatives = neg.rects;
    write_cache_scene(cache_root, scene);
    entries.push_back({scene.id, scene.rows(), scene.cols(), scene.positives, scene.negatives});
    summary.scenes += 1;
    summary.positives += static_cast<int>(pos.rects.size());
    summary.negatives += static_cast<int>(neg.rects.size());
    summary.skipped_nan += pos.skipped_nan + neg.skipped_nan;
    summary.flagged_skew += pos.flagged_skew + neg.flagged_skew;
  }
  write_cache_index(cache_root, entries);
  return summary;
}

}  // namespace ginet::data
