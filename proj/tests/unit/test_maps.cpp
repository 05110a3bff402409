#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "core/array_io.hpp"
#include "core/error.hpp"
#include "core/grasp_maps.hpp"
#include "support/oracles.hpp"

using namespace ginet;
constexpr double kPi = std::numbers::pi;

namespace {

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "ginet_test_maps";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("empty rectangle list gives all-zero maps") {
  const auto maps = encode_target_maps({}, 224, 224);
  CHECK(maps.rows() == 224);
  CHECK(maps.cols() == 224);
  for (const auto* g : {&maps.quality, &maps.sin2, &maps.cos2, &maps.width}) {
    for (float v : g->values()) CHECK(v == 0.0f);
  }
}

TEST_CASE("angle components inside the target region") {
  for (double angle : {0.0, kPi / 4}) {
    const std::vector<GraspRectangle> rects{image_grasp_to_rect({{50, 50}, angle, 60, 1}, 20)};
    const auto maps = encode_target_maps(rects, 100, 100);
    REQUIRE(maps.quality(50, 50) == 1.0f);
    CHECK(maps.sin2(50, 50) == doctest::Approx(std::sin(2 * angle)).epsilon(1e-6));
    CHECK(maps.cos2(50, 50) == doctest::Approx(std::cos(2 * angle)).epsilon(1e-6));
    CHECK(maps.width(50, 50) == doctest::Approx(60.0 / 150.0));
  }
}

TEST_CASE("target region is the central third along the opening axis") {
  const std::vector<GraspRectangle> rects{image_grasp_to_rect({{50, 50}, 0.0, 60, 1}, 20)};
  const auto maps = encode_target_maps(rects, 100, 100);
  int on = 0;
  for (float v : maps.quality.values()) on += v == 1.0f;
  // 20 columns (the middle third of 60) by 20 rows of pixel centers.
  CHECK(on == 20 * 20);
  CHECK(maps.quality(50, 39) == 0.0f);
  CHECK(maps.quality(50, 40) == 1.0f);
  CHECK(maps.quality(50, 59) == 1.0f);
  CHECK(maps.quality(50, 60) == 0.0f);
  CHECK_NOTHROW(maps.validate());
}

TEST_CASE("later rectangles overwrite earlier ones") {
  const std::vector<GraspRectangle> rects{image_grasp_to_rect({{50, 50}, 0.0, 60, 1}, 20),
                                          image_grasp_to_rect({{50, 50}, kPi / 4, 90, 1}, 20)};
  const auto maps = encode_target_maps(rects, 100, 100);
  CHECK(maps.sin2(50, 50) == doctest::Approx(1.0));
  CHECK(maps.width(50, 50) == doctest::Approx(0.6));
}

TEST_CASE("isolated rectangles survive encode then decode") {
  std::mt19937_64 gen(21);
  std::uniform_real_distribution<double> pos(70, 154), ang(-kPi / 2, kPi / 2), wid(30, 120), jaw(12, 40);
  for (int i = 0; i < 200; ++i) {
    const ImageGrasp g{{pos(gen), pos(gen)}, ang(gen), wid(gen), 1};
    const std::vector<GraspRectangle> rects{image_grasp_to_rect(g, jaw(gen))};
    const auto top = decode_grasps(encode_target_maps(rects, 224, 224), 1).front();
    CHECK(std::hypot(top.center.row - g.center.row, top.center.col - g.center.col) <= 2.0);
    CHECK(angle_offset_deg(top.angle, g.angle) <= 2.0);
    CHECK(std::abs(top.width - g.width) <= 0.05 * g.width);
  }
}

TEST_CASE("narrow grasp with a long jaw decodes at its center") {
  // The rasterized core strip steps in width along its length, so the
  // smoothed ridge peaks off center.
  const ImageGrasp g{{137.83, 64.09}, -3.9 * kPi / 180.0, 25.2, 1};
  const std::vector<GraspRectangle> rects{image_grasp_to_rect(g, 35.0)};
  const auto top = decode_grasps(encode_target_maps(rects, 224, 224), 1).front();
  CHECK(std::hypot(top.center.row - g.center.row, top.center.col - g.center.col) <= 2.0);
}

TEST_CASE("flat quality returns the first pixel with zero quality") {
  const GraspMapSet maps(32, 48);
  const auto grasps = decode_grasps(maps, 5);
  REQUIRE(grasps.size() == 1);
  CHECK(grasps[0].center.row == 0.5);
  CHECK(grasps[0].center.col == 0.5);
  CHECK(grasps[0].quality == 0.0);
  CHECK(grasps[0].angle == 0.0);
  CHECK(grasps[0].width == 0.0);
}

TEST_CASE("two disjoint rectangles give one grasp each") {
  const ImageGrasp a{{60, 60}, 0.3, 50, 1};
  const ImageGrasp b{{160, 150}, -1.0, 70, 1};
  const std::vector<GraspRectangle> rects{image_grasp_to_rect(a, 20), image_grasp_to_rect(b, 20)};
  const auto grasps = decode_grasps(encode_target_maps(rects, 224, 224), 2);
  REQUIRE(grasps.size() == 2);
  int near_a = 0, near_b = 0;
  for (const auto& g : grasps) {
    near_a += std::hypot(g.center.row - a.center.row, g.center.col - a.center.col) < 3;
    near_b += std::hypot(g.center.row - b.center.row, g.center.col - b.center.col) < 3;
  }
  CHECK(near_a == 1);
  CHECK(near_b == 1);
  CHECK(grasps[0].quality >= grasps[1].quality);
}

TEST_CASE("decode honours the minimum peak distance") {
  GraspMapSet maps(40, 40);
  maps.quality(20, 20) = 1.0f;
  maps.quality(20, 23) = 0.9f;
  maps.quality(5, 5) = 0.5f;
  const auto grasps = decode_grasps(maps, 3);
  for (std::size_t i = 0; i < grasps.size(); ++i) {
    for (std::size_t j = i + 1; j < grasps.size(); ++j) {
      CHECK(std::hypot(grasps[i].center.row - grasps[j].center.row, grasps[i].center.col - grasps[j].center.col) >=
            5.0);
    }
  }
  CHECK_THROWS_AS(decode_grasps(maps, 0), Error);
}

TEST_CASE("gaussian smoothing keeps mass and constants") {
  Grid<float> flat(20, 30, 0.7f);
  const auto s = gaussian_smooth(flat, 2.0);
  for (float v : s.values()) CHECK(v == doctest::Approx(0.7f).epsilon(1e-5));

  Grid<float> spike(41, 41, 0.0f);
  spike(20, 20) = 1.0f;
  const auto g = gaussian_smooth(spike, 2.0);
  double total = 0;
  for (float v : g.values()) total += v;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-5));
  // Separable Gaussian: value at offset (0, 2) over center equals exp(-0.5).
  CHECK(g(20, 22) / g(20, 20) == doctest::Approx(std::exp(-0.5)).epsilon(1e-4));
}

TEST_CASE("validate rejects out-of-range maps") {
  GraspMapSet maps(4, 4);
  maps.quality(1, 1) = 1.5f;
  CHECK_THROWS_AS(maps.validate(), Error);
  GraspMapSet angles(4, 4);
  angles.cos2(0, 0) = -1.01f;
  CHECK_THROWS_AS(angles.validate(), Error);
}

TEST_CASE("map arrays round-trip through the container format") {
  const std::vector<GraspRectangle> rects{image_grasp_to_rect({{30, 40}, 0.7, 40, 1}, 14)};
  const auto maps = encode_target_maps(rects, 64, 80);
  const auto path = scratch("maps.garr");
  write_array(path, maps_to_array(maps));
  const auto back = maps_from_array(read_array(path));
  CHECK(back.quality == maps.quality);
  CHECK(back.sin2 == maps.sin2);
  CHECK(back.cos2 == maps.cos2);
  CHECK(back.width == maps.width);

  const auto arr = read_array(path);
  CHECK(arr.shape == std::vector<std::uint64_t>{4, 64, 80});
  CHECK(std::filesystem::file_size(path) == 8 + 4 + 4 + 4 + 3 * 8 + 4 * 64 * 80 * 4);
}

TEST_CASE("array container rejects foreign versions and bad magic") {
  const auto path = scratch("bad.garr");
  write_array(path, NdArray::from_floats({2}, std::vector<float>{1, 2}));
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(8);
    const std::uint32_t v = 99;
    f.write(reinterpret_cast<const char*>(&v), 4);
  }
  try {
    read_array(path);
    FAIL("expected a version error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Version);
  }
  {
    std::ofstream f(path, std::ios::binary);
    f << "NOTANARRAY";
  }
  CHECK_THROWS_AS(read_array(path), Error);
}
