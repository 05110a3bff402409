#include "support/synthetic.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>

#include <unistd.h>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "core/grasp.hpp"
#include "core/random.hpp"
#include "data/cornell.hpp"

namespace ginet::testing {

namespace {

void write_rects(const std::filesystem::path& path, const std::vector<GraspRectangle>& rects) {
  std::ofstream out(path);
  out.setf(std::ios::fixed);
  out.precision(3);
  for (const auto& r : rects) {
    for (const auto& v : r.vertices) out << v.col << " " << v.row << "\n";
  }
}

}  // namespace

void write_synthetic_dataset(const std::filesystem::path& root, const SyntheticOptions& o) {
  std::filesystem::create_directories(root / "01");
  Rng rng(derive_seed(o.seed, "synthetic"));
  for (int s = 0; s < o.scenes; ++s) {
    char name[16];
    std::snprintf(name, sizeof(name), "pcd%04d", o.first_index + s);
    const auto base = root / "01" / name;

    const double cr = o.rows / 2.0 + rng.uniform(-30, 30);
    const double cc = o.cols / 2.0 + rng.uniform(-40, 40);
    const double theta = rng.uniform(-std::numbers::pi / 2, std::numbers::pi / 2);  // bar axis
    const double length = rng.uniform(90, 140);
    const double thickness = rng.uniform(18, 30);
    const cv::Vec3b colour(static_cast<uchar>(rng.uniform(120, 250)), static_cast<uchar>(rng.uniform(20, 120)),
                           static_cast<uchar>(rng.uniform(20, 200)));

    // Bar as a grasp rectangle whose opening axis is its long axis.
    ImageGrasp bar{{cr, cc}, theta, length, 0.0};
    const GraspRectangle body = image_grasp_to_rect(bar, thickness);

    cv::Mat bgr(o.rows, o.cols, CV_8UC3);
    std::vector<float> depth_mm(static_cast<std::size_t>(o.rows) * o.cols);
    for (int r = 0; r < o.rows; ++r) {
      for (int c = 0; c < o.cols; ++c) {
        const auto shade = static_cast<uchar>(150 + ((r / 8 + c / 8) % 2) * 12);
        bgr.at<cv::Vec3b>(r, c) = {shade, shade, shade};
        depth_mm[static_cast<std::size_t>(r) * o.cols + c] = 700.0f + 0.02f * static_cast<float>(r);
      }
    }
    rasterize(body, o.rows, o.cols, [&](int r, int c) {
      bgr.at<cv::Vec3b>(r, c) = colour;
      depth_mm[static_cast<std::size_t>(r) * o.cols + c] = 660.0f;
    });
    cv::imwrite(base.string() + "r.png", bgr);

    std::vector<GraspRectangle> positives;
    for (int k = 0; k < o.positives_per_scene; ++k) {
      const double t = o.positives_per_scene == 1 ? 0.0 : (k / (o.positives_per_scene - 1.0) - 0.5) * 0.5 * length;
      ImageGrasp g{{cr - std::sin(theta) * t, cc + std::cos(theta) * t}, theta + std::numbers::pi / 2,
                   thickness + 24.0, 1.0};
      g.angle = wrap_angle(g.angle);
      positives.push_back(image_grasp_to_rect(g, 16.0));
    }
    std::vector<GraspRectangle> negatives;
    for (int k = 0; k < o.negatives_per_scene; ++k) {
      ImageGrasp g{{cr + rng.uniform(-5, 5), cc + rng.uniform(-5, 5)}, theta, length * 0.6, 0.0};
      negatives.push_back(image_grasp_to_rect(g, 16.0));
    }
    write_rects(base.string() + "cpos.txt", positives);
    write_rects(base.string() + "cneg.txt", negatives);

    std::ofstream pcd(base.string() + ".txt");
    pcd << "# .PCD v.7 - Point Cloud Data file format\nVERSION .7\nFIELDS x y z rgb index\n"
        << "SIZE 4 4 4 4 4\nTYPE F F F F U\nCOUNT 1 1 1 1 1\n"
        << "WIDTH " << depth_mm.size() << "\nHEIGHT 1\nPOINTS " << depth_mm.size() << "\nDATA ascii\n";
    for (std::size_t i = 0; i < depth_mm.size(); ++i) {
      // Leave occasional holes, as real sensors do.
      if (i % 97 == 13) continue;
      pcd << "0 0 " << depth_mm[i] << " 0 " << i << "\n";
    }
  }
}

}  // namespace ginet::testing

namespace ginet::testing {

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("ginet-" + name + "-" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace ginet::testing

namespace ginet::testing {

std::filesystem::path synthetic_cache(const std::string& name, const SyntheticOptions& options) {
  const auto raw = scratch_dir(name + "-raw");
  write_synthetic_dataset(raw, options);
  const auto cache = scratch_dir(name + "-cache");
  data::convert_dataset(raw, cache);
  return cache;
}

}  // namespace ginet::testing
