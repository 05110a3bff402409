#include "app/render.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "core/error.hpp"

namespace ginet::app {

cv::Vec3b heat_color(double t) {
  t = std::isfinite(t) ? std::clamp(t, 0.0, 1.0) : 0.0;
  auto lerp = [](double a, double b, double u) { return static_cast<uchar>(std::lround(a + (b - a) * u)); };
  if (t <= 0.5) {
    const double u = t / 0.5;
    return {lerp(0, 255, u), lerp(0, 255, u), 255};
  }
  const double u = (t - 0.5) / 0.5;
  return {255, lerp(255, 0, u), lerp(255, 0, u)};
}

cv::Mat heatmap(const Grid<float>& values, double lo, double hi) {
  if (!(hi > lo)) fail(ErrorCode::InvalidArgument, "heatmap range must be increasing");
  cv::Mat out(values.rows(), values.cols(), CV_8UC3);
  for (int r = 0; r < values.rows(); ++r) {
    auto* row = out.ptr<cv::Vec3b>(r);
    for (int c = 0; c < values.cols(); ++c) row[c] = heat_color((values(r, c) - lo) / (hi - lo));
  }
  return out;
}

Grid<float> angle_image(const GraspMapSet& maps) {
  Grid<float> out(maps.rows(), maps.cols());
  for (int r = 0; r < maps.rows(); ++r) {
    for (int c = 0; c < maps.cols(); ++c) {
      out(r, c) = static_cast<float>(0.5 * std::atan2(maps.sin2(r, c), maps.cos2(r, c)));
    }
  }
  return out;
}

Grid<float> width_image(const GraspMapSet& maps) {
  Grid<float> out(maps.rows(), maps.cols());
  for (int r = 0; r < maps.rows(); ++r) {
    for (int c = 0; c < maps.cols(); ++c) {
      out(r, c) = std::clamp(maps.width(r, c), 0.0f, 1.0f) * static_cast<float>(kMaxGraspWidthPx);
    }
  }
  return out;
}

namespace {

void draw_rect(cv::Mat& img, const GraspRectangle& rect, const cv::Scalar& color, int thickness) {
  // Sub-pixel polyline; vertices are (row, col) with pixel centers at +0.5.
  constexpr int kShift = 4;
  std::vector<cv::Point> pts;
  for (const auto& v : rect.vertices) {
    pts.emplace_back(static_cast<int>(std::lround((v.col - 0.5) * (1 << kShift))),
                     static_cast<int>(std::lround((v.row - 0.5) * (1 << kShift))));
  }
  cv::polylines(img, pts, true, color, thickness, cv::LINE_AA, kShift);
}

}  // namespace

cv::Mat overlay(const cv::Mat& rgb, std::span<const ImageGrasp> grasps, std::span<const GraspRectangle> truth) {
  cv::Mat out = rgb.clone();
  for (const auto& t : truth) draw_rect(out, t, cv::Scalar(0, 200, 0), 1);
  for (std::size_t i = grasps.size(); i-- > 0;) {
    if (grasps[i].width <= 0.0) continue;
    draw_rect(out, image_grasp_to_rect(grasps[i]), cv::Scalar(255, 0, 0), i == 0 ? 2 : 1);
  }
  return out;
}

void write_png(const std::filesystem::path& path, const cv::Mat& rgb) {
  cv::Mat bgr;
  cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
  // Fixed compression settings keep the bytes stable across runs.
  if (!cv::imwrite(path.string(), bgr, {cv::IMWRITE_PNG_COMPRESSION, 6})) {
    fail(ErrorCode::Io, "cannot write " + path.string());
  }
}

std::vector<std::filesystem::path> write_panels(const std::filesystem::path& dir, const cv::Mat& rgb,
                                                const GraspMapSet& maps, std::span<const ImageGrasp> grasps,
                                                std::span<const GraspRectangle> truth) {
  std::filesystem::create_directories(dir);
  const std::vector<std::pair<std::string, cv::Mat>> panels = {
      {"overlay.png", overlay(rgb, grasps, truth)},
      {"quality.png", heatmap(maps.quality, kQualityRange[0], kQualityRange[1])},
      {"angle.png", heatmap(angle_image(maps), kAngleRange[0], kAngleRange[1])},
      {"width.png", heatmap(width_image(maps), kWidthRange[0], kWidthRange[1])},
  };
  std::vector<std::filesystem::path> written;
  for (const auto& [name, image] : panels) {
    write_png(dir / name, image);
    written.push_back(dir / name);
  }
  return written;
}

}  // namespace ginet::app
