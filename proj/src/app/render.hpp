#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include <opencv2/core.hpp>

#include "core/grasp.hpp"
#include "core/grasp_maps.hpp"

namespace ginet::app {

/// Fixed diverging colormap: t = 0 is blue (0, 0, 255), t = 0.5 white,
/// t = 1 red (255, 0, 0); linear in between, t clamped to [0, 1]. Returns RGB.
cv::Vec3b heat_color(double t);

/// Endpoints of the three heatmaps.
inline constexpr double kQualityRange[2] = {0.0, 1.0};
inline constexpr double kAngleRange[2] = {-1.5707963267948966, 1.5707963267948966};  // radians
inline constexpr double kWidthRange[2] = {0.0, 150.0};                               // pixels

/// RGB heatmap of `values` mapped linearly from [lo, hi] to the colormap.
cv::Mat heatmap(const Grid<float>& values, double lo, double hi);

/// Per-pixel grasp angle (radians) and width (pixels) from the map set.
Grid<float> angle_image(const GraspMapSet& maps);
Grid<float> width_image(const GraspMapSet& maps);

/// Copy of an RGB image with ground-truth rectangles in green and the
/// predicted grasps in red (the first one thicker).
cv::Mat overlay(const cv::Mat& rgb, std::span<const ImageGrasp> grasps, std::span<const GraspRectangle> truth);

/// PNG writer taking an RGB image.
void write_png(const std::filesystem::path& path, const cv::Mat& rgb);

/// overlay.png, quality.png, angle.png and width.png under `dir`.
std::vector<std::filesystem::path> write_panels(const std::filesystem::path& dir, const cv::Mat& rgb,
                                                const GraspMapSet& maps, std::span<const ImageGrasp> grasps,
                                                std::span<const GraspRectangle> truth);

}  // namespace ginet::app
