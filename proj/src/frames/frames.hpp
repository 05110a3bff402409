#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <string>

#include "core/grasp.hpp"
#include "core/grid.hpp"

namespace ginet::frames {

/// Pinhole intrinsics: K = [fa 0 ca; 0 fb cb; 0 0 1].
struct CameraIntrinsics {
  double fa = 0.0;
  double fb = 0.0;
  double ca = 0.0;
  double cb = 0.0;

  void validate() const;
  Eigen::Matrix3d matrix() const;
  static CameraIntrinsics from_matrix(const Eigen::Matrix3d& k);
};

/// Rigid camera -> robot transform. Construction rejects anything that is not
/// a proper rotation plus translation.
class Extrinsic {
 public:
  explicit Extrinsic(const Eigen::Matrix4d& matrix);
  static Extrinsic identity() { return Extrinsic(Eigen::Matrix4d::Identity()); }

  const Eigen::Matrix4d& matrix() const { return matrix_; }
  Eigen::Matrix3d rotation() const { return matrix_.topLeftCorner<3, 3>(); }
  Eigen::Vector3d translation() const { return matrix_.topRightCorner<3, 1>(); }

 private:
  Eigen::Matrix4d matrix_;
};

struct RobotGrasp {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();  // metres, robot base frame
  double yaw = 0.0;                                    // radians about robot z
  double width = 0.0;                                  // metres
  double quality = 0.0;
};

struct Calibration {
  CameraIntrinsics intrinsics;
  Extrinsic extrinsic = Extrinsic::identity();
};

/// Pixel (x = column, y = row) at a known depth to camera coordinates.
Eigen::Vector3d deproject(double x, double y, double depth, const CameraIntrinsics& k);

/// Looks the depth up at (row y, column x). Invalid depth (non-finite or
/// <= 0) falls back to the median of valid depths in the 5x5 neighbourhood;
/// throws NoDepth when none exist.
Eigen::Vector3d deproject(double x, double y, const Grid<float>& depth, const CameraIntrinsics& k);
Eigen::Vector3d deproject(double x, double y, const Grid<double>& depth, const CameraIntrinsics& k);

double depth_at(double x, double y, const Grid<float>& depth);
double depth_at(double x, double y, const Grid<double>& depth);

/// Camera point back to pixel (x, y).
Eigen::Vector2d project(const Eigen::Vector3d& point, const CameraIntrinsics& k);

Eigen::Vector3d camera_to_robot(const Eigen::Vector3d& point, const Extrinsic& t);

/// Robot yaw of an image-plane grasp axis. The axis direction is lifted into
/// the camera frame (image columns -> camera x, image rows -> camera y),
/// rotated into the robot frame and its heading about robot z taken.
double robot_yaw(double image_angle, const Extrinsic& t);

RobotGrasp image_grasp_to_robot_grasp(const ImageGrasp& grasp, const Grid<float>& depth,
                                      const CameraIntrinsics& k, const Extrinsic& t);
RobotGrasp image_grasp_to_robot_grasp(const ImageGrasp& grasp, const Grid<double>& depth,
                                      const CameraIntrinsics& k, const Extrinsic& t);

// Calibration file, whitespace separated, '#' comments:
//   K <9 numbers, row-major 3x3>
//   T <16 numbers, row-major 4x4 camera->robot>
Calibration parse_calibration(const std::string& text);
Calibration load_calibration(const std::filesystem::path& path);
std::string format_calibration(const Calibration& calibration);

}  // namespace ginet::frames
