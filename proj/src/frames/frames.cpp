#include "frames/frames.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "core/error.hpp"

namespace ginet::frames {

namespace {

bool valid_depth(double d) { return std::isfinite(d) && d > 0.0; }

template <typename T>
double lookup_depth(double x, double y, const Grid<T>& depth) {
  const int col = static_cast<int>(std::floor(x));
  const int row = static_cast<int>(std::floor(y));
  if (!depth.contains(row, col)) {
    fail(ErrorCode::InvalidArgument, "pixel (" + std::to_string(x) + ", " + std::to_string(y) +
                                         ") outside the depth map");
  }
  const double d = depth(row, col);
  if (valid_depth(d)) return d;
  std::vector<double> nearby;
  for (int dr = -2; dr <= 2; ++dr) {
    for (int dc = -2; dc <= 2; ++dc) {
      if (!depth.contains(row + dr, col + dc)) continue;
      const double v = depth(row + dr, col + dc);
      if (valid_depth(v)) nearby.push_back(v);
    }
  }
  if (nearby.empty()) {
    fail(ErrorCode::NoDepth, "no valid depth near pixel (" + std::to_string(col) + ", " +
                                 std::to_string(row) + ")");
  }
  std::sort(nearby.begin(), nearby.end());
  const std::size_t mid = nearby.size() / 2;
  return nearby.size() % 2 == 1 ? nearby[mid] : 0.5 * (nearby[mid - 1] + nearby[mid]);
}

template <typename T>
RobotGrasp to_robot(const ImageGrasp& grasp, const Grid<T>& depth, const CameraIntrinsics& k,
                    const Extrinsic& t) {
  k.validate();
  const double x = grasp.center.col;
  const double y = grasp.center.row;
  const double d = lookup_depth(x, y, depth);
  RobotGrasp out;
  out.position = camera_to_robot(deproject(x, y, d, k), t);
  out.yaw = robot_yaw(grasp.angle, t);
  out.width = grasp.width * d / k.fa;
  out.quality = grasp.quality;
  return out;
}

std::vector<double> read_numbers(std::istringstream& line, std::size_t count, const char* key) {
  std::vector<double> values;
  double v = 0.0;
  while (line >> v) values.push_back(v);
  if (values.size() != count || !line.eof()) {
    fail(ErrorCode::Parse, std::string("calibration key ") + key + " needs " +
                               std::to_string(count) + " numbers");
  }
  return values;
}

}  // namespace

void CameraIntrinsics::validate() const {
  if (!(fa > 0.0 && fb > 0.0)) fail(ErrorCode::Config, "focal lengths must be positive");
  if (!std::isfinite(ca) || !std::isfinite(cb)) fail(ErrorCode::Config, "principal point not finite");
}

Eigen::Matrix3d CameraIntrinsics::matrix() const {
  Eigen::Matrix3d k;
  k << fa, 0.0, ca, 0.0, fb, cb, 0.0, 0.0, 1.0;
  return k;
}

CameraIntrinsics CameraIntrinsics::from_matrix(const Eigen::Matrix3d& k) {
  if (k(0, 1) != 0.0 || k(1, 0) != 0.0 || k(2, 0) != 0.0 || k(2, 1) != 0.0 || k(2, 2) != 1.0) {
    fail(ErrorCode::Config, "intrinsic matrix must have the form [fa 0 ca; 0 fb cb; 0 0 1]");
  }
  CameraIntrinsics out{k(0, 0), k(1, 1), k(0, 2), k(1, 2)};
  out.validate();
  return out;
}

Extrinsic::Extrinsic(const Eigen::Matrix4d& matrix) : matrix_(matrix) {
  if (!matrix.allFinite()) fail(ErrorCode::Config, "extrinsic has non-finite entries");
  if (matrix(3, 0) != 0.0 || matrix(3, 1) != 0.0 || matrix(3, 2) != 0.0 || matrix(3, 3) != 1.0) {
    fail(ErrorCode::Config, "extrinsic last row must be (0, 0, 0, 1)");
  }
  const Eigen::Matrix3d r = matrix.topLeftCorner<3, 3>();
  if (((r.transpose() * r) - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-6) {
    fail(ErrorCode::Config, "extrinsic rotation is not orthonormal");
  }
  if (r.determinant() <= 0.0) fail(ErrorCode::Config, "extrinsic rotation is a reflection");
}

Eigen::Vector3d deproject(double x, double y, double depth, const CameraIntrinsics& k) {
  return {(x - k.ca) / k.fa * depth, (y - k.cb) / k.fb * depth, depth};
}

double depth_at(double x, double y, const Grid<float>& depth) { return lookup_depth(x, y, depth); }
double depth_at(double x, double y, const Grid<double>& depth) { return lookup_depth(x, y, depth); }

Eigen::Vector3d deproject(double x, double y, const Grid<float>& depth, const CameraIntrinsics& k) {
  k.validate();
  return deproject(x, y, lookup_depth(x, y, depth), k);
}

Eigen::Vector3d deproject(double x, double y, const Grid<double>& depth, const CameraIntrinsics& k) {
  k.validate();
  return deproject(x, y, lookup_depth(x, y, depth), k);
}

Eigen::Vector2d project(const Eigen::Vector3d& point, const CameraIntrinsics& k) {
  if (!(point.z() > 0.0)) fail(ErrorCode::InvalidArgument, "cannot project a point behind the camera");
  return {point.x() / point.z() * k.fa + k.ca, point.y() / point.z() * k.fb + k.cb};
}

Eigen::Vector3d camera_to_robot(const Eigen::Vector3d& point, const Extrinsic& t) {
  return t.rotation() * point + t.translation();
}

double robot_yaw(double image_angle, const Extrinsic& t) {
  // Counter-clockwise on screen means toward smaller row indices.
  const Eigen::Vector3d axis_camera(std::cos(image_angle), -std::sin(image_angle), 0.0);
  const Eigen::Vector3d axis_robot = t.rotation() * axis_camera;
  if (std::hypot(axis_robot.x(), axis_robot.y()) < 1e-12) {
    fail(ErrorCode::InvalidGeometry, "grasp axis is parallel to the robot z axis");
  }
  return wrap_angle(std::atan2(axis_robot.y(), axis_robot.x()));
}

RobotGrasp image_grasp_to_robot_grasp(const ImageGrasp& grasp, const Grid<float>& depth,
                                      const CameraIntrinsics& k, const Extrinsic& t) {
  return to_robot(grasp, depth, k, t);
}

RobotGrasp image_grasp_to_robot_grasp(const ImageGrasp& grasp, const Grid<double>& depth,
                                      const CameraIntrinsics& k, const Extrinsic& t) {
  return to_robot(grasp, depth, k, t);
}

Calibration parse_calibration(const std::string& text) {
  std::istringstream in(text);
  std::string raw;
  bool have_k = false;
  bool have_t = false;
  Calibration cal;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    std::istringstream line(raw);
    std::string key;
    if (!(line >> key)) continue;
    if (key == "K") {
      const auto v = read_numbers(line, 9, "K");
      Eigen::Matrix3d k;
      k << v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8];
      cal.intrinsics = CameraIntrinsics::from_matrix(k);
      have_k = true;
    } else if (key == "T") {
      const auto v = read_numbers(line, 16, "T");
      Eigen::Matrix4d m;
      for (int i = 0; i < 16; ++i) m(i / 4, i % 4) = v[static_cast<std::size_t>(i)];
      cal.extrinsic = Extrinsic(m);
      have_t = true;
    } else {
      fail(ErrorCode::Parse, "unknown calibration key '" + key + "' on line " + std::to_string(line_no));
    }
  }
  if (!have_k || !have_t) fail(ErrorCode::Parse, "calibration needs both K and T");
  return cal;
}

Calibration load_calibration(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open calibration " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_calibration(buffer.str());
}

std::string format_calibration(const Calibration& calibration) {
  std::ostringstream out;
  out.precision(17);
  out << "K";
  const Eigen::Matrix3d k = calibration.intrinsics.matrix();
  for (int i = 0; i < 9; ++i) out << ' ' << k(i / 3, i % 3);
  out << "\nT";
  for (int i = 0; i < 16; ++i) out << ' ' << calibration.extrinsic.matrix()(i / 4, i % 4);
  out << '\n';
  return out.str();
}

}  // namespace ginet::frames
