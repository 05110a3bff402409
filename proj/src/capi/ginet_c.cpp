#include "ginet/ginet.h"

#include <cstring>
#include <iostream>
#include <new>
#include <string>

#include "app/commands.hpp"
#include "app/run_config.hpp"
#include "core/error.hpp"
#include "core/grasp.hpp"
#include "core/grasp_maps.hpp"
#include "data/augment.hpp"
#include "frames/frames.hpp"
#include "learn/evaluate.hpp"
#include "learn/model.hpp"

struct ginet_maps {
  ginet::GraspMapSet maps;
};

struct ginet_model {
  ginet::learn::GraspModel model;
};

struct ginet_calibration {
  ginet::frames::Calibration calibration;
};

struct ginet_config {
  ginet::app::RunConfig config;
  mutable std::string text;
};

namespace {

thread_local std::string g_last_error;

template <typename F>
ginet_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return GINET_OK;
  } catch (const ginet::Error& e) {
    g_last_error = e.what();
    return static_cast<ginet_status>(static_cast<int>(e.code()));
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return GINET_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return GINET_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return GINET_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (p == nullptr) ginet::fail(ginet::ErrorCode::InvalidArgument, std::string(what) + " must not be null");
}

ginet::GraspRectangle rect_from(const double* v) {
  ginet::GraspRectangle r;
  for (int i = 0; i < 4; ++i) r.vertices[i] = {v[2 * i], v[2 * i + 1]};
  return r;
}

void rect_to(const ginet::GraspRectangle& r, double* out) {
  for (int i = 0; i < 4; ++i) {
    out[2 * i] = r.vertices[i].row;
    out[2 * i + 1] = r.vertices[i].col;
  }
}

ginet::ImageGrasp grasp_from(const ginet_grasp& g) {
  return {{g.row, g.col}, g.angle, g.width, g.quality};
}

ginet_grasp grasp_to(const ginet::ImageGrasp& g) {
  return {g.center.row, g.center.col, g.angle, g.width, g.quality};
}

std::vector<ginet::GraspRectangle> rects_from(const double* data, size_t n) {
  std::vector<ginet::GraspRectangle> out;
  for (size_t i = 0; i < n; ++i) out.push_back(rect_from(data + 8 * i));
  return out;
}

ginet::Grid<float> depth_grid(const float* depth, int rows, int cols) {
  if (rows <= 0 || cols <= 0) ginet::fail(ginet::ErrorCode::InvalidArgument, "image shape must be positive");
  ginet::Grid<float> grid(rows, cols);
  std::memcpy(grid.data(), depth, sizeof(float) * static_cast<size_t>(rows) * cols);
  return grid;
}

const ginet::app::KeyDoc* key_doc(const char* command, size_t i) {
  const ginet::app::KeyDoc* doc = nullptr;
  guarded([&] {
    need(command, "command");
    const auto& keys = ginet::app::RunConfig::keys(command);
    if (i < keys.size()) doc = &keys[i];
  });
  return doc;
}

}  // namespace

extern "C" {

const char* ginet_status_name(ginet_status status) {
  if (status == GINET_OK) return "ok";
  if (status < GINET_INVALID_ARGUMENT || status > GINET_INTERNAL) return "unknown";
  return ginet::error_code_name(static_cast<ginet::ErrorCode>(status));
}

const char* ginet_last_error(void) { return g_last_error.c_str(); }

const char* ginet_version(void) { return "0.1.0"; }

ginet_status ginet_rect_to_grasp(const double rect[8], ginet_grasp* out) {
  return guarded([&] {
    need(rect, "rect");
    need(out, "out");
    *out = grasp_to(ginet::rect_to_image_grasp(rect_from(rect)));
  });
}

ginet_status ginet_grasp_to_rect(const ginet_grasp* grasp, double jaw_height, double out[8]) {
  return guarded([&] {
    need(grasp, "grasp");
    need(out, "out");
    const auto g = grasp_from(*grasp);
    rect_to(jaw_height > 0.0 ? ginet::image_grasp_to_rect(g, jaw_height) : ginet::image_grasp_to_rect(g), out);
  });
}

ginet_status ginet_iou(const double a[8], const double b[8], double* out) {
  return guarded([&] {
    need(a, "a");
    need(b, "b");
    need(out, "out");
    *out = ginet::iou(rect_from(a), rect_from(b));
  });
}

ginet_status ginet_rectangle_metric(const ginet_grasp* prediction, const double* positives, size_t n,
                                    double iou_min, double angle_max_deg, int* out) {
  return guarded([&] {
    need(prediction, "prediction");
    need(out, "out");
    if (n > 0) need(positives, "positives");
    ginet::MetricThresholds t;
    t.iou_min = iou_min;
    t.angle_max_deg = angle_max_deg;
    const auto rects = rects_from(positives, n);
    *out = ginet::rectangle_metric(grasp_from(*prediction), rects, t) ? 1 : 0;
  });
}

ginet_status ginet_maps_encode(const double* rects, size_t n, int rows, int cols, ginet_maps** out) {
  return guarded([&] {
    need(out, "out");
    if (n > 0) need(rects, "rects");
    if (rows <= 0 || cols <= 0) ginet::fail(ginet::ErrorCode::InvalidArgument, "map shape must be positive");
    const auto list = rects_from(rects, n);
    *out = new ginet_maps{ginet::encode_target_maps(list, rows, cols)};
  });
}

void ginet_maps_free(ginet_maps* maps) { delete maps; }

ginet_status ginet_maps_shape(const ginet_maps* maps, int* rows, int* cols) {
  return guarded([&] {
    need(maps, "maps");
    need(rows, "rows");
    need(cols, "cols");
    *rows = maps->maps.rows();
    *cols = maps->maps.cols();
  });
}

ginet_status ginet_maps_channel(const ginet_maps* maps, int channel, float* out, size_t capacity) {
  return guarded([&] {
    need(maps, "maps");
    need(out, "out");
    const ginet::Grid<float>* grids[] = {&maps->maps.quality, &maps->maps.sin2, &maps->maps.cos2,
                                         &maps->maps.width};
    if (channel < 0 || channel > 3) ginet::fail(ginet::ErrorCode::InvalidArgument, "channel must be 0..3");
    const auto& g = *grids[channel];
    const size_t n = static_cast<size_t>(g.rows()) * g.cols();
    if (capacity < n) ginet::fail(ginet::ErrorCode::InvalidArgument, "output buffer too small");
    std::memcpy(out, g.data(), n * sizeof(float));
  });
}

ginet_status ginet_maps_decode(const ginet_maps* maps, int k, ginet_grasp* out, size_t* count) {
  return guarded([&] {
    need(maps, "maps");
    need(out, "out");
    need(count, "count");
    const auto grasps = ginet::decode_grasps(maps->maps, k);
    for (size_t i = 0; i < grasps.size(); ++i) out[i] = grasp_to(grasps[i]);
    *count = grasps.size();
  });
}

ginet_status ginet_model_load(const char* checkpoint_dir, ginet_model** out) {
  return guarded([&] {
    need(checkpoint_dir, "checkpoint_dir");
    need(out, "out");
    *out = new ginet_model{ginet::learn::load_checkpoint(checkpoint_dir)};
  });
}

void ginet_model_free(ginet_model* model) { delete model; }

ginet_status ginet_model_input_channels(const ginet_model* model, int* out) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    *out = ginet::data::channel_count(model->model.input_mode());
  });
}

ginet_status ginet_model_param_count(const ginet_model* model, long long* out) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    *out = model->model.trainable_count();
  });
}

ginet_status ginet_model_predict(ginet_model* model, const unsigned char* rgb, const float* depth, int rows,
                                 int cols, ginet_maps** out) {
  return guarded([&] {
    need(model, "model");
    need(rgb, "rgb");
    need(out, "out");
    if (rows <= 0 || cols <= 0) ginet::fail(ginet::ErrorCode::InvalidArgument, "image shape must be positive");
    if (model->model.input_mode() == ginet::data::InputMode::Rgbd && depth == nullptr) {
      ginet::fail(ginet::ErrorCode::NoDepth, "this model needs depth");
    }
    ginet::data::SceneRecord scene;
    scene.id = "input";
    scene.rgb = cv::Mat(rows, cols, CV_8UC3, const_cast<unsigned char*>(rgb)).clone();
    scene.depth = depth != nullptr ? depth_grid(depth, rows, cols)
                                   : ginet::Grid<float>(rows, cols, std::numeric_limits<float>::quiet_NaN());
    const auto crop = ginet::data::center_crop(scene);
    *out = new ginet_maps{ginet::learn::predict_maps(model->model, crop.scene)};
  });
}

ginet_status ginet_calibration_load(const char* path, ginet_calibration** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new ginet_calibration{ginet::frames::load_calibration(path)};
  });
}

ginet_status ginet_calibration_create(const double k[9], const double t[16], ginet_calibration** out) {
  return guarded([&] {
    need(k, "k");
    need(t, "t");
    need(out, "out");
    Eigen::Matrix3d km;
    Eigen::Matrix4d tm;
    for (int i = 0; i < 9; ++i) km(i / 3, i % 3) = k[i];
    for (int i = 0; i < 16; ++i) tm(i / 4, i % 4) = t[i];
    *out = new ginet_calibration{{ginet::frames::CameraIntrinsics::from_matrix(km), ginet::frames::Extrinsic(tm)}};
  });
}

void ginet_calibration_free(ginet_calibration* calibration) { delete calibration; }

ginet_status ginet_deproject(const ginet_calibration* calibration, double x, double y, double depth, double out[3]) {
  return guarded([&] {
    need(calibration, "calibration");
    need(out, "out");
    const auto p = ginet::frames::deproject(x, y, depth, calibration->calibration.intrinsics);
    for (int i = 0; i < 3; ++i) out[i] = p[i];
  });
}

ginet_status ginet_grasp_to_robot(const ginet_calibration* calibration, const ginet_grasp* grasp,
                                  const float* depth, int rows, int cols, double out[6]) {
  return guarded([&] {
    need(calibration, "calibration");
    need(grasp, "grasp");
    need(depth, "depth");
    need(out, "out");
    const auto& c = calibration->calibration;
    const auto r = ginet::frames::image_grasp_to_robot_grasp(grasp_from(*grasp), depth_grid(depth, rows, cols),
                                                             c.intrinsics, c.extrinsic);
    out[0] = r.position.x();
    out[1] = r.position.y();
    out[2] = r.position.z();
    out[3] = r.yaw;
    out[4] = r.width;
    out[5] = r.quality;
  });
}

ginet_status ginet_config_new(const char* command, ginet_config** out) {
  return guarded([&] {
    need(command, "command");
    need(out, "out");
    *out = new ginet_config{ginet::app::RunConfig(command), {}};
  });
}

void ginet_config_free(ginet_config* config) { delete config; }

ginet_status ginet_config_load(ginet_config* config, const char* path) {
  return guarded([&] {
    need(config, "config");
    need(path, "path");
    config->config.load_file(path);
  });
}

ginet_status ginet_config_set(ginet_config* config, const char* key, const char* value) {
  return guarded([&] {
    need(config, "config");
    need(key, "key");
    need(value, "value");
    config->config.set(key, value);
  });
}

const char* ginet_config_text(const ginet_config* config) {
  if (config == nullptr) return "";
  config->text = config->config.to_text();
  return config->text.c_str();
}

size_t ginet_config_key_count(const char* command) {
  size_t n = 0;
  guarded([&] {
    need(command, "command");
    n = ginet::app::RunConfig::keys(command).size();
  });
  return n;
}

const char* ginet_config_key_name(const char* command, size_t i) {
  const auto* d = key_doc(command, i);
  return d ? d->key.c_str() : nullptr;
}

const char* ginet_config_key_help(const char* command, size_t i) {
  const auto* d = key_doc(command, i);
  return d ? d->help.c_str() : nullptr;
}

const char* ginet_config_key_default(const char* command, size_t i) {
  const auto* d = key_doc(command, i);
  return d ? d->fallback.c_str() : nullptr;
}

ginet_status ginet_run(const ginet_config* config) {
  return guarded([&] {
    need(config, "config");
    ginet::app::run_command(config->config, std::cout, std::cerr);
    std::cout.flush();
  });
}

}  // extern "C"
