/* Public C interface of the ginet grasp-detection library. */
#ifndef GINET_GINET_H
#define GINET_GINET_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define GINET_API __attribute__((visibility("default")))
#else
#define GINET_API
#endif

/* Status codes. Names returned by ginet_status_name() are stable and match
   the "category=" field of CLI error lines. */
typedef enum ginet_status {
  GINET_OK = 0,
  GINET_INVALID_ARGUMENT = 1,
  GINET_INVALID_GEOMETRY = 2,
  GINET_PARSE = 3,
  GINET_IO = 4,
  GINET_SHAPE = 5,
  GINET_CONFIG = 6,
  GINET_VERSION = 7,
  GINET_NO_DEPTH = 8,
  GINET_NUMERIC = 9,
  GINET_INVALID_SCENE = 10,
  GINET_DECODE = 11,
  GINET_INTERNAL = 12
} ginet_status;

GINET_API const char* ginet_status_name(ginet_status status);

/* Message of the last failure on the calling thread ("" if none). */
GINET_API const char* ginet_last_error(void);

GINET_API const char* ginet_version(void);

/* ---- Geometry ----------------------------------------------------------
   Rectangles are 8 doubles: (row, col) of vertices v0..v3, where v0->v1 is
   the gripper opening direction. Angles are radians. */

typedef struct ginet_grasp {
  double row;
  double col;
  double angle;
  double width;
  double quality;
} ginet_grasp;

GINET_API ginet_status ginet_rect_to_grasp(const double rect[8], ginet_grasp* out);
/* jaw_height <= 0 selects width / 2. */
GINET_API ginet_status ginet_grasp_to_rect(const ginet_grasp* grasp, double jaw_height, double out[8]);
GINET_API ginet_status ginet_iou(const double a[8], const double b[8], double* out);
/* *out is 1 when the grasp passes against any of the n positives. */
GINET_API ginet_status ginet_rectangle_metric(const ginet_grasp* prediction, const double* positives, size_t n,
                                              double iou_min, double angle_max_deg, int* out);

/* ---- Grasp maps ------------------------------------------------------- */

typedef struct ginet_maps ginet_maps;

/* Target maps for n rectangles on a rows x cols grid. */
GINET_API ginet_status ginet_maps_encode(const double* rects, size_t n, int rows, int cols, ginet_maps** out);
GINET_API void ginet_maps_free(ginet_maps* maps);
GINET_API ginet_status ginet_maps_shape(const ginet_maps* maps, int* rows, int* cols);
/* channel 0..3 = quality, sin 2a, cos 2a, width / 150. Copies rows*cols floats. */
GINET_API ginet_status ginet_maps_channel(const ginet_maps* maps, int channel, float* out, size_t capacity);
/* Up to k grasps, best first; *count receives the number written. */
GINET_API ginet_status ginet_maps_decode(const ginet_maps* maps, int k, ginet_grasp* out, size_t* count);

/* ---- Models ----------------------------------------------------------- */

typedef struct ginet_model ginet_model;

GINET_API ginet_status ginet_model_load(const char* checkpoint_dir, ginet_model** out);
GINET_API void ginet_model_free(ginet_model* model);
/* 4 for RGB-D input, 3 for RGB. */
GINET_API ginet_status ginet_model_input_channels(const ginet_model* model, int* out);
GINET_API ginet_status ginet_model_param_count(const ginet_model* model, long long* out);
/* Runs on an interleaved 8-bit RGB image with optional depth (metres,
   row-major, NULL when the model takes RGB only). The image is cropped to
   224 x 224 about its center; returned maps are in crop coordinates. */
GINET_API ginet_status ginet_model_predict(ginet_model* model, const unsigned char* rgb, const float* depth,
                                           int rows, int cols, ginet_maps** out);

/* ---- Frames ----------------------------------------------------------- */

typedef struct ginet_calibration ginet_calibration;

GINET_API ginet_status ginet_calibration_load(const char* path, ginet_calibration** out);
/* k: row-major 3x3 intrinsics; t: row-major 4x4 camera->robot transform. */
GINET_API ginet_status ginet_calibration_create(const double k[9], const double t[16], ginet_calibration** out);
GINET_API void ginet_calibration_free(ginet_calibration* calibration);
/* Pixel (x = column, y = row) at the given depth to camera coordinates. */
GINET_API ginet_status ginet_deproject(const ginet_calibration* calibration, double x, double y, double depth,
                                       double out[3]);
/* out: x, y, z (metres, robot frame), yaw (radians), width (metres), quality. */
GINET_API ginet_status ginet_grasp_to_robot(const ginet_calibration* calibration, const ginet_grasp* grasp,
                                            const float* depth, int rows, int cols, double out[6]);

/* ---- Commands --------------------------------------------------------- */

typedef struct ginet_config ginet_config;

/* command: convert, train, eval, predict or viz. */
GINET_API ginet_status ginet_config_new(const char* command, ginet_config** out);
GINET_API void ginet_config_free(ginet_config* config);
GINET_API ginet_status ginet_config_load(ginet_config* config, const char* path);
GINET_API ginet_status ginet_config_set(ginet_config* config, const char* key, const char* value);
/* Resolved "key=value" lines. The pointer stays valid until the next call on
   this config. */
GINET_API const char* ginet_config_text(const ginet_config* config);
/* Number of keys the command accepts, and their names/help texts. */
GINET_API size_t ginet_config_key_count(const char* command);
GINET_API const char* ginet_config_key_name(const char* command, size_t i);
GINET_API const char* ginet_config_key_help(const char* command, size_t i);
GINET_API const char* ginet_config_key_default(const char* command, size_t i);

/* Runs the command; results go to stdout, progress to stderr. */
GINET_API ginet_status ginet_run(const ginet_config* config);

#ifdef __cplusplus
}
#endif

#endif
