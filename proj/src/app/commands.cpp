#include "app/commands.hpp"

#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>

#include <torch/torch.h>

#include "app/render.hpp"
#include "core/array_io.hpp"
#include "core/error.hpp"
#include "core/kv.hpp"
#include "core/random.hpp"
#include "data/augment.hpp"
#include "data/cornell.hpp"
#include "data/splits.hpp"
#include "frames/frames.hpp"
#include "learn/evaluate.hpp"
#include "learn/model.hpp"
#include "learn/train.hpp"

namespace ginet::app {

namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out << text;
}

/// Sends text to the `out` key's file when set, else to the stream.
void emit(const RunConfig& config, const std::string& text, std::ostream& out) {
  if (config.has("out")) {
    write_file(config.get("out"), text);
  } else {
    out << text;
  }
}

void set_threads(const RunConfig& config) {
  const auto n = config.get_int("threads");
  if (n < 1) fail(ErrorCode::Config, "threads must be at least 1");
  torch::set_num_threads(static_cast<int>(n));
}

MetricThresholds thresholds_of(const RunConfig& config) {
  MetricThresholds t;
  t.iou_min = config.get_double("iou_min");
  t.angle_max_deg = config.get_double("angle_max");
  t.validate();
  return t;
}

data::DepthUnits parse_units(const std::string& text) {
  if (text == "auto") return data::DepthUnits::Auto;
  if (text == "m") return data::DepthUnits::Metres;
  if (text == "mm") return data::DepthUnits::Millimetres;
  fail(ErrorCode::Config, "depth_units must be auto, m or mm");
}

struct ResolvedSplits {
  std::vector<std::string> pool;
  data::Splits splits;
};

ResolvedSplits resolve_splits(const data::CacheIndex& index, std::uint64_t seed, double test_fraction,
                              double label_fraction, double subset_fraction) {
  ResolvedSplits r;
  r.pool = data::select_subset(index.ids(), subset_fraction, seed);
  data::SplitSpec spec;
  spec.seed = seed;
  spec.test_fraction = test_fraction;
  spec.label_fraction = label_fraction;
  r.splits = data::make_splits(r.pool, spec);
  return r;
}

void cmd_convert(const RunConfig& config, std::ostream& out, std::ostream& log) {
  const fs::path raw = config.require("data");
  const fs::path cache = config.require("out");
  const auto summary = data::convert_dataset(raw, cache, parse_units(config.get("depth_units")));
  const auto index = data::read_cache_index(cache);
  log << "converted " << summary.scenes << " scenes, " << summary.positives << " positive, " << summary.negatives
      << " negative grasps\n";
  out << "scenes=" << summary.scenes << "\n";
  out << "positives=" << summary.positives << "\n";
  out << "negatives=" << summary.negatives << "\n";
  out << "skipped_nan=" << summary.skipped_nan << "\n";
  out << "flagged_skew=" << summary.flagged_skew << "\n";
  out << "augment_multiplicity=" << kAugmentMultiplicity << "\n";
  out << "augmented_grasps=" << data::augmented_grasp_count(index, kAugmentMultiplicity, 0) << "\n";
}

void cmd_train(const RunConfig& config, std::ostream& out, std::ostream& log) {
  set_threads(config);
  const fs::path run_dir = config.require("out");
  const auto index = data::read_cache_index(config.require("data"));

  learn::TrainConfig tc;
  tc.model = learn::parse_model_kind(config.get("model"));
  tc.seed = static_cast<std::uint64_t>(config.get_int("seed"));
  tc.batch_size = static_cast<int>(config.get_int("batch_size"));
  tc.learning_rate = config.get_double("learning_rate");
  tc.epochs = static_cast<int>(config.get_int("epochs"));
  tc.split.seed = tc.seed;
  tc.split.test_fraction = config.get_double("test_fraction");
  tc.split.label_fraction = config.get_double("label_fraction");
  tc.val_fraction = config.get_double("val_fraction");
  tc.augment = config.get_bool("augment");
  tc.thresholds = thresholds_of(config);
  tc.max_steps_per_epoch = static_cast<int>(config.get_int("max_steps_per_epoch"));
  tc.validate();

  const auto resolved = resolve_splits(index, tc.seed, tc.split.test_fraction, tc.split.label_fraction,
                                       config.get_double("subset_fraction"));
  const auto& splits = resolved.splits;
  const auto [train_ids, val_ids] = data::carve_out(splits.train_labelled, tc.val_fraction, tc.seed);

  fs::create_directories(run_dir);
  write_file(run_dir / "config.txt", config.to_text());
  {
    std::ostringstream s;
    for (const auto& id : train_ids) s << "train " << id << "\n";
    for (const auto& id : val_ids) s << "val " << id << "\n";
    for (const auto& id : splits.train_unlabelled) s << "unlabelled " << id << "\n";
    for (const auto& id : splits.test) s << "test " << id << "\n";
    write_file(run_dir / "splits.txt", s.str());
  }
  log << "splits: train=" << train_ids.size() << " val=" << val_ids.size()
      << " unlabelled=" << splits.train_unlabelled.size() << " test=" << splits.test.size() << "\n";

  const int channels = tc.model == learn::ModelKind::GINNet ? 4 : 3;
  nn::GINNetSpec spec = config.has("ginnet_spec") ? nn::GINNetSpec::parse(read_file(config.get("ginnet_spec")))
                                                  : nn::GINNetSpec::defaults(channels);
  if (spec.input_channels != channels) {
    fail(ErrorCode::Config, std::string(learn::model_kind_name(tc.model)) + " needs a " + std::to_string(channels) +
                                "-channel grasp network, spec has " + std::to_string(spec.input_channels));
  }

  std::optional<learn::GraspModel> model;
  if (tc.model == learn::ModelKind::GINNet) {
    model = learn::GraspModel::ginnet(spec, tc.seed);
  } else {
    nn::VQVAE vq{nullptr};
    if (config.has("vqvae_checkpoint")) {
      vq = learn::load_vqvae(config.get("vqvae_checkpoint"));
    } else {
      learn::VQVAETrainConfig vc;
      vc.epochs = static_cast<int>(config.get_int("vqvae_epochs"));
      vc.batch_size = tc.batch_size;
      vc.learning_rate = tc.learning_rate;
      vc.augment = config.get_bool("vqvae_augment");
      vc.seed = tc.seed;
      vc.max_steps_per_epoch = tc.max_steps_per_epoch;
      const nn::VQVAESpec vq_spec = config.has("vqvae_spec")
                                        ? nn::VQVAESpec::parse(read_file(config.get("vqvae_spec")))
                                        : nn::VQVAESpec::defaults();
      std::ofstream vlog(run_dir / "vqvae_metrics.log");
      vq = learn::train_vqvae(index, splits.train_all(), vq_spec, vc, [&](const learn::VQVAEEpochRecord& r) {
        const auto line = learn::format_vqvae_record(r);
        vlog << line << "\n" << std::flush;
        log << line << "\n";
        if (r.collapsed) log << "warning: codebook collapse (90% of sites use under 5% of codes)\n";
      });
      learn::save_vqvae(run_dir / "vqvae", vq, tc.seed);
    }
    model = learn::GraspModel::rginnet(vq, spec, tc.seed, config.get_bool("freeze_encoder"));
  }
  log << "model=" << learn::model_kind_name(tc.model) << " trainable_params=" << model->trainable_count() << "\n";

  std::ofstream metrics(run_dir / "metrics.log");
  const auto result = learn::train_model(*model, index, train_ids, val_ids, tc, run_dir / "checkpoint",
                                         [&](const learn::EpochRecord& r) {
                                           const auto line = learn::format_epoch_record(r);
                                           metrics << line << "\n" << std::flush;
                                           log << line << "\n";
                                         });
  out << "checkpoint=" << (run_dir / "checkpoint").string() << "\n";
  out << "best_epoch=" << result.best_epoch << "\n";
  out << "best_val_accuracy=" << format_double(result.best_val_accuracy) << "\n";
}

void cmd_eval(const RunConfig& config, std::ostream& out, std::ostream& log) {
  set_threads(config);
  const fs::path ck = config.require("checkpoint");
  auto model = learn::load_checkpoint(ck);
  const auto index = data::read_cache_index(config.require("data"));
  const std::uint64_t seed =
      config.has("seed") ? static_cast<std::uint64_t>(config.get_int("seed")) : model.seed();
  const auto resolved = resolve_splits(index, seed, config.get_double("test_fraction"), 1.0,
                                       config.get_double("subset_fraction"));
  const std::string& which = config.get("split");
  std::vector<std::string> ids;
  if (which == "test") {
    ids = resolved.splits.test;
  } else if (which == "train") {
    ids = resolved.splits.train_all();
  } else if (which == "all") {
    ids = resolved.pool;
  } else {
    fail(ErrorCode::Config, "split must be test, train or all");
  }
  auto report = learn::evaluate(learn::model_predictor(model), index, ids, thresholds_of(config));
  report.model = learn::model_kind_name(model.kind());
  report.checkpoint = learn::checkpoint_digest(ck);
  report.parameters = model.trainable_count();
  log << "accuracy=" << format_double(report.accuracy()) << " scenes=" << report.scenes.size()
      << " excluded=" << report.excluded << "\n";
  emit(config, report.to_text(), out);
}

/// The scene a predict or viz run looks at, already cropped.
struct Subject {
  std::string source;
  data::SceneRecord full;
  data::AugmentedScene crop;
  bool has_depth = false;
};

Subject load_subject(const RunConfig& config) {
  Subject s;
  if (config.has("scene")) {
    if (config.has("image")) fail(ErrorCode::Config, "give either scene or image, not both");
    const auto index = data::read_cache_index(config.require("data"));
    s.source = config.get("scene");
    s.full = data::load_cached_scene(index, s.source);
    s.has_depth = true;
  } else {
    const fs::path image = config.require("image");
    s.source = image.string();
    s.full.id = image.stem().string();
    s.full.rgb = data::load_rgb(image);
    if (config.has("depth")) {
      const fs::path depth = config.get("depth");
      s.full.depth = depth.extension() == ".pcd"
                         ? data::pcd_to_depth(depth, s.full.rgb.rows, s.full.rgb.cols, data::DepthUnits::Auto)
                         : grid_from_array(read_array(depth));
      s.has_depth = true;
    } else {
      s.full.depth = Grid<float>(s.full.rgb.rows, s.full.rgb.cols, std::numeric_limits<float>::quiet_NaN());
    }
  }
  s.full.validate();
  s.crop = data::center_crop(s.full);
  return s;
}

/// Crop coordinates back to the source image (center crops are pure shifts).
ImageGrasp to_source(const ImageGrasp& g, const data::AugmentParams& p) {
  ImageGrasp out = g;
  out.center.row = g.center.row - p.size / 2.0 + p.center.row;
  out.center.col = g.center.col - p.size / 2.0 + p.center.col;
  return out;
}

void cmd_predict(const RunConfig& config, std::ostream& out, std::ostream& log) {
  set_threads(config);
  const fs::path ck = config.require("checkpoint");
  auto model = learn::load_checkpoint(ck);
  const Subject subject = load_subject(config);
  if (model.input_mode() == data::InputMode::Rgbd && !subject.has_depth) {
    fail(ErrorCode::NoDepth, "this checkpoint needs depth; pass depth or use a cached scene");
  }
  const auto top_k = config.get_int("top_k");
  if (top_k < 1) fail(ErrorCode::Config, "top_k must be at least 1");
  const auto maps = learn::predict_maps(model, subject.crop.scene);
  const auto grasps = decode_grasps(maps, static_cast<int>(top_k));

  std::optional<frames::Calibration> calib;
  if (config.has("calib")) calib = frames::load_calibration(config.get("calib"));
  if (calib && !subject.has_depth) fail(ErrorCode::NoDepth, "robot-frame grasps need depth");

  std::ostringstream s;
  s << "schema=" << kPredictionSchema << "\n";
  s << "source=" << subject.source << "\n";
  s << "model=" << learn::model_kind_name(model.kind()) << "\n";
  s << "checkpoint=" << learn::checkpoint_digest(ck) << "\n";
  s << "count=" << grasps.size() << "\n";
  for (std::size_t i = 0; i < grasps.size(); ++i) {
    const ImageGrasp g = to_source(grasps[i], subject.crop.params);
    s << "grasp=" << i << " row=" << format_double(g.center.row) << " col=" << format_double(g.center.col)
      << " angle_deg=" << format_double(g.angle * 180.0 / std::numbers::pi)
      << " width_px=" << format_double(g.width) << " quality=" << format_double(g.quality) << "\n";
    if (calib) {
      const auto r = frames::image_grasp_to_robot_grasp(g, subject.full.depth, calib->intrinsics, calib->extrinsic);
      s << "robot=" << i << " x=" << format_double(r.position.x()) << " y=" << format_double(r.position.y())
        << " z=" << format_double(r.position.z()) << " yaw_deg=" << format_double(r.yaw * 180.0 / std::numbers::pi)
        << " width_m=" << format_double(r.width) << " quality=" << format_double(r.quality) << "\n";
    }
  }
  log << "predicted " << grasps.size() << " grasps for " << subject.source << "\n";
  emit(config, s.str(), out);
}

void cmd_viz(const RunConfig& config, std::ostream& out, std::ostream& log) {
  set_threads(config);
  const fs::path dir = config.require("out");
  const Subject subject = load_subject(config);
  GraspMapSet maps;
  if (config.has("checkpoint")) {
    auto model = learn::load_checkpoint(config.get("checkpoint"));
    if (model.input_mode() == data::InputMode::Rgbd && !subject.has_depth) {
      fail(ErrorCode::NoDepth, "this checkpoint needs depth; pass depth or use a cached scene");
    }
    maps = learn::predict_maps(model, subject.crop.scene);
  } else {
    if (subject.crop.scene.positives.empty()) {
      fail(ErrorCode::Config, "without a checkpoint, viz draws ground-truth maps and needs an annotated scene");
    }
    maps = encode_target_maps(subject.crop.scene.positives, subject.crop.scene.rows(), subject.crop.scene.cols());
  }
  const auto grasps = decode_grasps(maps, 1);
  const auto written = write_panels(dir, subject.crop.scene.rgb, maps, grasps, subject.crop.scene.positives);
  for (const auto& p : written) out << "wrote=" << p.string() << "\n";
  log << "wrote " << written.size() << " images to " << dir.string() << "\n";
}

}  // namespace

void run_command(const RunConfig& config, std::ostream& out, std::ostream& log) {
  std::istringstream lines(config.to_text());
  for (std::string line; std::getline(lines, line);) log << "config " << config.command() << "." << line << "\n";
  const auto& c = config.command();
  if (c == "convert") return cmd_convert(config, out, log);
  if (c == "train") return cmd_train(config, out, log);
  if (c == "eval") return cmd_eval(config, out, log);
  if (c == "predict") return cmd_predict(config, out, log);
  if (c == "viz") return cmd_viz(config, out, log);
  fail(ErrorCode::Config, "unknown command '" + c + "'");
}

}  // namespace ginet::app
