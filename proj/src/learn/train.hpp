#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "core/grasp.hpp"
#include "core/grasp_maps.hpp"
#include "data/augment.hpp"
#include "data/cornell.hpp"
#include "data/splits.hpp"
#include "learn/model.hpp"
#include "learn/tensors.hpp"
#include "nn/vqvae.hpp"

namespace ginet::learn {

struct TrainConfig {
  ModelKind model = ModelKind::GINNet;
  int batch_size = 8;
  double learning_rate = 1e-3;
  int epochs = 50;
  std::uint64_t seed = 0;
  data::SplitSpec split;
  /// Share of the labelled training scenes held out for checkpoint selection.
  double val_fraction = 0.1;
  bool augment = true;
  data::AugmentRanges ranges;
  MetricThresholds thresholds;
  DecodeOptions decode;
  /// Stop an epoch after this many optimizer steps (0 = no limit).
  int max_steps_per_epoch = 0;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_accuracy = 0.0;
  double wall_time_s = 0.0;
};

/// "epoch=3 train_loss=0.0123 val_accuracy=0.8 wall_time_s=41.2"
std::string format_epoch_record(const EpochRecord& record);

struct TrainResult {
  std::vector<EpochRecord> history;
  int best_epoch = -1;
  double best_val_accuracy = 0.0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Samples for the given scenes. With a seed, each scene gets its own random
/// crop derived from (seed, id, epoch); without, the centered crop.
std::vector<Sample> load_samples(const data::CacheIndex& index, const std::vector<std::string>& ids,
                                 data::InputMode mode, std::optional<std::uint64_t> augment_seed,
                                 int epoch = 0, const data::AugmentRanges& ranges = {});

/// One optimizer step; returns the loss before the update. A non-finite loss
/// throws Numeric naming the batch and learning rate.
double train_step(GraspModel& model, torch::optim::Optimizer& optimizer, const Batch& batch);

/// Loss of the model on a batch without updating it (training mode is kept).
double batch_loss(GraspModel& model, const Batch& batch);

/// Adam training with per-epoch validation. Whenever validation accuracy
/// improves (or on the first epoch), the model is saved to `best_dir`.
TrainResult train_model(GraspModel& model, const data::CacheIndex& index,
                        const std::vector<std::string>& train_ids, const std::vector<std::string>& val_ids,
                        const TrainConfig& config, const std::filesystem::path& best_dir,
                        const EpochCallback& on_epoch = {});

struct VQVAETrainConfig {
  int epochs = 100;
  int batch_size = 8;
  double learning_rate = 1e-3;
  bool augment = true;
  std::uint64_t seed = 0;
  int max_steps_per_epoch = 0;
  data::AugmentRanges ranges;

  void validate() const;
};

struct VQVAEEpochRecord {
  int epoch = 0;
  double loss = 0.0;
  double codes_for_90pct = 0.0;
  bool collapsed = false;
  double wall_time_s = 0.0;
};

std::string format_vqvae_record(const VQVAEEpochRecord& record);

using VQVAECallback = std::function<void(const VQVAEEpochRecord&)>;

/// Unlabelled pretraining on RGB crops.
nn::VQVAE train_vqvae(const data::CacheIndex& index, const std::vector<std::string>& ids,
                      const nn::VQVAESpec& spec, const VQVAETrainConfig& config,
                      const VQVAECallback& on_epoch = {});

/// Mean squared reconstruction error over a batch of RGB inputs.
double reconstruction_mse(nn::VQVAE& model, const torch::Tensor& x);

}  // namespace ginet::learn
