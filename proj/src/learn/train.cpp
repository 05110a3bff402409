#include "learn/train.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "core/error.hpp"
#include "core/kv.hpp"
#include "core/random.hpp"
#include "learn/evaluate.hpp"
#include "learn/loss.hpp"

namespace ginet::learn {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

/// Deterministic per-epoch order of the training scenes.
std::vector<std::string> shuffled(std::vector<std::string> ids, std::uint64_t seed, int epoch) {
  std::sort(ids.begin(), ids.end());
  Rng rng(derive_seed(seed, "epoch-order", static_cast<std::uint64_t>(epoch)));
  for (std::size_t i = ids.size(); i > 1; --i) std::swap(ids[i - 1], ids[rng.below(i)]);
  return ids;
}

std::string join_ids(const std::vector<std::string>& ids) {
  std::string out;
  for (const auto& id : ids) out += (out.empty() ? "" : ",") + id;
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 1) fail(ErrorCode::Config, "batch_size must be at least 1");
  if (!(learning_rate > 0.0)) fail(ErrorCode::Config, "learning_rate must be positive");
  if (epochs < 1) fail(ErrorCode::Config, "epochs must be at least 1");
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) fail(ErrorCode::Config, "val_fraction must lie in [0, 1)");
  if (max_steps_per_epoch < 0) fail(ErrorCode::Config, "max_steps_per_epoch must be non-negative");
  split.validate();
  thresholds.validate();
}

void VQVAETrainConfig::validate() const {
  if (batch_size < 1) fail(ErrorCode::Config, "vqvae batch_size must be at least 1");
  if (!(learning_rate > 0.0)) fail(ErrorCode::Config, "vqvae learning_rate must be positive");
  if (epochs < 1) fail(ErrorCode::Config, "vqvae epochs must be at least 1");
  if (max_steps_per_epoch < 0) fail(ErrorCode::Config, "max_steps_per_epoch must be non-negative");
}

std::string format_epoch_record(const EpochRecord& r) {
  std::ostringstream out;
  out << "epoch=" << r.epoch << " train_loss=" << format_double(r.train_loss)
      << " val_accuracy=" << format_double(r.val_accuracy) << " wall_time_s=" << format_double(r.wall_time_s);
  return out.str();
}

std::string format_vqvae_record(const VQVAEEpochRecord& r) {
  std::ostringstream out;
  out << "vqvae_epoch=" << r.epoch << " loss=" << format_double(r.loss)
      << " codes_for_90pct=" << format_double(r.codes_for_90pct) << " collapsed=" << (r.collapsed ? 1 : 0)
      << " wall_time_s=" << format_double(r.wall_time_s);
  return out.str();
}

std::vector<Sample> load_samples(const data::CacheIndex& index, const std::vector<std::string>& ids,
                                 data::InputMode mode, std::optional<std::uint64_t> augment_seed, int epoch,
                                 const data::AugmentRanges& ranges) {
  std::vector<Sample> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    const data::SceneRecord scene = data::load_cached_scene(index, id);
    const data::AugmentedScene crop =
        augment_seed ? data::augment(scene, derive_seed(*augment_seed, id, static_cast<std::uint64_t>(epoch)), ranges)
                     : data::center_crop(scene);
    out.push_back(make_sample(crop, mode));
  }
  return out;
}

double batch_loss(GraspModel& model, const Batch& batch) {
  torch::NoGradGuard no_grad;
  return learn::huber_loss(batch.target, model.forward(batch.input)).item<double>();
}

double train_step(GraspModel& model, torch::optim::Optimizer& optimizer, const Batch& batch) {
  optimizer.zero_grad();
  const auto loss = learn::huber_loss(batch.target, model.forward(batch.input));
  const double value = loss.item<double>();
  if (!std::isfinite(value)) {
    const auto& options = static_cast<const torch::optim::AdamOptions&>(optimizer.param_groups().front().options());
    fail(ErrorCode::Numeric, "non-finite loss " + format_double(value) + " on batch [" + join_ids(batch.ids) +
                                 "] at lr=" + format_double(options.lr()));
  }
  loss.backward();
  optimizer.step();
  return value;
}

TrainResult train_model(GraspModel& model, const data::CacheIndex& index,
                        const std::vector<std::string>& train_ids, const std::vector<std::string>& val_ids,
                        const TrainConfig& config, const std::filesystem::path& best_dir,
                        const EpochCallback& on_epoch) {
  config.validate();
  if (train_ids.empty()) fail(ErrorCode::InvalidArgument, "no labelled training scenes");
  torch::manual_seed(derive_seed(config.seed, "train"));
  torch::optim::Adam optimizer(model.trainable_parameters(),
                               torch::optim::AdamOptions(config.learning_rate));
  const data::InputMode mode = model.input_mode();

  TrainResult result;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto start = Clock::now();
    model.train();
    const auto order = shuffled(train_ids, config.seed, epoch);
    double loss_sum = 0.0;
    int steps = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      if (config.max_steps_per_epoch > 0 && steps >= config.max_steps_per_epoch) break;
      const std::vector<std::string> chunk(order.begin() + begin,
                                           order.begin() + std::min(order.size(), begin + config.batch_size));
      const auto samples = load_samples(index, chunk, mode,
                                        config.augment ? std::optional(derive_seed(config.seed, "augment"))
                                                       : std::nullopt,
                                        epoch, config.ranges);
      loss_sum += train_step(model, optimizer, collate(samples));
      ++steps;
    }
    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = loss_sum / steps;
    if (!val_ids.empty()) {
      record.val_accuracy =
          evaluate(model_predictor(model), index, val_ids, config.thresholds, config.decode).accuracy();
    }
    record.wall_time_s = seconds_since(start);
    result.history.push_back(record);
    // Without a validation set every epoch counts as an improvement, so the last one is kept.
    if (result.best_epoch < 0 || val_ids.empty() || record.val_accuracy > result.best_val_accuracy) {
      result.best_epoch = epoch;
      result.best_val_accuracy = record.val_accuracy;
      save_checkpoint(best_dir, model);
    }
    if (on_epoch) on_epoch(record);
  }
  return result;
}

double reconstruction_mse(nn::VQVAE& model, const torch::Tensor& x) {
  torch::NoGradGuard no_grad;
  model->eval();
  return (model->forward(x).recon - x).pow(2).mean().item<double>();
}

nn::VQVAE train_vqvae(const data::CacheIndex& index, const std::vector<std::string>& ids,
                      const nn::VQVAESpec& spec, const VQVAETrainConfig& config, const VQVAECallback& on_epoch) {
  config.validate();
  spec.validate();
  if (ids.empty()) fail(ErrorCode::InvalidArgument, "no scenes for VQVAE pretraining");
  nn::VQVAE model = nn::build_vqvae(spec, derive_seed(config.seed, "vqvae-init"));
  torch::manual_seed(derive_seed(config.seed, "vqvae-train"));
  torch::optim::Adam optimizer(model->parameters(), torch::optim::AdamOptions(config.learning_rate));

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto start = Clock::now();
    model->train();
    const auto order = shuffled(ids, config.seed, epoch);
    double loss_sum = 0.0;
    int steps = 0;
    std::vector<torch::Tensor> indices;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      if (config.max_steps_per_epoch > 0 && steps >= config.max_steps_per_epoch) break;
      const std::vector<std::string> chunk(order.begin() + begin,
                                           order.begin() + std::min(order.size(), begin + config.batch_size));
      const auto samples = load_samples(index, chunk, data::InputMode::Rgb,
                                        config.augment ? std::optional(derive_seed(config.seed, "vqvae-augment"))
                                                       : std::nullopt,
                                        epoch, config.ranges);
      const auto x = collate(samples).input;
      optimizer.zero_grad();
      const auto out = model->forward(x);
      const auto loss = nn::vqvae_loss(x, out.recon, out.z_e, out.q.quantized, spec.commitment);
      const double value = loss.item<double>();
      if (!std::isfinite(value)) {
        fail(ErrorCode::Numeric, "non-finite VQVAE loss on batch [" + join_ids(chunk) +
                                     "] at lr=" + format_double(config.learning_rate));
      }
      loss.backward();
      optimizer.step();
      loss_sum += value;
      indices.push_back(out.q.indices.detach().view({-1}));
      ++steps;
    }
    const auto usage = nn::codebook_usage(torch::cat(indices), spec.num_embeddings);
    VQVAEEpochRecord record;
    record.epoch = epoch;
    record.loss = loss_sum / steps;
    record.codes_for_90pct = usage.codes_for_90pct;
    record.collapsed = usage.collapsed;
    record.wall_time_s = seconds_since(start);
    if (on_epoch) on_epoch(record);
  }
  model->eval();
  return model;
}

}  // namespace ginet::learn
