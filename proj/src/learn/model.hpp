#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <torch/torch.h>

#include "data/augment.hpp"
#include "nn/ginnet.hpp"
#include "nn/vqvae.hpp"

namespace ginet::learn {

enum class ModelKind { GINNet, RGINNet };

const char* model_kind_name(ModelKind kind);
ModelKind parse_model_kind(const std::string& text);

/// Either a plain GI-NNet (RGB-D input) or an RGI-NNet (RGB input through
/// the VQVAE front end).
class GraspModel {
 public:
  static GraspModel ginnet(const nn::GINNetSpec& spec, std::uint64_t seed);
  static GraspModel rginnet(const nn::VQVAE& trained, const nn::GINNetSpec& spec, std::uint64_t seed,
                            bool freeze_encoder = true);

  ModelKind kind() const { return kind_; }
  std::uint64_t seed() const { return seed_; }
  data::InputMode input_mode() const;
  const nn::GINNetSpec& grasp_spec() const { return grasp_spec_; }
  const std::optional<nn::VQVAESpec>& vqvae_spec() const { return vq_spec_; }
  bool encoder_frozen() const { return freeze_encoder_; }

  /// (B, C, H, W) -> (B, 4, H, W).
  torch::Tensor forward(const torch::Tensor& x);

  torch::nn::Module& module();
  const torch::nn::Module& module() const;
  std::vector<torch::Tensor> trainable_parameters() const;
  std::int64_t trainable_count() const;

  void train(bool on = true);
  void eval() { train(false); }

  nn::GINNet& ginnet_module() { return ginnet_; }
  nn::RGINNet& rginnet_module() { return rginnet_; }

 private:
  friend GraspModel load_checkpoint(const std::filesystem::path& dir);

  ModelKind kind_ = ModelKind::GINNet;
  std::uint64_t seed_ = 0;
  bool freeze_encoder_ = true;
  nn::GINNetSpec grasp_spec_;
  std::optional<nn::VQVAESpec> vq_spec_;
  nn::GINNet ginnet_{nullptr};
  nn::RGINNet rginnet_{nullptr};
};

/// Checkpoint directory:
///   meta.txt     format tag, kind, seed, input mode, encoder freeze flag
///   ginnet.cfg   grasp network architecture
///   vqvae.cfg    VQVAE architecture (rginnet and vqvae checkpoints)
///   weights.pt   parameters and batch-norm statistics
void save_checkpoint(const std::filesystem::path& dir, const GraspModel& model);
GraspModel load_checkpoint(const std::filesystem::path& dir);

void save_vqvae(const std::filesystem::path& dir, const nn::VQVAE& model, std::uint64_t seed);
nn::VQVAE load_vqvae(const std::filesystem::path& dir);

/// Kind recorded in a checkpoint's meta.txt ("ginnet", "rginnet" or "vqvae").
std::string checkpoint_kind(const std::filesystem::path& dir);

/// Hex FNV-1a digest of the weight file; identifies a checkpoint in reports.
std::string checkpoint_digest(const std::filesystem::path& dir);

}  // namespace ginet::learn
