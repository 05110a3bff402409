#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "nn/ginnet.hpp"

namespace ginet::nn {

inline constexpr const char* kVQVAESpecFormat = "vqvae-spec/1";

struct VQVAESpec {
  int input_channels = 3;
  std::vector<ConvSpec> encoder;        // ReLU after each layer
  int num_embeddings = 512;             // N
  int embedding_dim = 64;               // D
  double commitment = 0.25;             // beta
  ConvSpec decoder_conv;                // first decoder layer (stride 1)
  std::vector<ConvSpec> decoder_up;     // transpose convs; the last one is linear

  static VQVAESpec defaults();
  void validate() const;
  int downsample_factor() const;
  std::string to_text() const;
  static VQVAESpec parse(const std::string& text);
};

struct QuantizeResult {
  torch::Tensor quantized;     // (B, D, h, w): rows of the codebook, differentiable w.r.t. it
  torch::Tensor passthrough;   // same values; gradients flow straight to the encoder output
  torch::Tensor indices;       // (B, h, w) int64
};

/// Nearest-codebook-row quantization of every spatial site of z_e
/// (B, D, h, w) against codebook (N, D). Ties go to the smallest index.
QuantizeResult quantize(const torch::Tensor& z_e, const torch::Tensor& codebook);

/// Identity in the forward pass (returns `quantized` exactly); the backward
/// pass hands the incoming gradient to `z_e` unchanged.
torch::Tensor straight_through(const torch::Tensor& z_e, const torch::Tensor& quantized);

/// Reconstruction MSE + codebook term ||sg[z_e] - e||^2 + beta ||z_e - sg[e]||^2,
/// each averaged over elements.
torch::Tensor vqvae_loss(const torch::Tensor& x, const torch::Tensor& recon, const torch::Tensor& z_e,
                         const torch::Tensor& z_q, double beta);

struct VQVAEOutput {
  torch::Tensor recon;
  torch::Tensor z_e;
  QuantizeResult q;
};

class VQVAEImpl : public torch::nn::Module {
 public:
  explicit VQVAEImpl(const VQVAESpec& spec);

  /// Encoder plus the 1x1 projection into the embedding dimension.
  torch::Tensor encode(const torch::Tensor& x);
  torch::Tensor decode(const torch::Tensor& z_q);
  VQVAEOutput forward(const torch::Tensor& x);

  const VQVAESpec& spec() const { return spec_; }

  torch::nn::Sequential encoder{nullptr};
  torch::nn::Conv2d projection{nullptr};
  torch::Tensor codebook;
  torch::nn::Sequential decoder{nullptr};

 private:
  VQVAESpec spec_;
};
TORCH_MODULE(VQVAE);

/// Builds a VQVAE from a seed: He-initialized convolutions, codebook drawn
/// uniformly from [-1/N, 1/N].
VQVAE build_vqvae(const VQVAESpec& spec, std::uint64_t seed);

/// Fresh decoder stack for a spec.
torch::nn::Sequential make_decoder(const VQVAESpec& spec);

/// Frozen VQVAE encoder + quantizer, a re-initialized decoder whose
/// reconstruction feeds a 3-channel GI-NNet.
class RGINNetImpl : public torch::nn::Module {
 public:
  RGINNetImpl(const VQVAESpec& vq_spec, const GINNetSpec& grasp_spec, bool freeze_encoder = true);

  torch::Tensor forward(const torch::Tensor& x);

  /// Sets training mode while keeping a frozen encoder in evaluation mode.
  void train(bool on = true) override;

  bool encoder_frozen() const { return freeze_encoder_; }

  torch::nn::Sequential encoder{nullptr};
  torch::nn::Conv2d projection{nullptr};
  torch::Tensor codebook;
  torch::nn::Sequential decoder{nullptr};
  GINNet grasp{nullptr};

 private:
  VQVAESpec vq_spec_;
  bool freeze_encoder_;
};
TORCH_MODULE(RGINNet);

/// Copies encoder, projection and codebook from a trained VQVAE, initializes
/// the decoder and GI-NNet afresh, and checks that the decoder output fits
/// the GI-NNet input. Throws Shape on an incompatible assembly.
RGINNet assemble_rginnet(const VQVAE& trained, const GINNetSpec& grasp_spec, std::uint64_t seed,
                         bool freeze_encoder = true, int probe_size = 224);

struct CodebookUsage {
  std::vector<std::int64_t> counts;  // per embedding
  /// Smallest fraction of codes that covers 90% of sites.
  double codes_for_90pct = 0.0;
  bool collapsed = false;            // >= 90% of sites on < 5% of codes
};

CodebookUsage codebook_usage(const torch::Tensor& indices, int num_embeddings);

}  // namespace ginet::nn
