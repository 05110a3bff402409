#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <torch/torch.h>

namespace ginet::nn {

/// One convolution (or transpose convolution) layer: output channels, square
/// kernel, stride. Padding is (kernel - stride) / 2, so stride-1 layers keep
/// the size and stride-2 layers halve (or double) it.
struct ConvSpec {
  int out_channels = 0;
  int kernel = 0;
  int stride = 1;

  int padding() const { return (kernel - stride) / 2; }
  std::string to_text() const;
  static ConvSpec parse(const std::string& text);
};

/// Branch widths of an inception block. Branch outputs are concatenated and
/// added back to the block input, so they must sum to the input width.
struct InceptionBlockSpec {
  int branch1x1 = 0;
  int reduce3x3 = 0;
  int branch3x3 = 0;
  int reduce5x5 = 0;
  int branch5x5 = 0;
  int pool_proj = 0;

  int out_channels() const { return branch1x1 + branch3x3 + branch5x5 + pool_proj; }
  std::string to_text() const;
  static InceptionBlockSpec parse(const std::string& text);
};

inline constexpr const char* kGINNetSpecFormat = "ginnet-spec/1";

struct GINNetSpec {
  int input_channels = 4;
  std::vector<ConvSpec> stem;
  std::vector<InceptionBlockSpec> blocks;
  std::vector<ConvSpec> upsample;
  int head_kernel = 3;
  double dropout = 0.1;

  /// The committed default architecture (589,804 trainable parameters).
  static GINNetSpec defaults(int input_channels = 4);

  /// Throws Config describing the first inconsistency.
  void validate() const;

  int downsample_factor() const;

  std::string to_text() const;
  static GINNetSpec parse(const std::string& text);
};

/// Inception block with residual addition:
///   y = BatchNorm(concat(b1, b3, b5, pool) + x)
/// Every convolution inside a branch is followed by ReLU.
class InceptionBlockImpl : public torch::nn::Module {
 public:
  InceptionBlockImpl(int channels, const InceptionBlockSpec& spec);

  torch::Tensor forward(const torch::Tensor& x);

  torch::nn::Conv2d b1{nullptr}, r3{nullptr}, b3{nullptr}, r5{nullptr}, b5{nullptr}, pool_proj{nullptr};
  torch::nn::BatchNorm2d norm{nullptr};

 private:
  int channels_;
};
TORCH_MODULE(InceptionBlock);

/// Output channels of a forward pass, in order.
enum MapChannel : int { kQuality = 0, kSin2 = 1, kCos2 = 2, kWidth = 3 };

class GINNetImpl : public torch::nn::Module {
 public:
  explicit GINNetImpl(const GINNetSpec& spec);

  /// (B, C, H, W) -> (B, 4, H, W): sigmoid quality, tanh sin/cos, linear width.
  torch::Tensor forward(const torch::Tensor& x);

  const GINNetSpec& spec() const { return spec_; }

  torch::nn::Sequential stem{nullptr};
  torch::nn::ModuleList blocks{nullptr};
  torch::nn::Sequential upsample{nullptr};
  torch::nn::Dropout drop_stem{nullptr}, drop_blocks{nullptr}, drop_upsample{nullptr};
  torch::nn::Conv2d quality_head{nullptr}, sin_head{nullptr}, cos_head{nullptr}, width_head{nullptr};

 private:
  GINNetSpec spec_;
};
TORCH_MODULE(GINNet);

/// He (Kaiming) normal initialization of every convolution and transpose
/// convolution below `module`: weights ~ N(0, 2 / fan_in) with fan_in =
/// input channels * kernel area; biases zero. Batch-norm scale 1, shift 0.
void he_initialize(torch::nn::Module& module);

/// Builds and initializes a GI-NNet; the same seed gives identical weights.
GINNet build_ginnet(const GINNetSpec& spec, std::uint64_t seed);

/// Number of trainable scalars.
std::int64_t count_params(const torch::nn::Module& module);

/// Published comparison constants.
inline constexpr std::int64_t kGRConvNetParams = 1'900'900;
inline constexpr std::int64_t kGINNetReportedParams = 592'300;

}  // namespace ginet::nn
