#include "nn/ginnet.hpp"

#include <cmath>
#include <sstream>

#include "core/error.hpp"
#include "core/kv.hpp"

namespace ginet::nn {

namespace {

std::vector<std::string> words(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> out;
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

std::pair<int, int> parse_pair(const std::string& text, const std::string& what) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) fail(ErrorCode::Config, what + ": expected 'reduce:out', got '" + text + "'");
  return {static_cast<int>(parse_int(text.substr(0, colon), what)),
          static_cast<int>(parse_int(text.substr(colon + 1), what))};
}

std::string join_layers(const std::vector<ConvSpec>& layers) {
  std::string out;
  for (const auto& l : layers) out += (out.empty() ? "" : " ") + l.to_text();
  return out;
}

std::vector<ConvSpec> parse_layers(const std::string& text) {
  std::vector<ConvSpec> out;
  for (const auto& w : words(text)) out.push_back(ConvSpec::parse(w));
  return out;
}

torch::nn::Conv2d conv(int in, int out, int kernel, int stride = 1) {
  return torch::nn::Conv2d(
      torch::nn::Conv2dOptions(in, out, kernel).stride(stride).padding((kernel - stride) / 2));
}

}  // namespace

std::string ConvSpec::to_text() const {
  return std::to_string(out_channels) + "x" + std::to_string(kernel) + "/" + std::to_string(stride);
}

ConvSpec ConvSpec::parse(const std::string& text) {
  const auto x = text.find('x');
  const auto slash = text.find('/');
  if (x == std::string::npos || slash == std::string::npos || slash < x) {
    fail(ErrorCode::Config, "layer spec must look like 'OUTxKERNEL/STRIDE', got '" + text + "'");
  }
  ConvSpec s;
  s.out_channels = static_cast<int>(parse_int(text.substr(0, x), "layer channels"));
  s.kernel = static_cast<int>(parse_int(text.substr(x + 1, slash - x - 1), "layer kernel"));
  s.stride = static_cast<int>(parse_int(text.substr(slash + 1), "layer stride"));
  return s;
}

std::string InceptionBlockSpec::to_text() const {
  std::ostringstream out;
  out << branch1x1 << ' ' << reduce3x3 << ':' << branch3x3 << ' ' << reduce5x5 << ':' << branch5x5
      << ' ' << pool_proj;
  return out.str();
}

InceptionBlockSpec InceptionBlockSpec::parse(const std::string& text) {
  const auto w = words(text);
  if (w.size() != 4) fail(ErrorCode::Config, "block spec must be 'b1 r3:b3 r5:b5 pool', got '" + text + "'");
  InceptionBlockSpec s;
  s.branch1x1 = static_cast<int>(parse_int(w[0], "block 1x1 width"));
  std::tie(s.reduce3x3, s.branch3x3) = parse_pair(w[1], "block 3x3 branch");
  std::tie(s.reduce5x5, s.branch5x5) = parse_pair(w[2], "block 5x5 branch");
  s.pool_proj = static_cast<int>(parse_int(w[3], "block pool projection"));
  return s;
}

GINNetSpec GINNetSpec::defaults(int input_channels) {
  GINNetSpec s;
  s.input_channels = input_channels;
  s.stem = {{32, 9, 1}, {64, 4, 2}, {128, 4, 2}};
  s.blocks.assign(5, InceptionBlockSpec{32, 32, 64, 8, 16, 16});
  s.upsample = {{64, 4, 2}, {32, 4, 2}, {32, 9, 1}};
  s.head_kernel = 3;
  s.dropout = 0.1;
  return s;
}

void GINNetSpec::validate() const {
  if (input_channels < 1) fail(ErrorCode::Config, "input_channels must be positive");
  if (stem.size() != 3) fail(ErrorCode::Config, "stem must have exactly 3 convolution layers");
  if (blocks.size() != 5) fail(ErrorCode::Config, "GI-NNet has exactly 5 inception blocks");
  if (upsample.empty()) fail(ErrorCode::Config, "at least one transpose convolution is required");
  auto check_layer = [](const ConvSpec& l, const char* where) {
    if (l.out_channels < 1 || l.kernel < 1 || l.stride < 1 || l.kernel < l.stride ||
        (l.kernel - l.stride) % 2 != 0) {
      fail(ErrorCode::Config, std::string(where) + " layer " + l.to_text() +
                                  " needs kernel >= stride with an even difference");
    }
  };
  for (const auto& l : stem) check_layer(l, "stem");
  for (const auto& l : upsample) check_layer(l, "upsample");
  const int width = stem.back().out_channels;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& b = blocks[i];
    if (b.branch1x1 < 1 || b.reduce3x3 < 1 || b.branch3x3 < 1 || b.reduce5x5 < 1 ||
        b.branch5x5 < 1 || b.pool_proj < 1) {
      fail(ErrorCode::Config, "block " + std::to_string(i + 1) + " has an empty branch");
    }
    if (b.out_channels() != width) {
      fail(ErrorCode::Config, "block " + std::to_string(i + 1) + " branches sum to " +
                                  std::to_string(b.out_channels()) + " but the residual needs " +
                                  std::to_string(width));
    }
  }
  int down = 1;
  for (const auto& l : stem) down *= l.stride;
  int up = 1;
  for (const auto& l : upsample) up *= l.stride;
  if (down != up) fail(ErrorCode::Config, "upsampling factor must undo the stem's downsampling");
  if (head_kernel < 1 || head_kernel % 2 == 0) fail(ErrorCode::Config, "head_kernel must be odd");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail(ErrorCode::Config, "dropout must lie in [0, 1)");
}

int GINNetSpec::downsample_factor() const {
  int down = 1;
  for (const auto& l : stem) down *= l.stride;
  return down;
}

std::string GINNetSpec::to_text() const {
  std::ostringstream out;
  out << "# GI-NNet architecture\n";
  out << "format = " << kGINNetSpecFormat << "\n";
  out << "input_channels = " << input_channels << "\n";
  out << "stem = " << join_layers(stem) << "\n";
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    out << "block" << (i + 1) << " = " << blocks[i].to_text() << "\n";
  }
  out << "upsample = " << join_layers(upsample) << "\n";
  out << "head_kernel = " << head_kernel << "\n";
  out << "dropout = " << format_double(dropout) << "\n";
  return out.str();
}

GINNetSpec GINNetSpec::parse(const std::string& text) {
  const KeyValues kv = KeyValues::parse(text, "ginnet spec");
  if (kv.get_or("format", "") != kGINNetSpecFormat) {
    fail(ErrorCode::Version, "expected architecture format " + std::string(kGINNetSpecFormat));
  }
  std::vector<std::string> known = {"format", "input_channels", "stem", "upsample", "head_kernel", "dropout"};
  GINNetSpec s;
  s.input_channels = static_cast<int>(kv.get_int("input_channels"));
  s.stem = parse_layers(kv.get("stem"));
  for (int i = 1; kv.has("block" + std::to_string(i)); ++i) {
    known.push_back("block" + std::to_string(i));
    s.blocks.push_back(InceptionBlockSpec::parse(kv.get("block" + std::to_string(i))));
  }
  s.upsample = parse_layers(kv.get("upsample"));
  s.head_kernel = static_cast<int>(kv.get_int("head_kernel"));
  s.dropout = kv.get_double("dropout");
  kv.require_known(known);
  s.validate();
  return s;
}

InceptionBlockImpl::InceptionBlockImpl(int channels, const InceptionBlockSpec& spec)
    : channels_(channels) {
  if (spec.out_channels() != channels) {
    fail(ErrorCode::Config, "inception branches sum to " + std::to_string(spec.out_channels()) +
                                ", input has " + std::to_string(channels) + " channels");
  }
  b1 = register_module("b1", conv(channels, spec.branch1x1, 1));
  r3 = register_module("r3", conv(channels, spec.reduce3x3, 1));
  b3 = register_module("b3", conv(spec.reduce3x3, spec.branch3x3, 3));
  r5 = register_module("r5", conv(channels, spec.reduce5x5, 1));
  b5 = register_module("b5", conv(spec.reduce5x5, spec.branch5x5, 5));
  pool_proj = register_module("pool_proj", conv(channels, spec.pool_proj, 1));
  norm = register_module("norm", torch::nn::BatchNorm2d(channels));
}

torch::Tensor InceptionBlockImpl::forward(const torch::Tensor& x) {
  if (x.dim() != 4 || x.size(1) != channels_) {
    fail(ErrorCode::Shape, "inception block expects " + std::to_string(channels_) + " channels");
  }
  auto y1 = torch::relu(b1(x));
  auto y3 = torch::relu(b3(torch::relu(r3(x))));
  auto y5 = torch::relu(b5(torch::relu(r5(x))));
  auto yp = torch::relu(pool_proj(torch::max_pool2d(x, 3, 1, 1)));
  return norm(torch::cat({y1, y3, y5, yp}, 1) + x);
}

GINNetImpl::GINNetImpl(const GINNetSpec& spec) : spec_(spec) {
  spec_.validate();
  stem = torch::nn::Sequential();
  int channels = spec_.input_channels;
  for (const auto& l : spec_.stem) {
    stem->push_back(conv(channels, l.out_channels, l.kernel, l.stride));
    stem->push_back(torch::nn::BatchNorm2d(l.out_channels));
    stem->push_back(torch::nn::ReLU());
    channels = l.out_channels;
  }
  register_module("stem", stem);
  blocks = torch::nn::ModuleList();
  for (const auto& b : spec_.blocks) blocks->push_back(InceptionBlock(channels, b));
  register_module("blocks", blocks);
  upsample = torch::nn::Sequential();
  for (const auto& l : spec_.upsample) {
    upsample->push_back(torch::nn::ConvTranspose2d(
        torch::nn::ConvTranspose2dOptions(channels, l.out_channels, l.kernel)
            .stride(l.stride)
            .padding(l.padding())));
    upsample->push_back(torch::nn::BatchNorm2d(l.out_channels));
    upsample->push_back(torch::nn::ReLU());
    channels = l.out_channels;
  }
  register_module("upsample", upsample);
  drop_stem = register_module("drop_stem", torch::nn::Dropout(spec_.dropout));
  drop_blocks = register_module("drop_blocks", torch::nn::Dropout(spec_.dropout));
  drop_upsample = register_module("drop_upsample", torch::nn::Dropout(spec_.dropout));
  quality_head = register_module("quality_head", conv(channels, 1, spec_.head_kernel));
  sin_head = register_module("sin_head", conv(channels, 1, spec_.head_kernel));
  cos_head = register_module("cos_head", conv(channels, 1, spec_.head_kernel));
  width_head = register_module("width_head", conv(channels, 1, spec_.head_kernel));
}

torch::Tensor GINNetImpl::forward(const torch::Tensor& x) {
  if (x.dim() != 4 || x.size(1) != spec_.input_channels) {
    fail(ErrorCode::Shape, "GI-NNet expects (B, " + std::to_string(spec_.input_channels) +
                               ", H, W) input");
  }
  const int factor = spec_.downsample_factor();
  if (x.size(2) % factor != 0 || x.size(3) % factor != 0) {
    fail(ErrorCode::Shape, "input height and width must be multiples of " + std::to_string(factor));
  }
  auto h = drop_stem(stem->forward(x));
  const auto middle = blocks->size() / 2;
  for (std::size_t i = 0; i < blocks->size(); ++i) {
    h = blocks[i]->as<InceptionBlock>()->forward(h);
    if (i + 1 == middle + 1) h = drop_blocks(h);
  }
  h = upsample->forward(drop_upsample(h));
  return torch::cat({torch::sigmoid(quality_head(h)), torch::tanh(sin_head(h)),
                     torch::tanh(cos_head(h)), width_head(h)},
                    1);
}

void he_initialize(torch::nn::Module& module) {
  torch::NoGradGuard no_grad;
  for (auto& m : module.modules(/*include_self=*/true)) {
    if (auto* c = m->as<torch::nn::Conv2d>()) {
      const double fan_in = static_cast<double>(c->weight.size(1) * c->weight.size(2) * c->weight.size(3));
      c->weight.normal_(0.0, std::sqrt(2.0 / fan_in));
      if (c->bias.defined()) c->bias.zero_();
    } else if (auto* t = m->as<torch::nn::ConvTranspose2d>()) {
      // Transpose-conv weights are (in, out, k, k).
      const double fan_in = static_cast<double>(t->weight.size(0) * t->weight.size(2) * t->weight.size(3));
      t->weight.normal_(0.0, std::sqrt(2.0 / fan_in));
      if (t->bias.defined()) t->bias.zero_();
    } else if (auto* b = m->as<torch::nn::BatchNorm2d>()) {
      b->weight.fill_(1.0);
      b->bias.zero_();
    }
  }
}

GINNet build_ginnet(const GINNetSpec& spec, std::uint64_t seed) {
  torch::manual_seed(seed);
  GINNet net(spec);
  he_initialize(*net);
  return net;
}

std::int64_t count_params(const torch::nn::Module& module) {
  std::int64_t n = 0;
  for (const auto& p : module.parameters()) {
    if (p.requires_grad()) n += p.numel();
  }
  return n;
}

}  // namespace ginet::nn
