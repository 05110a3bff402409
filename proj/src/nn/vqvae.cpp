#include "nn/vqvae.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "core/error.hpp"
#include "core/kv.hpp"

namespace ginet::nn {

namespace {

std::vector<ConvSpec> parse_layers(const std::string& text) {
  std::istringstream in(text);
  std::vector<ConvSpec> out;
  std::string w;
  while (in >> w) out.push_back(ConvSpec::parse(w));
  return out;
}

std::string join_layers(const std::vector<ConvSpec>& layers) {
  std::string out;
  for (const auto& l : layers) out += (out.empty() ? "" : " ") + l.to_text();
  return out;
}

torch::nn::Conv2d conv(int in, int out, int kernel, int stride = 1) {
  return torch::nn::Conv2d(
      torch::nn::Conv2dOptions(in, out, kernel).stride(stride).padding((kernel - stride) / 2));
}

torch::nn::Sequential make_encoder(const VQVAESpec& spec) {
  torch::nn::Sequential seq;
  int channels = spec.input_channels;
  for (const auto& l : spec.encoder) {
    seq->push_back(conv(channels, l.out_channels, l.kernel, l.stride));
    seq->push_back(torch::nn::ReLU());
    channels = l.out_channels;
  }
  return seq;
}

class StraightThroughFn : public torch::autograd::Function<StraightThroughFn> {
 public:
  static torch::Tensor forward(torch::autograd::AutogradContext* /*ctx*/, const torch::Tensor& z_e,
                               const torch::Tensor& quantized) {
    (void)z_e;
    return quantized.detach().clone();
  }

  static torch::autograd::variable_list backward(torch::autograd::AutogradContext* /*ctx*/,
                                                 torch::autograd::variable_list grad) {
    return {grad[0], torch::Tensor()};
  }
};

void copy_parameters(const torch::nn::Module& from, torch::nn::Module& to) {
  auto src = from.named_parameters();
  auto dst = to.named_parameters();
  if (src.size() != dst.size()) fail(ErrorCode::Shape, "encoder layouts differ");
  for (const auto& item : src) {
    auto* target = dst.find(item.key());
    if (target == nullptr || !target->sizes().equals(item.value().sizes())) {
      fail(ErrorCode::Shape, "encoder parameter '" + item.key() + "' does not match");
    }
    target->copy_(item.value());
  }
}

}  // namespace

VQVAESpec VQVAESpec::defaults() {
  VQVAESpec s;
  s.input_channels = 3;
  s.encoder = {{64, 4, 2}, {128, 4, 2}};
  s.num_embeddings = 512;
  s.embedding_dim = 64;
  s.commitment = 0.25;
  s.decoder_conv = {128, 3, 1};
  s.decoder_up = {{64, 4, 2}, {3, 4, 2}};
  return s;
}

void VQVAESpec::validate() const {
  if (input_channels < 1) fail(ErrorCode::Config, "vqvae input_channels must be positive");
  if (encoder.empty()) fail(ErrorCode::Config, "vqvae encoder needs at least one layer");
  if (num_embeddings < 1) fail(ErrorCode::Config, "codebook must not be empty");
  if (embedding_dim < 1) fail(ErrorCode::Config, "embedding_dim must be positive");
  if (!(commitment >= 0.0)) fail(ErrorCode::Config, "commitment weight must be non-negative");
  if (decoder_conv.stride != 1 || decoder_conv.kernel % 2 == 0) {
    fail(ErrorCode::Config, "decoder_conv must be an odd-kernel stride-1 layer");
  }
  if (decoder_up.empty()) fail(ErrorCode::Config, "decoder needs at least one transpose convolution");
  for (const auto* layers : {&encoder, &decoder_up}) {
    for (const auto& l : *layers) {
      if (l.out_channels < 1 || l.kernel < l.stride || (l.kernel - l.stride) % 2 != 0) {
        fail(ErrorCode::Config, "vqvae layer " + l.to_text() + " has inconsistent padding");
      }
    }
  }
  int up = 1;
  for (const auto& l : decoder_up) up *= l.stride;
  if (up != downsample_factor()) fail(ErrorCode::Config, "decoder must undo the encoder's downsampling");
}

int VQVAESpec::downsample_factor() const {
  int down = 1;
  for (const auto& l : encoder) down *= l.stride;
  return down;
}

std::string VQVAESpec::to_text() const {
  std::ostringstream out;
  out << "# VQVAE architecture\n";
  out << "format = " << kVQVAESpecFormat << "\n";
  out << "input_channels = " << input_channels << "\n";
  out << "encoder = " << join_layers(encoder) << "\n";
  out << "num_embeddings = " << num_embeddings << "\n";
  out << "embedding_dim = " << embedding_dim << "\n";
  out << "commitment = " << format_double(commitment) << "\n";
  out << "decoder_conv = " << decoder_conv.to_text() << "\n";
  out << "decoder_up = " << join_layers(decoder_up) << "\n";
  return out.str();
}

VQVAESpec VQVAESpec::parse(const std::string& text) {
  const KeyValues kv = KeyValues::parse(text, "vqvae spec");
  if (kv.get_or("format", "") != kVQVAESpecFormat) {
    fail(ErrorCode::Version, "expected architecture format " + std::string(kVQVAESpecFormat));
  }
  kv.require_known({"format", "input_channels", "encoder", "num_embeddings", "embedding_dim",
                    "commitment", "decoder_conv", "decoder_up"});
  VQVAESpec s;
  s.input_channels = static_cast<int>(kv.get_int("input_channels"));
  s.encoder = parse_layers(kv.get("encoder"));
  s.num_embeddings = static_cast<int>(kv.get_int("num_embeddings"));
  s.embedding_dim = static_cast<int>(kv.get_int("embedding_dim"));
  s.commitment = kv.get_double("commitment");
  s.decoder_conv = ConvSpec::parse(kv.get("decoder_conv"));
  s.decoder_up = parse_layers(kv.get("decoder_up"));
  s.validate();
  return s;
}

QuantizeResult quantize(const torch::Tensor& z_e, const torch::Tensor& codebook) {
  if (!codebook.defined() || codebook.dim() != 2 || codebook.size(0) == 0) {
    fail(ErrorCode::Config, "quantize needs a non-empty (N, D) codebook");
  }
  if (z_e.dim() != 4 || z_e.size(1) != codebook.size(1)) {
    fail(ErrorCode::Shape, "latent channel count must equal the embedding dimension");
  }
  const auto dim = codebook.size(1);
  torch::Tensor indices;
  {
    torch::NoGradGuard no_grad;
    const auto flat = z_e.detach().permute({0, 2, 3, 1}).reshape({-1, dim}).to(torch::kFloat64);
    const auto table = codebook.detach().to(torch::kFloat64);
    const auto dist = flat.pow(2).sum(1, true) - 2.0 * flat.matmul(table.t()) +
                      table.pow(2).sum(1).unsqueeze(0);
    indices = std::get<1>(dist.min(1));
  }
  const auto b = z_e.size(0);
  const auto h = z_e.size(2);
  const auto w = z_e.size(3);
  QuantizeResult out;
  out.quantized = codebook.index_select(0, indices).view({b, h, w, dim}).permute({0, 3, 1, 2});
  out.passthrough = straight_through(z_e, out.quantized);
  out.indices = indices.view({b, h, w});
  return out;
}

torch::Tensor straight_through(const torch::Tensor& z_e, const torch::Tensor& quantized) {
  return StraightThroughFn::apply(z_e, quantized);
}

torch::Tensor vqvae_loss(const torch::Tensor& x, const torch::Tensor& recon, const torch::Tensor& z_e,
                         const torch::Tensor& z_q, double beta) {
  if (!x.sizes().equals(recon.sizes()) || !z_e.sizes().equals(z_q.sizes())) {
    fail(ErrorCode::Shape, "vqvae loss operands have mismatched shapes");
  }
  const auto reconstruction = (recon - x).pow(2).mean();
  const auto codebook_term = (z_q - z_e.detach()).pow(2).mean();
  const auto commitment_term = (z_e - z_q.detach()).pow(2).mean();
  return reconstruction + codebook_term + beta * commitment_term;
}

torch::nn::Sequential make_decoder(const VQVAESpec& spec) {
  torch::nn::Sequential seq;
  seq->push_back(conv(spec.embedding_dim, spec.decoder_conv.out_channels, spec.decoder_conv.kernel));
  seq->push_back(torch::nn::ReLU());
  int channels = spec.decoder_conv.out_channels;
  for (std::size_t i = 0; i < spec.decoder_up.size(); ++i) {
    const auto& l = spec.decoder_up[i];
    seq->push_back(torch::nn::ConvTranspose2d(
        torch::nn::ConvTranspose2dOptions(channels, l.out_channels, l.kernel)
            .stride(l.stride)
            .padding(l.padding())));
    if (i + 1 < spec.decoder_up.size()) seq->push_back(torch::nn::ReLU());
    channels = l.out_channels;
  }
  return seq;
}

VQVAEImpl::VQVAEImpl(const VQVAESpec& spec) : spec_(spec) {
  spec_.validate();
  encoder = register_module("encoder", make_encoder(spec_));
  projection = register_module(
      "projection", conv(spec_.encoder.back().out_channels, spec_.embedding_dim, 1));
  codebook = register_parameter("codebook", torch::zeros({spec_.num_embeddings, spec_.embedding_dim}));
  decoder = register_module("decoder", make_decoder(spec_));
}

torch::Tensor VQVAEImpl::encode(const torch::Tensor& x) {
  if (x.dim() != 4 || x.size(1) != spec_.input_channels) {
    fail(ErrorCode::Shape, "VQVAE expects (B, " + std::to_string(spec_.input_channels) + ", H, W) input");
  }
  return projection(encoder->forward(x));
}

torch::Tensor VQVAEImpl::decode(const torch::Tensor& z_q) { return decoder->forward(z_q); }

VQVAEOutput VQVAEImpl::forward(const torch::Tensor& x) {
  VQVAEOutput out;
  out.z_e = encode(x);
  out.q = quantize(out.z_e, codebook);
  out.recon = decode(out.q.passthrough);
  return out;
}

VQVAE build_vqvae(const VQVAESpec& spec, std::uint64_t seed) {
  torch::manual_seed(seed);
  VQVAE model(spec);
  he_initialize(*model);
  torch::NoGradGuard no_grad;
  const double bound = 1.0 / spec.num_embeddings;
  model->codebook.uniform_(-bound, bound);
  return model;
}

RGINNetImpl::RGINNetImpl(const VQVAESpec& vq_spec, const GINNetSpec& grasp_spec, bool freeze_encoder)
    : vq_spec_(vq_spec), freeze_encoder_(freeze_encoder) {
  vq_spec_.validate();
  if (vq_spec_.decoder_up.back().out_channels != grasp_spec.input_channels) {
    fail(ErrorCode::Shape, "invalid assembly: decoder emits " +
                               std::to_string(vq_spec_.decoder_up.back().out_channels) +
                               " channels, GI-NNet expects " + std::to_string(grasp_spec.input_channels));
  }
  encoder = register_module("encoder", make_encoder(vq_spec_));
  projection = register_module(
      "projection", conv(vq_spec_.encoder.back().out_channels, vq_spec_.embedding_dim, 1));
  codebook = register_parameter("codebook",
                                torch::zeros({vq_spec_.num_embeddings, vq_spec_.embedding_dim}));
  decoder = register_module("decoder", make_decoder(vq_spec_));
  grasp = register_module("grasp", GINNet(grasp_spec));
  if (freeze_encoder_) {
    for (auto& p : encoder->parameters()) p.set_requires_grad(false);
    for (auto& p : projection->parameters()) p.set_requires_grad(false);
    codebook.set_requires_grad(false);
  }
}

torch::Tensor RGINNetImpl::forward(const torch::Tensor& x) {
  if (x.dim() != 4 || x.size(1) != vq_spec_.input_channels) {
    fail(ErrorCode::Shape, "RGI-NNet expects (B, " + std::to_string(vq_spec_.input_channels) + ", H, W) input");
  }
  const auto z_e = projection(encoder->forward(x));
  const auto q = quantize(z_e, codebook);
  return grasp(decoder->forward(q.passthrough));
}

void RGINNetImpl::train(bool on) {
  torch::nn::Module::train(on);
  if (freeze_encoder_) {
    encoder->eval();
    projection->eval();
  }
}

RGINNet assemble_rginnet(const VQVAE& trained, const GINNetSpec& grasp_spec, std::uint64_t seed,
                         bool freeze_encoder, int probe_size) {
  torch::manual_seed(seed);
  RGINNet model(trained->spec(), grasp_spec, freeze_encoder);
  he_initialize(*model->decoder);
  he_initialize(*model->grasp);
  {
    torch::NoGradGuard no_grad;
    copy_parameters(*trained->encoder, *model->encoder);
    copy_parameters(*trained->projection, *model->projection);
    model->codebook.copy_(trained->codebook);
    model->eval();
    const auto probe = torch::zeros({1, trained->spec().input_channels, probe_size, probe_size});
    const auto z = model->projection(model->encoder->forward(probe));
    const auto recon = model->decoder->forward(quantize(z, model->codebook).quantized);
    if (recon.size(2) != probe_size || recon.size(3) != probe_size) {
      fail(ErrorCode::Shape, "invalid assembly: decoder output " + std::to_string(recon.size(2)) + "x" +
                                 std::to_string(recon.size(3)) + " does not match input " +
                                 std::to_string(probe_size));
    }
  }
  model->train();
  return model;
}

CodebookUsage codebook_usage(const torch::Tensor& indices, int num_embeddings) {
  CodebookUsage usage;
  usage.counts.assign(static_cast<std::size_t>(num_embeddings), 0);
  const auto flat = indices.to(torch::kInt64).contiguous().view({-1});
  const auto* data = flat.data_ptr<std::int64_t>();
  for (std::int64_t i = 0; i < flat.numel(); ++i) usage.counts[static_cast<std::size_t>(data[i])] += 1;
  std::vector<std::int64_t> sorted = usage.counts;
  std::sort(sorted.rbegin(), sorted.rend());
  const auto total = std::accumulate(sorted.begin(), sorted.end(), std::int64_t{0});
  if (total == 0) return usage;
  std::int64_t covered = 0;
  std::size_t needed = 0;
  while (needed < sorted.size() && covered * 10 < total * 9) covered += sorted[needed++];
  usage.codes_for_90pct = static_cast<double>(needed) / num_embeddings;
  usage.collapsed = usage.codes_for_90pct < 0.05;
  return usage;
}

}  // namespace ginet::nn
