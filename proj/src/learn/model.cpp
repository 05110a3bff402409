#include "learn/model.hpp"

#include <fstream>
#include <sstream>

#include "core/error.hpp"
#include "core/kv.hpp"
#include "core/random.hpp"

namespace ginet::learn {

namespace {

constexpr const char* kCheckpointFormat = "ginet-checkpoint/1";

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorCode::Io, "write failed: " + path.string());
}

void save_weights(const std::filesystem::path& path, const torch::nn::Module& module) {
  torch::serialize::OutputArchive archive;
  module.save(archive);
  archive.save_to(path.string());
}

void load_weights(const std::filesystem::path& path, torch::nn::Module& module) {
  if (!std::filesystem::exists(path)) fail(ErrorCode::Io, "missing " + path.string());
  // Module::load swaps storage in place and would accept any shape.
  std::vector<std::pair<std::string, std::vector<std::int64_t>>> expected;
  for (const auto& item : module.named_parameters()) expected.emplace_back(item.key(), item.value().sizes().vec());
  for (const auto& item : module.named_buffers()) expected.emplace_back(item.key(), item.value().sizes().vec());
  try {
    torch::serialize::InputArchive archive;
    archive.load_from(path.string());
    module.load(archive);
  } catch (const c10::Error& e) {
    std::string what = e.what_without_backtrace();
    fail(ErrorCode::Version, "weights in " + path.string() + " do not match the recorded architecture: " +
                                 what.substr(0, what.find('\n')));
  }
  auto loaded = module.named_parameters();
  auto buffers = module.named_buffers();
  for (const auto& [name, sizes] : expected) {
    const auto* t = loaded.find(name);
    if (t == nullptr) t = buffers.find(name);
    if (t == nullptr || t->sizes().vec() != sizes) {
      fail(ErrorCode::Version, "weights in " + path.string() + " do not match the recorded architecture: '" +
                                   name + "' has another shape");
    }
  }
}

KeyValues read_meta(const std::filesystem::path& dir) {
  const auto path = dir / "meta.txt";
  if (!std::filesystem::exists(path)) fail(ErrorCode::Io, "not a checkpoint directory: " + dir.string());
  KeyValues meta = KeyValues::parse(read_text(path), path.string());
  if (meta.get_or("format", "") != kCheckpointFormat) {
    fail(ErrorCode::Version, "unsupported checkpoint format '" + meta.get_or("format", "") + "' in " +
                                 path.string() + " (expected " + kCheckpointFormat + ")");
  }
  return meta;
}

std::uint64_t parse_seed(const std::string& text) {
  return static_cast<std::uint64_t>(parse_int(text, "seed"));
}

}  // namespace

const char* model_kind_name(ModelKind kind) { return kind == ModelKind::GINNet ? "ginnet" : "rginnet"; }

ModelKind parse_model_kind(const std::string& text) {
  if (text == "ginnet") return ModelKind::GINNet;
  if (text == "rginnet") return ModelKind::RGINNet;
  fail(ErrorCode::Config, "model must be 'ginnet' or 'rginnet', got '" + text + "'");
}

GraspModel GraspModel::ginnet(const nn::GINNetSpec& spec, std::uint64_t seed) {
  GraspModel m;
  m.kind_ = ModelKind::GINNet;
  m.seed_ = seed;
  m.grasp_spec_ = spec;
  m.ginnet_ = nn::build_ginnet(spec, seed);
  return m;
}

GraspModel GraspModel::rginnet(const nn::VQVAE& trained, const nn::GINNetSpec& spec, std::uint64_t seed,
                               bool freeze_encoder) {
  GraspModel m;
  m.kind_ = ModelKind::RGINNet;
  m.seed_ = seed;
  m.freeze_encoder_ = freeze_encoder;
  m.grasp_spec_ = spec;
  m.vq_spec_ = trained->spec();
  m.rginnet_ = nn::assemble_rginnet(trained, spec, seed, freeze_encoder);
  return m;
}

data::InputMode GraspModel::input_mode() const {
  return kind_ == ModelKind::GINNet && grasp_spec_.input_channels == 4 ? data::InputMode::Rgbd
                                                                       : data::InputMode::Rgb;
}

torch::Tensor GraspModel::forward(const torch::Tensor& x) {
  return kind_ == ModelKind::GINNet ? ginnet_->forward(x) : rginnet_->forward(x);
}

torch::nn::Module& GraspModel::module() {
  if (kind_ == ModelKind::GINNet) return *ginnet_;
  return *rginnet_;
}

const torch::nn::Module& GraspModel::module() const {
  if (kind_ == ModelKind::GINNet) return *ginnet_;
  return *rginnet_;
}

std::vector<torch::Tensor> GraspModel::trainable_parameters() const {
  std::vector<torch::Tensor> out;
  for (const auto& p : module().parameters()) {
    if (p.requires_grad()) out.push_back(p);
  }
  return out;
}

std::int64_t GraspModel::trainable_count() const { return nn::count_params(module()); }

void GraspModel::train(bool on) {
  if (kind_ == ModelKind::GINNet) {
    ginnet_->train(on);
  } else {
    rginnet_->train(on);
  }
}

void save_checkpoint(const std::filesystem::path& dir, const GraspModel& model) {
  std::filesystem::create_directories(dir);
  std::ostringstream meta;
  meta << "format = " << kCheckpointFormat << "\n";
  meta << "kind = " << model_kind_name(model.kind()) << "\n";
  meta << "seed = " << model.seed() << "\n";
  meta << "input = " << (model.input_mode() == data::InputMode::Rgbd ? "rgbd" : "rgb") << "\n";
  meta << "freeze_encoder = " << (model.encoder_frozen() ? "true" : "false") << "\n";
  write_text(dir / "meta.txt", meta.str());
  write_text(dir / "ginnet.cfg", model.grasp_spec().to_text());
  if (model.vqvae_spec()) {
    write_text(dir / "vqvae.cfg", model.vqvae_spec()->to_text());
  } else {
    std::filesystem::remove(dir / "vqvae.cfg");
  }
  save_weights(dir / "weights.pt", model.module());
}

GraspModel load_checkpoint(const std::filesystem::path& dir) {
  const KeyValues meta = read_meta(dir);
  meta.require_known({"format", "kind", "seed", "input", "freeze_encoder"});
  const std::string kind = meta.get("kind");
  if (kind == "vqvae") fail(ErrorCode::Version, dir.string() + " holds a VQVAE, not a grasp model");
  GraspModel m;
  m.kind_ = parse_model_kind(kind);
  m.seed_ = parse_seed(meta.get("seed"));
  m.freeze_encoder_ = meta.get_bool("freeze_encoder");
  m.grasp_spec_ = nn::GINNetSpec::parse(read_text(dir / "ginnet.cfg"));
  if (m.kind_ == ModelKind::GINNet) {
    m.ginnet_ = nn::GINNet(m.grasp_spec_);
  } else {
    m.vq_spec_ = nn::VQVAESpec::parse(read_text(dir / "vqvae.cfg"));
    m.rginnet_ = nn::RGINNet(*m.vq_spec_, m.grasp_spec_, m.freeze_encoder_);
  }
  const std::string input = meta.get("input");
  if (input != (m.input_mode() == data::InputMode::Rgbd ? "rgbd" : "rgb")) {
    fail(ErrorCode::Version, "checkpoint input mode '" + input + "' does not match its architecture");
  }
  load_weights(dir / "weights.pt", m.module());
  m.eval();
  return m;
}

void save_vqvae(const std::filesystem::path& dir, const nn::VQVAE& model, std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  std::ostringstream meta;
  meta << "format = " << kCheckpointFormat << "\n";
  meta << "kind = vqvae\n";
  meta << "seed = " << seed << "\n";
  write_text(dir / "meta.txt", meta.str());
  write_text(dir / "vqvae.cfg", model->spec().to_text());
  save_weights(dir / "weights.pt", *model);
}

nn::VQVAE load_vqvae(const std::filesystem::path& dir) {
  const KeyValues meta = read_meta(dir);
  meta.require_known({"format", "kind", "seed"});
  if (meta.get("kind") != "vqvae") fail(ErrorCode::Version, dir.string() + " is not a VQVAE checkpoint");
  nn::VQVAE model(nn::VQVAESpec::parse(read_text(dir / "vqvae.cfg")));
  load_weights(dir / "weights.pt", *model);
  model->eval();
  return model;
}

std::string checkpoint_kind(const std::filesystem::path& dir) { return read_meta(dir).get("kind"); }

std::string checkpoint_digest(const std::filesystem::path& dir) {
  const std::uint64_t h = fnv1a(read_text(dir / "weights.pt"));
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace ginet::learn
