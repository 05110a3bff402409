#include "support/torch_doctest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "core/grasp_maps.hpp"
#include "core/random.hpp"
#include "learn/evaluate.hpp"
#include "learn/loss.hpp"
#include "learn/model.hpp"
#include "learn/tensors.hpp"
#include "learn/train.hpp"
#include "support/expect.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace ginet;
using namespace ginet::learn;
using ginet::testing::error_of;

namespace {

nn::GINNetSpec tiny_spec(int channels = 4) {
  auto s = nn::GINNetSpec::defaults(channels);
  s.stem = {{8, 3, 1}, {16, 4, 2}, {16, 4, 2}};
  s.blocks.assign(5, nn::InceptionBlockSpec{4, 4, 4, 2, 4, 4});
  s.upsample = {{16, 4, 2}, {8, 4, 2}};
  return s;
}

const data::CacheIndex& cache() {
  static const data::CacheIndex index = [] {
    testing::SyntheticOptions opt;
    opt.scenes = 8;
    return data::read_cache_index(testing::synthetic_cache("learn", opt));
  }();
  return index;
}

MapPredictor oracle_predictor() {
  return [](const data::AugmentedScene& crop) {
    return encode_target_maps(crop.scene.positives, crop.scene.rows(), crop.scene.cols());
  };
}

// Oracle maps whose grasps are shifted and turned by a per-scene amount.
MapPredictor noisy_predictor() {
  return [](const data::AugmentedScene& crop) {
    Rng rng(derive_seed(5, crop.scene.id));
    std::vector<GraspRectangle> moved;
    for (const auto& r : crop.scene.positives) {
      auto g = rect_to_image_grasp(r);
      g.center.row += rng.uniform(-8.0, 8.0);
      g.center.col += rng.uniform(-8.0, 8.0);
      g.angle = wrap_angle(g.angle + rng.uniform(-0.7, 0.7));
      g.width *= rng.uniform(0.6, 1.4);
      moved.push_back(image_grasp_to_rect(g, jaw_height(r)));
    }
    return encode_target_maps(moved, crop.scene.rows(), crop.scene.cols());
  };
}

double scalar_loss(const torch::Tensor& target, const torch::Tensor& prediction) {
  return learn::huber_loss(target, prediction).item<double>();
}

}  // namespace

TEST_CASE("huber loss on the tabulated cases") {
  const auto zeros = torch::zeros({1, 4, 1, 1}, torch::kFloat64);
  CHECK(scalar_loss(zeros, zeros) == 0.0);
  auto half = zeros.clone();
  half[0][0][0][0] = 0.5;
  CHECK(scalar_loss(zeros, half) == 0.125);
  auto two = zeros.clone();
  two[0][2][0][0] = -2.0;
  CHECK(scalar_loss(zeros, two) == 1.5);
}

TEST_CASE("huber loss matches the element-wise oracle") {
  torch::manual_seed(1);
  const auto t = torch::randn({3, 4, 5, 6}, torch::kFloat64) * 2.0;
  const auto p = torch::randn({3, 4, 5, 6}, torch::kFloat64) * 2.0;
  double expected = 0.0;
  for (int k = 0; k < 4; ++k) {
    double sum = 0.0;
    const auto d = (t.select(1, k) - p.select(1, k)).flatten();
    for (long i = 0; i < d.numel(); ++i) sum += oracle::huber(d[i].item<double>());
    expected += sum / static_cast<double>(d.numel());
  }
  CHECK(scalar_loss(t, p) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(scalar_loss(t, p) >= 0.0);
  CHECK(error_of([&] { learn::huber_loss(t, p.narrow(3, 0, 5)); }) == ErrorCode::Shape);
}

TEST_CASE("huber gradient is continuous at the branch point") {
  for (double d : {1.0, -1.0}) {
    auto p = torch::zeros({1, 4, 1, 1}, torch::kFloat64).requires_grad_(true);
    auto t = torch::zeros({1, 4, 1, 1}, torch::kFloat64);
    t[0][0][0][0] = d;
    learn::huber_loss(t, p).backward();
    // d loss / d prediction = -sign(d) on both sides of |d| = 1.
    CHECK(p.grad()[0][0][0][0].item<double>() == doctest::Approx(-d));
  }
}

TEST_CASE("huber gradient matches central differences on 8x8 maps") {
  torch::manual_seed(2);
  auto t = torch::randn({1, 4, 8, 8}, torch::kFloat64) * 1.5;
  auto p = torch::randn({1, 4, 8, 8}, torch::kFloat64) * 1.5;
  // Keep every difference away from the kink at |d| = 1.
  {
    torch::NoGradGuard guard;
    auto d = (t - p).abs();
    p = torch::where((d - 1.0).abs() < 1e-3, p + 0.01, p);
  }
  p.requires_grad_(true);
  learn::huber_loss(t, p).backward();
  const auto analytic = p.grad().flatten();
  torch::NoGradGuard guard;
  const auto base = p.detach().flatten();
  const double h = 1e-7;
  double worst = 0.0;
  for (long i = 0; i < base.numel(); ++i) {
    auto plus = base.clone();
    auto minus = base.clone();
    plus[i] += h;
    minus[i] -= h;
    const double numeric =
        (scalar_loss(t, plus.view({1, 4, 8, 8})) - scalar_loss(t, minus.view({1, 4, 8, 8}))) / (2 * h);
    worst = std::max(worst, std::abs(analytic[i].item<double>() - numeric) / std::abs(numeric));
  }
  CHECK(worst < 1e-3);
}

TEST_CASE("loss gradient through the network matches central differences") {
  auto net = nn::build_ginnet(tiny_spec(), 3);
  net->to(torch::kFloat64);
  net->eval();
  torch::manual_seed(3);
  const auto x = torch::randn({1, 4, 8, 8}, torch::kFloat64);
  const auto target = torch::rand({1, 4, 8, 8}, torch::kFloat64);
  auto& weight = net->quality_head->weight;
  learn::huber_loss(target, net->forward(x)).backward();
  const auto analytic = weight.grad().flatten().clone();
  torch::NoGradGuard guard;
  const double h = 1e-6;
  double worst = 0.0;
  auto flat = weight.view({-1});
  for (long i = 0; i < flat.numel(); i += 7) {
    const double keep = flat[i].item<double>();
    flat[i] = keep + h;
    const double fp = scalar_loss(target, net->forward(x));
    flat[i] = keep - h;
    const double fm = scalar_loss(target, net->forward(x));
    flat[i] = keep;
    const double numeric = (fp - fm) / (2 * h);
    if (std::abs(numeric) < 1e-9) continue;
    worst = std::max(worst, std::abs(analytic[i].item<double>() - numeric) / std::abs(numeric));
  }
  CHECK(worst < 1e-3);
}

TEST_CASE("map tensors round trip") {
  GraspMapSet maps(6, 5);
  maps.quality(1, 2) = 0.5f;
  maps.sin2(3, 4) = -0.25f;
  maps.width(5, 0) = 0.75f;
  const auto t = maps_to_tensor(maps);
  CHECK(t.sizes() == torch::IntArrayRef({1, 4, 6, 5}));
  const auto back = maps_from_tensor(t);
  CHECK(back.quality == maps.quality);
  CHECK(back.sin2 == maps.sin2);
  CHECK(back.width == maps.width);
  CHECK(learn::huber_loss(maps, back) == 0.0);
}

TEST_CASE("checkpoints round trip and reject mismatches") {
  auto model = GraspModel::ginnet(tiny_spec(), 11);
  const auto dir = testing::scratch_dir("ckpt");
  save_checkpoint(dir / "a", model);
  CHECK(checkpoint_kind(dir / "a") == "ginnet");
  auto loaded = load_checkpoint(dir / "a");
  CHECK(loaded.seed() == 11);
  CHECK(loaded.trainable_count() == model.trainable_count());
  model.eval();
  loaded.eval();
  const auto x = torch::randn({1, 4, 32, 32});
  CHECK(torch::equal(model.forward(x), loaded.forward(x)));

  save_checkpoint(dir / "b", loaded);
  CHECK(checkpoint_digest(dir / "a") == checkpoint_digest(dir / "b"));

  // Architecture file no longer matching the stored weights.
  auto other = tiny_spec();
  other.head_kernel = 5;
  std::ofstream(dir / "a" / "ginnet.cfg") << other.to_text();
  CHECK(error_of([&] { load_checkpoint(dir / "a"); }) == ErrorCode::Version);

  auto meta = testing::read_file(dir / "b" / "meta.txt");
  meta.replace(meta.find("ginet-checkpoint/1"), 18, "ginet-checkpoint/7");
  std::ofstream(dir / "b" / "meta.txt") << meta;
  CHECK(error_of([&] { load_checkpoint(dir / "b"); }) == ErrorCode::Version);
  CHECK(error_of([&] { load_checkpoint(dir / "missing"); }) == ErrorCode::Io);

  const auto vq = nn::build_vqvae(nn::VQVAESpec::defaults(), 1);
  save_vqvae(dir / "vq", vq, 1);
  CHECK(checkpoint_kind(dir / "vq") == "vqvae");
  CHECK(error_of([&] { load_checkpoint(dir / "vq"); }) == ErrorCode::Version);
  CHECK(torch::equal(load_vqvae(dir / "vq")->codebook, vq->codebook));
}

TEST_CASE("rginnet checkpoints keep the encoder freeze flag") {
  auto vq_spec = nn::VQVAESpec::defaults();
  vq_spec.encoder = {{8, 4, 2}, {8, 4, 2}};
  vq_spec.num_embeddings = 16;
  vq_spec.embedding_dim = 4;
  vq_spec.decoder_conv = {8, 3, 1};
  vq_spec.decoder_up = {{8, 4, 2}, {3, 4, 2}};
  auto model = GraspModel::rginnet(nn::build_vqvae(vq_spec, 2), tiny_spec(3), 4, false);
  CHECK(model.input_mode() == data::InputMode::Rgb);
  const auto dir = testing::scratch_dir("ckpt-r");
  save_checkpoint(dir, model);
  auto loaded = load_checkpoint(dir);
  CHECK(loaded.kind() == ModelKind::RGINNet);
  CHECK(!loaded.encoder_frozen());
  model.eval();
  loaded.eval();
  const auto x = torch::randn({1, 3, 32, 32});
  CHECK(torch::equal(model.forward(x), loaded.forward(x)));
}

TEST_CASE("oracle maps score full accuracy") {
  const auto report = evaluate(oracle_predictor(), cache(), cache().ids(), {});
  CHECK(report.scenes.size() == cache().ids().size());
  CHECK(report.accuracy() == 1.0);
  CHECK(report.passed() == static_cast<int>(report.scenes.size()));
}

TEST_CASE("all-zero quality maps give the degenerate baseline") {
  const MapPredictor zero = [](const data::AugmentedScene& crop) {
    return GraspMapSet(crop.scene.rows(), crop.scene.cols());
  };
  const auto report = evaluate(zero, cache(), cache().ids(), {});
  // Tie-break grasp at (0, 0) with zero width never passes.
  CHECK(report.accuracy() == 0.0);
  for (const auto& s : report.scenes) {
    CHECK(s.grasp.center.row == 0.5);
    CHECK(s.grasp.center.col == 0.5);
    CHECK(s.grasp.width == 0.0);
  }
}

TEST_CASE("evaluation ignores the order of scene ids") {
  auto ids = cache().ids();
  const auto forward = evaluate(noisy_predictor(), cache(), ids, {});
  std::reverse(ids.begin(), ids.end());
  std::rotate(ids.begin(), ids.begin() + 3, ids.end());
  const auto shuffled = evaluate(noisy_predictor(), cache(), ids, {});
  CHECK(forward.to_text() == shuffled.to_text());
  CHECK(forward.accuracy() == doctest::Approx(static_cast<double>(forward.passed()) / forward.scenes.size()));
}

TEST_CASE("accuracy is monotone in both thresholds") {
  const auto ids = cache().ids();
  double previous = 2.0;
  for (double iou_min : {0.05, 0.15, 0.25, 0.35, 0.5, 0.7, 0.9}) {
    const double a = evaluate(noisy_predictor(), cache(), ids, {iou_min, 30.0}).accuracy();
    CHECK(a <= previous);
    previous = a;
  }
  previous = -1.0;
  for (double angle : {2.0, 5.0, 10.0, 20.0, 30.0, 45.0, 90.0}) {
    const double a = evaluate(noisy_predictor(), cache(), ids, {0.25, angle}).accuracy();
    CHECK(a >= previous);
    previous = a;
  }
}

TEST_CASE("report text carries thresholds, baselines and the parameter constants") {
  EvalReport r;
  r.model = "ginnet";
  r.checkpoint = "abc";
  r.parameters = 42;
  r.scenes = {{"pcd0100", true, {{1.5, 2.5}, 0.1, 30.0, 0.9}}, {"pcd0101", false, {}}};
  const auto text = r.to_text();
  for (const char* key : {"schema=ginet-eval-report/1", "accuracy=0.5", "iou_min=0.25", "angle_max_deg=30",
                          "params.gr-convnet=1900900", "baseline.gi-nnet=98.87", "scene=pcd0100 pass=1"}) {
    CHECK_MESSAGE(text.find(key) != std::string::npos, key);
  }
  CHECK(EvalReport{}.accuracy() == 0.0);
}

TEST_CASE("same seed gives the same epoch-0 loss") {
  TrainConfig config;
  config.epochs = 1;
  config.max_steps_per_epoch = 1;
  config.seed = 4;
  const auto ids = cache().ids();
  const std::vector<std::string> train(ids.begin(), ids.begin() + 6);
  const std::vector<std::string> val(ids.begin() + 6, ids.end());
  std::vector<double> losses;
  for (int run = 0; run < 2; ++run) {
    auto model = GraspModel::ginnet(tiny_spec(), derive_seed(config.seed, "model"));
    const auto result = train_model(model, cache(), train, val, config, testing::scratch_dir("det"));
    losses.push_back(result.history.at(0).train_loss);
  }
  CHECK(losses[0] == losses[1]);
  CHECK(std::isfinite(losses[0]));
}

TEST_CASE("a non-finite loss aborts with the batch and learning rate") {
  auto model = GraspModel::ginnet(tiny_spec(), 1);
  torch::optim::Adam opt(model.trainable_parameters(), torch::optim::AdamOptions(0.5));
  Batch batch;
  batch.ids = {"pcd0100", "pcd0101"};
  batch.input = torch::full({2, 4, 32, 32}, std::nan(""));
  batch.target = torch::zeros({2, 4, 32, 32});
  try {
    train_step(model, opt, batch);
    FAIL("expected a numeric error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Numeric);
    const std::string what = e.what();
    CHECK(what.find("pcd0100") != std::string::npos);
    CHECK(what.find("lr=0.5") != std::string::npos);
  }
}

TEST_CASE("a single batch overfits") {
  auto model = GraspModel::ginnet(tiny_spec(), 2);
  const auto ids = cache().ids();
  const auto batch =
      collate(load_samples(cache(), {ids.begin(), ids.begin() + 2}, data::InputMode::Rgbd, std::nullopt));
  torch::manual_seed(0);
  torch::optim::Adam opt(model.trainable_parameters(), torch::optim::AdamOptions(1e-3));
  model.train();
  const double first = train_step(model, opt, batch);
  double last = first;
  for (int step = 1; step < 200 && last >= 0.1 * first; ++step) last = train_step(model, opt, batch);
  MESSAGE("overfit loss " << first << " -> " << last);
  CHECK(last < 0.1 * first);
}

TEST_CASE("training configuration checks") {
  TrainConfig c;
  c.batch_size = 0;
  CHECK(error_of([&] { c.validate(); }) == ErrorCode::Config);
  c = {};
  c.learning_rate = 0.0;
  CHECK(error_of([&] { c.validate(); }) == ErrorCode::Config);
  CHECK(parse_model_kind("rginnet") == ModelKind::RGINNet);
  CHECK(error_of([] { parse_model_kind("resnet"); }) == ErrorCode::Config);
}
