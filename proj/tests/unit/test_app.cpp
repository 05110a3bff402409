#include "support/torch_doctest.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <opencv2/imgcodecs.hpp>

#include "app/commands.hpp"
#include "app/render.hpp"
#include "app/run_config.hpp"
#include "frames/frames.hpp"
#include "nn/ginnet.hpp"
#include "nn/vqvae.hpp"
#include "support/expect.hpp"
#include "support/synthetic.hpp"

using namespace ginet;
using namespace ginet::app;
using ginet::testing::error_of;
namespace fs = std::filesystem;

namespace {

std::string run(const std::string& command, const std::vector<std::pair<std::string, std::string>>& settings,
                std::string* log_text = nullptr) {
  RunConfig config(command);
  for (const auto& [k, v] : settings) config.set(k, v);
  std::ostringstream out;
  std::ostringstream log;
  run_command(config, out, log);
  if (log_text) *log_text = log.str();
  return out.str();
}

std::string value_of(const std::string& text, const std::string& key) {
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (line.rfind(key + "=", 0) == 0) return line.substr(key.size() + 1);
  }
  return {};
}

// Metrics lines without their wall-clock field.
std::string without_wall_time(const std::string& text) {
  std::istringstream in(text);
  std::string out;
  for (std::string line; std::getline(in, line);) out += line.substr(0, line.find(" wall_time_s=")) + "\n";
  return out;
}

struct Workspace {
  fs::path root;
  fs::path raw;
  fs::path cache;
  fs::path spec;
  fs::path run;
  std::string convert_out;
  std::string train_out;
};

const Workspace& workspace() {
  static const Workspace ws = [] {
    Workspace w;
    w.root = testing::scratch_dir("app");
    w.raw = w.root / "raw";
    w.cache = w.root / "cache";
    testing::SyntheticOptions opt;
    opt.scenes = 10;
    testing::write_synthetic_dataset(w.raw, opt);
    w.convert_out = run("convert", {{"data", w.raw.string()}, {"out", w.cache.string()}});

    auto spec = nn::GINNetSpec::defaults(4);
    spec.stem = {{8, 3, 1}, {16, 4, 2}, {16, 4, 2}};
    spec.blocks.assign(5, nn::InceptionBlockSpec{4, 4, 4, 2, 4, 4});
    spec.upsample = {{16, 4, 2}, {8, 4, 2}};
    w.spec = w.root / "tiny.cfg";
    std::ofstream(w.spec) << spec.to_text();

    w.run = w.root / "run";
    w.train_out = run("train", {{"data", w.cache.string()},
                                {"out", w.run.string()},
                                {"ginnet_spec", w.spec.string()},
                                {"epochs", "2"},
                                {"batch_size", "2"},
                                {"max_steps_per_epoch", "2"},
                                {"test_fraction", "0.2"},
                                {"val_fraction", "0.25"},
                                {"seed", "3"}});
    return w;
  }();
  return ws;
}

}  // namespace

TEST_CASE("unknown keys and commands are config errors") {
  RunConfig config("train");
  CHECK(error_of([&] { config.set("learning_rte", "0.1"); }) == ErrorCode::Config);
  CHECK(error_of([] { RunConfig c("fit"); }) == ErrorCode::Config);
  CHECK(error_of([&] { config.require("data"); }) == ErrorCode::Config);
  CHECK(config.get("batch_size") == "8");
  CHECK(config.get("learning_rate") == "0.001");
  config.set("epochs", "many");
  CHECK(error_of([&] { config.get_int("epochs"); }) == ErrorCode::Config);
  for (const auto& command : RunConfig::commands()) {
    for (const auto& doc : RunConfig::keys(command)) CHECK(!doc.help.empty());
  }
}

TEST_CASE("config files and overrides resolve in order") {
  const auto dir = testing::scratch_dir("cfg");
  std::ofstream(dir / "run.cfg") << "# tuned\nepochs = 5\nseed=9\n";
  ::setenv(kCacheEnv, "/data/cache", 1);
  RunConfig config("train");
  ::unsetenv(kCacheEnv);
  CHECK(config.get("data") == "/data/cache");
  config.load_file(dir / "run.cfg");
  config.set("seed", "10");
  CHECK(config.get_int("epochs") == 5);
  CHECK(config.get_int("seed") == 10);
  CHECK(config.to_text().find("epochs=5\n") != std::string::npos);
  std::ofstream(dir / "bad.cfg") << "colour=red\n";
  CHECK(error_of([&] { config.load_file(dir / "bad.cfg"); }) == ErrorCode::Config);
}

TEST_CASE("colormap endpoints") {
  CHECK(heat_color(0.0) == cv::Vec3b(0, 0, 255));
  CHECK(heat_color(0.5) == cv::Vec3b(255, 255, 255));
  CHECK(heat_color(1.0) == cv::Vec3b(255, 0, 0));
  CHECK(heat_color(-3.0) == heat_color(0.0));
  CHECK(heat_color(7.0) == heat_color(1.0));
  Grid<float> g(1, 3);
  g(0, 0) = 0.0f;
  g(0, 1) = 75.0f;
  g(0, 2) = 150.0f;
  const auto img = heatmap(g, kWidthRange[0], kWidthRange[1]);
  CHECK(img.at<cv::Vec3b>(0, 0) == cv::Vec3b(0, 0, 255));
  CHECK(img.at<cv::Vec3b>(0, 1) == cv::Vec3b(255, 255, 255));
  CHECK(img.at<cv::Vec3b>(0, 2) == cv::Vec3b(255, 0, 0));
}

TEST_CASE("convert summarizes the dataset") {
  const auto& w = workspace();
  CHECK(value_of(w.convert_out, "scenes") == "10");
  CHECK(value_of(w.convert_out, "positives") == "30");
  CHECK(value_of(w.convert_out, "negatives") == "20");
  CHECK(value_of(w.convert_out, "augment_multiplicity") == "10");
  CHECK(std::stol(value_of(w.convert_out, "augmented_grasps")) <= 300);
  CHECK(std::stol(value_of(w.convert_out, "augmented_grasps")) > 0);
}

TEST_CASE("train writes its run directory") {
  const auto& w = workspace();
  for (const char* f : {"config.txt", "splits.txt", "metrics.log", "checkpoint/meta.txt", "checkpoint/weights.pt"}) {
    CHECK_MESSAGE(fs::exists(w.run / f), f);
  }
  CHECK(value_of(w.train_out, "checkpoint") == (w.run / "checkpoint").string());
  const auto metrics = testing::read_file(w.run / "metrics.log");
  CHECK(metrics.rfind("epoch=0 train_loss=", 0) == 0);
  CHECK(metrics.find("\nepoch=1 ") != std::string::npos);
  const auto splits = testing::read_file(w.run / "splits.txt");
  CHECK(splits.find("test pcd") != std::string::npos);
  CHECK(splits.find("val pcd") != std::string::npos);
}

TEST_CASE("same seed reproduces splits and epoch-0 loss") {
  const auto& w = workspace();
  const auto again = w.root / "run-again";
  run("train", {{"data", w.cache.string()},
                {"out", again.string()},
                {"ginnet_spec", w.spec.string()},
                {"epochs", "1"},
                {"batch_size", "2"},
                {"max_steps_per_epoch", "2"},
                {"test_fraction", "0.2"},
                {"val_fraction", "0.25"},
                {"seed", "3"}});
  CHECK(testing::read_file(again / "splits.txt") == testing::read_file(w.run / "splits.txt"));
  const auto first = without_wall_time(testing::read_file(w.run / "metrics.log"));
  const auto second = without_wall_time(testing::read_file(again / "metrics.log"));
  CHECK(second == first.substr(0, first.find('\n') + 1));
}

TEST_CASE("eval is bitwise repeatable") {
  const auto& w = workspace();
  const std::vector<std::pair<std::string, std::string>> settings{
      {"data", w.cache.string()}, {"checkpoint", (w.run / "checkpoint").string()}, {"test_fraction", "0.2"}};
  const auto a = run("eval", settings);
  const auto b = run("eval", settings);
  CHECK(a == b);
  CHECK(value_of(a, "schema") == "ginet-eval-report/1");
  CHECK(value_of(a, "scenes") == "2");
  CHECK(value_of(a, "params.gr-convnet") == "1900900");

  const auto file = w.root / "report.txt";
  auto with_out = settings;
  with_out.emplace_back("out", file.string());
  CHECK(run("eval", with_out).empty());
  CHECK(testing::read_file(file) == a);
  auto bad = settings;
  bad.emplace_back("split", "everything");
  CHECK(error_of([&] { run("eval", bad); }) == ErrorCode::Config);
}

TEST_CASE("viz writes exactly four images") {
  const auto& w = workspace();
  const auto dir = w.root / "viz";
  const auto out = run("viz", {{"data", w.cache.string()},
                               {"scene", "pcd0100"},
                               {"checkpoint", (w.run / "checkpoint").string()},
                               {"out", dir.string()}});
  int files = 0;
  for (const auto& entry : fs::directory_iterator(dir)) {
    ++files;
    const auto img = cv::imread(entry.path().string());
    CHECK(img.rows == 224);
    CHECK(img.cols == 224);
  }
  CHECK(files == 4);
  for (const char* name : {"overlay.png", "quality.png", "angle.png", "width.png"}) CHECK(fs::exists(dir / name));

  const auto truth = w.root / "viz-truth";
  run("viz", {{"data", w.cache.string()}, {"scene", "pcd0101"}, {"out", truth.string()}});
  CHECK(std::distance(fs::directory_iterator(truth), fs::directory_iterator{}) == 4);
}

TEST_CASE("predict prints image and robot grasps") {
  const auto& w = workspace();
  const auto calib = w.root / "cal.txt";
  frames::Calibration cal{{600.0, 600.0, 160.0, 120.0}, frames::Extrinsic::identity()};
  std::ofstream(calib) << frames::format_calibration(cal);
  const auto out = run("predict", {{"data", w.cache.string()},
                                   {"scene", "pcd0102"},
                                   {"checkpoint", (w.run / "checkpoint").string()},
                                   {"top_k", "3"},
                                   {"calib", calib.string()}});
  CHECK(value_of(out, "schema") == "ginet-predictions/1");
  const int count = std::stoi(value_of(out, "count"));
  CHECK(count >= 1);
  CHECK(count <= 3);
  CHECK(out.find("grasp=0 row=") != std::string::npos);
  CHECK(out.find("robot=0 x=") != std::string::npos);

  // An RGB-D checkpoint cannot run on an image without depth.
  const auto image = w.raw / "01" / "pcd0100r.png";
  CHECK(error_of([&] {
          run("predict", {{"image", image.string()}, {"checkpoint", (w.run / "checkpoint").string()}});
        }) == ErrorCode::NoDepth);
  CHECK(error_of([&] {
          run("predict", {{"scene", "pcd0100"}, {"data", w.cache.string()}, {"top_k", "0"},
                          {"checkpoint", (w.run / "checkpoint").string()}});
        }) == ErrorCode::Config);
}

TEST_CASE("rginnet training pretrains a VQVAE first") {
  const auto& w = workspace();
  auto vq = nn::VQVAESpec::defaults();
  vq.encoder = {{8, 4, 2}, {8, 4, 2}};
  vq.num_embeddings = 16;
  vq.embedding_dim = 4;
  vq.decoder_conv = {8, 3, 1};
  vq.decoder_up = {{8, 4, 2}, {3, 4, 2}};
  const auto vq_file = w.root / "vq.cfg";
  std::ofstream(vq_file) << vq.to_text();
  auto grasp = nn::GINNetSpec::parse(testing::read_file(w.spec));
  grasp.input_channels = 3;
  const auto grasp_file = w.root / "tiny3.cfg";
  std::ofstream(grasp_file) << grasp.to_text();
  const auto dir = w.root / "run-r";
  run("train", {{"data", w.cache.string()},
                {"out", dir.string()},
                {"model", "rginnet"},
                {"ginnet_spec", grasp_file.string()},
                {"vqvae_spec", vq_file.string()},
                {"vqvae_epochs", "1"},
                {"epochs", "1"},
                {"batch_size", "2"},
                {"max_steps_per_epoch", "1"},
                {"label_fraction", "0.5"}});
  CHECK(fs::exists(dir / "vqvae" / "weights.pt"));
  CHECK(testing::read_file(dir / "vqvae_metrics.log").rfind("vqvae_epoch=0 loss=", 0) == 0);
  CHECK(testing::read_file(dir / "splits.txt").find("unlabelled pcd") != std::string::npos);
  // A 4-channel spec cannot back an RGB model.
  CHECK(error_of([&] {
          run("train", {{"data", w.cache.string()}, {"out", (w.root / "run-bad").string()}, {"model", "rginnet"},
                        {"ginnet_spec", w.spec.string()}});
        }) == ErrorCode::Config);
}
