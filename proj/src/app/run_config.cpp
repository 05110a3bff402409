#include "app/run_config.hpp"

#include <algorithm>
#include <cstdlib>

#include "core/error.hpp"
#include "core/kv.hpp"

namespace ginet::app {

namespace {

const std::vector<KeyDoc> kSplitKeys = {
    {"seed", "0", "seed for splits, initialization and augmentation"},
    {"test_fraction", "0.1", "share of scenes held out for testing"},
    {"label_fraction", "1", "share of the training portion whose labels are used"},
    {"subset_fraction", "1", "share of cached scenes used at all (desk-scale runs)"},
};

const std::vector<KeyDoc> kThresholdKeys = {
    {"iou_min", "0.25", "rectangle metric: IOU must exceed this"},
    {"angle_max", "30", "rectangle metric: orientation offset must stay below this (degrees)"},
};

std::vector<KeyDoc> join(std::initializer_list<std::vector<KeyDoc>> parts) {
  std::vector<KeyDoc> out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

const std::map<std::string, std::vector<KeyDoc>>& table() {
  static const std::map<std::string, std::vector<KeyDoc>> t = {
      {"convert",
       {{"data", "", "raw Cornell dataset directory"},
        {"out", "", "cache directory to write (defaults to $GINET_CACHE)"},
        {"depth_units", "auto", "point-cloud z units: auto, m or mm"}}},
      {"train",
       join({{{"data", "", "cache directory (defaults to $GINET_CACHE)"},
              {"out", "", "run directory for checkpoints and logs"},
              {"model", "ginnet", "ginnet or rginnet"}},
             kSplitKeys,
             kThresholdKeys,
             {{"val_fraction", "0.1", "share of labelled training scenes used for checkpoint selection"},
              {"epochs", "50", "training epochs"},
              {"batch_size", "8", "scenes per optimizer step"},
              {"learning_rate", "0.001", "Adam learning rate"},
              {"augment", "true", "random rotation, zoom and translation of training crops"},
              {"max_steps_per_epoch", "0", "cap on optimizer steps per epoch (0 = none)"},
              {"threads", "1", "intra-op threads; results are reproducible only for a fixed value"},
              {"ginnet_spec", "", "architecture file for the grasp network"},
              {"vqvae_spec", "", "architecture file for the VQVAE"},
              {"vqvae_checkpoint", "", "pretrained VQVAE; trained on the training pool when unset"},
              {"vqvae_epochs", "100", "VQVAE pretraining epochs"},
              {"vqvae_augment", "true", "augment VQVAE pretraining crops"},
              {"freeze_encoder", "true", "keep the VQVAE encoder and codebook fixed in RGI-NNet"}}})},
      {"eval",
       join({{{"data", "", "cache directory (defaults to $GINET_CACHE)"},
              {"checkpoint", "", "checkpoint directory"},
              {"out", "", "report file (stdout when unset)"},
              {"split", "test", "scenes to score: test, train or all"}},
             {{"seed", "", "split seed (defaults to the checkpoint's seed)"},
              {"test_fraction", "0.1", "share of scenes held out for testing"},
              {"subset_fraction", "1", "share of cached scenes used at all"}},
             kThresholdKeys,
             {{"threads", "1", "intra-op threads"}}})},
      {"predict",
       {{"checkpoint", "", "checkpoint directory"},
        {"image", "", "RGB image to run on"},
        {"depth", "", "depth for --image: .garr grid or .pcd cloud (metres)"},
        {"data", "", "cache directory, used with scene"},
        {"scene", "", "cached scene id to run on"},
        {"calib", "", "camera calibration file; adds robot-frame grasps"},
        {"top_k", "5", "number of grasps to report"},
        {"out", "", "output file (stdout when unset)"},
        {"threads", "1", "intra-op threads"}}},
      {"viz",
       {{"checkpoint", "", "checkpoint directory; ground-truth maps are drawn when unset"},
        {"image", "", "RGB image to run on"},
        {"depth", "", "depth for --image: .garr grid or .pcd cloud (metres)"},
        {"data", "", "cache directory, used with scene"},
        {"scene", "", "cached scene id to run on"},
        {"out", "", "output directory for the four images"},
        {"threads", "1", "intra-op threads"}}},
  };
  return t;
}

}  // namespace

const std::vector<std::string>& RunConfig::commands() {
  static const std::vector<std::string> names = {"convert", "train", "eval", "predict", "viz"};
  return names;
}

const std::vector<KeyDoc>& RunConfig::keys(const std::string& command) {
  auto it = table().find(command);
  if (it == table().end()) fail(ErrorCode::Config, "unknown command '" + command + "'");
  return it->second;
}

RunConfig::RunConfig(const std::string& command) : command_(command) {
  for (const auto& k : keys(command)) values_[k.key] = k.fallback;
  const char* cache = std::getenv(kCacheEnv);
  if (cache != nullptr && *cache != '\0') {
    // convert writes the cache; every other command reads it.
    values_[command == "convert" ? "out" : "data"] = cache;
  }
}

void RunConfig::check_known(const std::string& key) const {
  if (values_.count(key) == 0) {
    fail(ErrorCode::Config, "unknown configuration key '" + key + "' for command '" + command_ + "'");
  }
}

void RunConfig::load_file(const std::filesystem::path& path) {
  const KeyValues kv = KeyValues::load(path);
  for (const auto& [key, value] : kv.entries()) check_known(key);
  for (const auto& [key, value] : kv.entries()) values_[key] = value;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  check_known(key);
  values_[key] = value;
}

bool RunConfig::has(const std::string& key) const { return !get(key).empty(); }

const std::string& RunConfig::get(const std::string& key) const {
  check_known(key);
  return values_.at(key);
}

const std::string& RunConfig::require(const std::string& key) const {
  const auto& v = get(key);
  if (v.empty()) fail(ErrorCode::Config, "command '" + command_ + "' needs '" + key + "'");
  return v;
}

double RunConfig::get_double(const std::string& key) const { return parse_double(require(key), key); }
long long RunConfig::get_int(const std::string& key) const { return parse_int(require(key), key); }
bool RunConfig::get_bool(const std::string& key) const { return parse_bool(require(key), key); }

std::string RunConfig::to_text() const {
  std::string out;
  for (const auto& [key, value] : values_) out += key + "=" + value + "\n";
  return out;
}

}  // namespace ginet::app
