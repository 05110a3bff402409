// ginet command-line tool. Talks to the library only through ginet.h.
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ginet/ginet.h"

namespace {

struct CommandFlags {
  std::string config_file;
  std::vector<std::string> overrides;      // key=value
  std::map<std::string, std::string> values;
};

std::string flag_name(std::string key) {
  for (auto& ch : key) {
    if (ch == '_') ch = '-';
  }
  return "--" + key;
}

int report(ginet_status status) {
  std::fprintf(stderr, "error: category=%s message=%s\n", ginet_status_name(status), ginet_last_error());
  return static_cast<int>(status);
}

int run(const std::string& command, const CommandFlags& flags) {
  ginet_config* config = nullptr;
  ginet_status status = ginet_config_new(command.c_str(), &config);
  if (status != GINET_OK) return report(status);
  if (!flags.config_file.empty()) status = ginet_config_load(config, flags.config_file.c_str());
  for (const auto& [key, value] : flags.values) {
    if (status == GINET_OK) status = ginet_config_set(config, key.c_str(), value.c_str());
  }
  for (const auto& kv : flags.overrides) {
    if (status != GINET_OK) break;
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "error: category=config message=--set expects key=value, got '%s'\n", kv.c_str());
      ginet_config_free(config);
      return GINET_CONFIG;
    }
    status = ginet_config_set(config, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str());
  }
  if (status == GINET_OK) status = ginet_run(config);
  ginet_config_free(config);
  return status == GINET_OK ? 0 : report(status);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Grasp detection with GI-NNet and RGI-NNet on the Cornell Grasping Dataset.\n"
               "The GINET_CACHE environment variable names the preprocessed cache directory\n"
               "(output of convert, input of the other commands)."};
  app.require_subcommand(1);
  app.set_version_flag("--version", ginet_version());

  const std::map<std::string, std::string> descriptions = {
      {"convert", "Convert a raw Cornell dataset directory into the preprocessed cache"},
      {"train", "Train a GI-NNet or RGI-NNet model"},
      {"eval", "Score a checkpoint with the rectangle metric"},
      {"predict", "Print the top grasps for one image or cached scene"},
      {"viz", "Write overlay, quality, angle and width images"},
  };
  std::map<std::string, CommandFlags> flags;
  std::map<std::string, CLI::App*> subs;
  for (const char* command : {"convert", "train", "eval", "predict", "viz"}) {
    auto& f = flags[command];
    auto* sub = app.add_subcommand(command, descriptions.at(command));
    sub->add_option("--config", f.config_file, "key = value configuration file")->check(CLI::ExistingFile);
    sub->add_option("--set", f.overrides, "extra key=value setting (repeatable)");
    const size_t n = ginet_config_key_count(command);
    for (size_t i = 0; i < n; ++i) {
      const std::string key = ginet_config_key_name(command, i);
      std::string help = ginet_config_key_help(command, i);
      const std::string fallback = ginet_config_key_default(command, i);
      if (!fallback.empty()) help += " [default: " + fallback + "]";
      sub->add_option_function<std::string>(
          flag_name(key), [&f, key](const std::string& v) { f.values[key] = v; }, help);
    }
    subs[command] = sub;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "error: category=config message=%s\n", e.what());
    return GINET_CONFIG;
  }
  for (const auto& [command, sub] : subs) {
    if (sub->parsed()) return run(command, flags[command]);
  }
  return GINET_CONFIG;
}
