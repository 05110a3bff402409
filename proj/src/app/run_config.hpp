#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace ginet::app {

struct KeyDoc {
  std::string key;
  std::string fallback;  // empty: unset unless given
  std::string help;
};

/// Environment variable naming the preprocessed cache directory.
inline constexpr const char* kCacheEnv = "GINET_CACHE";

/// Command-scoped settings. Resolution order: built-in defaults, the cache
/// environment variable, a config file, then explicit overrides. Keys that do
/// not belong to the command are rejected.
class RunConfig {
 public:
  explicit RunConfig(const std::string& command);

  static const std::vector<std::string>& commands();
  static const std::vector<KeyDoc>& keys(const std::string& command);

  const std::string& command() const { return command_; }

  void load_file(const std::filesystem::path& path);
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const;  // set to a non-empty value
  const std::string& get(const std::string& key) const;
  const std::string& require(const std::string& key) const;  // Config error when unset
  double get_double(const std::string& key) const;
  long long get_int(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  /// Every key of the command, one "key=value" line each, sorted.
  std::string to_text() const;

 private:
  void check_known(const std::string& key) const;

  std::string command_;
  std::map<std::string, std::string> values_;
};

}  // namespace ginet::app
