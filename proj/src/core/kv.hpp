#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace ginet {

/// Ordered "key = value" records. '#' starts a comment; blank lines are
/// ignored; a repeated key is a parse error.
class KeyValues {
 public:
  static KeyValues parse(const std::string& text, const std::string& source = "<text>");
  static KeyValues load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  const std::string& get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  void set(const std::string& key, const std::string& value);

  double get_double(const std::string& key) const;
  long long get_int(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  /// Throws Config naming the first key not in `allowed`.
  void require_known(const std::vector<std::string>& allowed) const;

  const std::map<std::string, std::string>& entries() const { return values_; }
  std::string to_text() const;

 private:
  std::map<std::string, std::string> values_;
};

double parse_double(const std::string& text, const std::string& what);
long long parse_int(const std::string& text, const std::string& what);
bool parse_bool(const std::string& text, const std::string& what);

/// Shortest round-trip decimal form.
std::string format_double(double value);

}  // namespace ginet
