#include "core/kv.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "core/error.hpp"

namespace ginet {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

KeyValues KeyValues::parse(const std::string& text, const std::string& source) {
  KeyValues kv;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(ErrorCode::Parse, source + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) fail(ErrorCode::Parse, source + ":" + std::to_string(line_no) + ": empty key");
    if (kv.has(key)) {
      fail(ErrorCode::Parse, source + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    kv.values_[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

KeyValues KeyValues::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str(), path.string());
}

const std::string& KeyValues::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) fail(ErrorCode::Config, "missing key '" + key + "'");
  return it->second;
}

std::string KeyValues::get_or(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

void KeyValues::set(const std::string& key, const std::string& value) { values_[key] = value; }

double KeyValues::get_double(const std::string& key) const { return parse_double(get(key), key); }
long long KeyValues::get_int(const std::string& key) const { return parse_int(get(key), key); }
bool KeyValues::get_bool(const std::string& key) const { return parse_bool(get(key), key); }

void KeyValues::require_known(const std::vector<std::string>& allowed) const {
  for (const auto& [key, value] : values_) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      fail(ErrorCode::Config, "unknown configuration key '" + key + "'");
    }
  }
}

std::string KeyValues::to_text() const {
  std::string out;
  for (const auto& [key, value] : values_) out += key + " = " + value + "\n";
  return out;
}

double parse_double(const std::string& text, const std::string& what) {
  const char* begin = text.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0') fail(ErrorCode::Config, what + ": not a number: '" + text + "'");
  return v;
}

long long parse_int(const std::string& text, const std::string& what) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    fail(ErrorCode::Config, what + ": not an integer: '" + text + "'");
  }
  return v;
}

bool parse_bool(const std::string& text, const std::string& what) {
  if (text == "1" || text == "true" || text == "on" || text == "yes") return true;
  if (text == "0" || text == "false" || text == "off" || text == "no") return false;
  fail(ErrorCode::Config, what + ": not a boolean: '" + text + "'");
}

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

}  // namespace ginet
