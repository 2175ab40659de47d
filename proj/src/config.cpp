#include "sentinel/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace sentinel {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::string strip_quotes(const std::string& s) {
  if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') || (s.front() == '\'' && s.back() == '\'')))
    return s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string> split_list(const std::string& value) {
  std::string body = value;
  if (body.size() >= 2 && body.front() == '[' && body.back() == ']')
    body = body.substr(1, body.size() - 2);
  std::vector<std::string> items;
  std::string item;
  std::stringstream ss(body);
  while (std::getline(ss, item, ',')) {
    item = strip_quotes(trim(item));
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

}  // namespace

Config Config::parse_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_string(buffer.str(), path.string());
}

Config Config::parse_string(const std::string& text, const std::string& name) {
  Config config;
  config.name_ = name;
  config.raw_ = text;

  std::string section;
  std::string line;
  std::stringstream ss(text);
  int line_no = 0;
  int order = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') {
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw ConfigError(name + ":" + std::to_string(line_no) + ": empty section name");
      continue;
    }
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(name + ":" + std::to_string(line_no) + ": expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError(name + ":" + std::to_string(line_no) + ": empty key");
    std::string full = section.empty() ? key : section + "." + key;
    if (config.entries_.count(full))
      throw ConfigError(name + ":" + std::to_string(line_no) + ": duplicate key '" + full + "'");
    config.entries_[full] = Entry{value, line_no, order++};
  }
  return config;
}

bool Config::has(const std::string& key) const { return entries_.count(key) > 0; }

const Config::Entry& Config::require(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end())
    throw ConfigError(name_ + ": missing required key '" + key + "'");
  return it->second;
}

void Config::fail(const std::string& key, int line, const std::string& what) const {
  throw ConfigError(name_ + ":" + std::to_string(line) + ": key '" + key + "': " + what);
}

std::string Config::get_string(const std::string& key) const {
  return strip_quotes(require(key).value);
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  return has(key) ? get_string(key) : fallback;
}

double Config::get_double(const std::string& key) const {
  const Entry& entry = require(key);
  std::string v = strip_quotes(entry.value);
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) fail(key, entry.line, "expected a number");
  return out;
}

double Config::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

long Config::get_long(const std::string& key) const {
  const Entry& entry = require(key);
  std::string v = strip_quotes(entry.value);
  long out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) fail(key, entry.line, "expected an integer");
  return out;
}

long Config::get_long(const std::string& key, long fallback) const {
  return has(key) ? get_long(key) : fallback;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const Entry& entry = entries_.at(key);
  std::string v = strip_quotes(entry.value);
  if (v == "true") return true;
  if (v == "false") return false;
  fail(key, entry.line, "expected true or false");
}

std::vector<double> Config::get_double_list(const std::string& key) const {
  const Entry& entry = require(key);
  std::vector<double> out;
  for (const std::string& item : split_list(entry.value)) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc{} || ptr != item.data() + item.size())
      fail(key, entry.line, "expected a list of numbers");
    out.push_back(v);
  }
  if (out.empty()) fail(key, entry.line, "empty list");
  return out;
}

std::vector<double> Config::get_double_list(const std::string& key,
                                            std::vector<double> fallback) const {
  return has(key) ? get_double_list(key) : fallback;
}

std::vector<std::string> Config::get_string_list(const std::string& key) const {
  const Entry& entry = require(key);
  auto out = split_list(entry.value);
  if (out.empty()) fail(key, entry.line, "empty list");
  return out;
}

std::vector<std::string> Config::get_string_list(const std::string& key,
                                                 std::vector<std::string> fallback) const {
  return has(key) ? get_string_list(key) : fallback;
}

std::vector<std::string> Config::keys() const {
  std::vector<std::pair<int, std::string>> ordered;
  for (const auto& [key, entry] : entries_) ordered.emplace_back(entry.order, key);
  std::sort(ordered.begin(), ordered.end());
  std::vector<std::string> out;
  for (auto& [order, key] : ordered) out.push_back(key);
  return out;
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t hash = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001B3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return std::string(buf);
}

}  // namespace sentinel
