#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace sentinel {

/// Configuration problems map to CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat-section key-value configuration ([section] tables, key = value,
/// '#' comments, [a, b, c] lists). Keys are addressed as "section.key".
class Config {
 public:
  static Config parse_file(const std::filesystem::path& path);
  static Config parse_string(const std::string& text, const std::string& name = "<inline>");

  bool has(const std::string& key) const;

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long get_long(const std::string& key) const;
  long get_long(const std::string& key, long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_double_list(const std::string& key) const;
  std::vector<double> get_double_list(const std::string& key, std::vector<double> fallback) const;
  std::vector<std::string> get_string_list(const std::string& key) const;
  std::vector<std::string> get_string_list(const std::string& key,
                                           std::vector<std::string> fallback) const;

  /// Original file bytes, used for manifest hashing.
  const std::string& raw_bytes() const { return raw_; }
  const std::string& name() const { return name_; }

  /// All keys, in file order.
  std::vector<std::string> keys() const;

 private:
  struct Entry {
    std::string value;
    int line = 0;
    int order = 0;
  };

  const Entry& require(const std::string& key) const;
  [[noreturn]] void fail(const std::string& key, int line, const std::string& what) const;

  std::string name_;
  std::string raw_;
  std::map<std::string, Entry> entries_;
};

/// FNV-1a 64-bit hash, hex encoded.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace sentinel
