#pragma once

#include "ava/common.hpp"

#include <filesystem>
#include <map>

namespace ava {

// Flat key/value configuration: `key = value` lines, '#' comments, optional
// [section] headers that prefix keys with "section.". CLI --set overrides
// win over the file.
class Config {
 public:
  Config() = default;
  static Config from_file(const std::filesystem::path& path);
  void apply_override(const std::string& key_equals_value);  // "a.b=3"

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  std::string get(const std::string& key, const std::string& fallback) const;
  double get(const std::string& key, double fallback) const;
  int get(const std::string& key, int fallback) const;
  uint64_t get(const std::string& key, uint64_t fallback) const;
  bool get(const std::string& key, bool fallback) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace ava
