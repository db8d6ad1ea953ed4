#pragma once

// Flat key-value config files with [section] headers. Keys are addressed
// as "section.key"; values keep their raw text until asked for a type.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace sg {

class Config {
 public:
  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text, const std::string& origin = "<string>");

  bool has(const std::string& key) const;
  void set(const std::string& key, const std::string& value);

  std::string str(const std::string& key, const std::string& fallback = "") const;
  int64_t integer(const std::string& key, int64_t fallback) const;
  double real(const std::string& key, double fallback) const;
  bool flag(const std::string& key, bool fallback) const;

  // whitespace- or comma-separated lists
  std::vector<double> reals(const std::string& key) const;
  std::vector<int64_t> integers(const std::string& key) const;

  const std::vector<std::pair<std::string, std::string>>& entries() const { return kv_; }

 private:
  const std::string* find(const std::string& key) const;
  std::vector<std::pair<std::string, std::string>> kv_;
};

}  // namespace sg
