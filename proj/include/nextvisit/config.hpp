#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nextvisit {

// Flat key-value configuration in a small TOML subset:
//   # comment
//   key = 1.5
//   name = "text"
//   list = [1, 2, 3]
//   [section]          -> following keys are stored as "section.key"
// Values keep their source text; typed getters parse on access.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig parse(std::string_view text, std::string_view origin = "<string>");
  static KeyValueConfig load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::optional<double> get_double(const std::string& key) const;
  std::optional<long long> get_int(const std::string& key) const;
  std::optional<bool> get_bool(const std::string& key) const;
  std::optional<std::string> get_string(const std::string& key) const;
  std::optional<std::vector<double>> get_double_list(const std::string& key) const;
  std::optional<std::vector<std::string>> get_string_list(const std::string& key) const;

  double get_double(const std::string& key, double fallback) const {
    return get_double(key).value_or(fallback);
  }
  long long get_int(const std::string& key, long long fallback) const {
    return get_int(key).value_or(fallback);
  }
  bool get_bool(const std::string& key, bool fallback) const { return get_bool(key).value_or(fallback); }
  std::string get_string(const std::string& key, const std::string& fallback) const {
    return get_string(key).value_or(fallback);
  }

  /// Distinct section names that start with `prefix.` (e.g. "condition").
  std::vector<std::string> subsections(const std::string& prefix) const;

  void set(const std::string& key, std::string raw_value) { values_[key] = std::move(raw_value); }
  const std::map<std::string, std::string>& raw() const { return values_; }

  /// Canonical text (sorted keys), used for content hashing.
  std::string canonical() const;

 private:
  std::map<std::string, std::string> values_;
  std::string origin_;
};

}  // namespace nextvisit
