#pragma once
// Flat key = value text configuration. One entry per line, '#' starts a
// comment, keys are unique. Lists are comma separated.

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace radar {

class KvConfig {
 public:
  KvConfig() = default;

  // `source` names the origin in error messages (usually a file path).
  static KvConfig parse(const std::string& text, const std::string& source = "<config>");
  static KvConfig load(const std::string& path);
  void save(const std::string& path) const;
  std::string to_text() const;

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, std::int64_t value) { set(key, std::to_string(value)); }
  void set(const std::string& key, double value);
  void set(const std::string& key, const std::vector<std::int64_t>& values);
  // Copies every entry of `other`, overwriting existing keys.
  void merge(const KvConfig& other);

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::int64_t get_int(const std::string& key) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<std::int64_t> get_int_list(const std::string& key) const;
  std::vector<std::int64_t> get_int_list(const std::string& key, const std::vector<std::int64_t>& fallback) const;

  // Throws ConfigError naming the first key outside `known`.
  void require_known(const std::set<std::string>& known) const;
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::string source_ = "<config>";
  std::map<std::string, std::string> values_;
};

}  // namespace radar
