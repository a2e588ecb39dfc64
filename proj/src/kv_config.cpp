#include "radarformer/kv_config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "radarformer/error.hpp"

namespace radar {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::int64_t parse_int(const std::string& text, const std::string& what) {
  std::int64_t v = 0;
  const auto t = trim(text);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw ConfigError(what + ": '" + text + "' is not an integer");
  }
  return v;
}

}  // namespace

KvConfig KvConfig::parse(const std::string& text, const std::string& source) {
  KvConfig cfg;
  cfg.source_ = source;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(source + ":" + std::to_string(lineno) + ": empty key");
    if (cfg.has(key)) throw ConfigError(source + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    cfg.values_[key] = trim(line.substr(eq + 1));
  }
  return cfg;
}

KvConfig KvConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

void KvConfig::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCategory::runtime, "cannot write " + path);
  out << to_text();
}

std::string KvConfig::to_text() const {
  std::string s;
  for (const auto& [k, v] : values_) s += k + " = " + v + "\n";
  return s;
}

void KvConfig::set(const std::string& key, const std::string& value) { values_[key] = value; }

void KvConfig::set(const std::string& key, double value) {
  // Shortest representation that parses back to the same double.
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, value);
  values_[key] = std::string(buf, r.ptr);
}

void KvConfig::set(const std::string& key, const std::vector<std::int64_t>& values) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) s += (i ? "," : "") + std::to_string(values[i]);
  values_[key] = s;
}

void KvConfig::merge(const KvConfig& other) {
  for (const auto& [k, v] : other.values_) values_[k] = v;
}

std::string KvConfig::get_string(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError(source_ + ": missing key '" + key + "'");
  return it->second;
}

std::string KvConfig::get_string(const std::string& key, const std::string& fallback) const {
  return has(key) ? get_string(key) : fallback;
}

std::int64_t KvConfig::get_int(const std::string& key) const {
  return parse_int(get_string(key), source_ + ": key '" + key + "'");
}

std::int64_t KvConfig::get_int(const std::string& key, std::int64_t fallback) const {
  return has(key) ? get_int(key) : fallback;
}

double KvConfig::get_double(const std::string& key) const {
  const auto text = get_string(key);
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::logic_error&) {
    throw ConfigError(source_ + ": key '" + key + "': '" + text + "' is not a number");
  }
}

double KvConfig::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

bool KvConfig::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const auto v = get_string(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(source_ + ": key '" + key + "': '" + v + "' is not a boolean");
}

std::vector<std::int64_t> KvConfig::get_int_list(const std::string& key) const {
  const auto text = get_string(key);
  std::vector<std::int64_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_int(item, source_ + ": key '" + key + "'"));
  if (out.empty()) throw ConfigError(source_ + ": key '" + key + "' is an empty list");
  return out;
}

std::vector<std::int64_t> KvConfig::get_int_list(const std::string& key,
                                                 const std::vector<std::int64_t>& fallback) const {
  return has(key) ? get_int_list(key) : fallback;
}

void KvConfig::require_known(const std::set<std::string>& known) const {
  for (const auto& [k, v] : values_) {
    if (!known.count(k)) throw ConfigError(source_ + ": unknown key '" + k + "'");
  }
}

}  // namespace radar
