#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "qusum/cli.hpp"

namespace qusum::cli {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) parts.push_back(trim(cur));
  return parts;
}

double parse_double(const std::string& key, const std::string& value) {
  errno = 0;
  char* end = nullptr;
  double v = std::strtod(value.c_str(), &end);
  if (end == value.c_str() || *end != '\0' || errno == ERANGE)
    throw ConfigError("key '" + key + "': cannot parse '" + value + "' as a number");
  return v;
}

std::int64_t parse_int(const std::string& key, const std::string& value) {
  errno = 0;
  char* end = nullptr;
  long long v = std::strtoll(value.c_str(), &end, 10);
  if (end == value.c_str() || *end != '\0' || errno == ERANGE)
    throw ConfigError("key '" + key + "': cannot parse '" + value + "' as an integer");
  return static_cast<std::int64_t>(v);
}

}  // namespace

void Config::set(std::string key, std::string value) {
  kv_[std::move(key)] = std::move(value);
}

void Config::merge_from(const Config& other) {
  for (const auto& [k, v] : other.kv_) kv_[k] = v;
}

bool Config::has(const std::string& key) const { return kv_.count(key) != 0; }

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  auto it = kv_.find(key);
  return it == kv_.end() ? fallback : it->second;
}

std::string Config::require_string(const std::string& key) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) throw ConfigError("missing required key '" + key + "'");
  return it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
  auto it = kv_.find(key);
  return it == kv_.end() ? fallback : parse_double(key, it->second);
}

double Config::require_double(const std::string& key) const {
  return parse_double(key, require_string(key));
}

std::int64_t Config::get_int(const std::string& key, std::int64_t fallback) const {
  auto it = kv_.find(key);
  return it == kv_.end() ? fallback : parse_int(key, it->second);
}

std::vector<std::int64_t> Config::get_int_list(
    const std::string& key, const std::vector<std::int64_t>& fallback) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  std::vector<std::int64_t> out;
  for (const auto& part : split(it->second, ','))
    if (!part.empty()) out.push_back(parse_int(key, part));
  if (out.empty()) throw ConfigError("key '" + key + "': empty list");
  return out;
}

std::vector<double> Config::get_double_list(const std::string& key,
                                            const std::vector<double>& fallback) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  std::vector<double> out;
  for (const auto& part : split(it->second, ','))
    if (!part.empty()) out.push_back(parse_double(key, part));
  if (out.empty()) throw ConfigError("key '" + key + "': empty list");
  return out;
}

Config parse_key_value(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key=value, got '" +
                        line + "'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    if (cfg.has(key))
      throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    cfg.set(std::move(key), std::move(value));
  }
  return cfg;
}

namespace {

std::string json_scalar_to_string(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();  // numbers and booleans keep full precision
}

Config config_from_json_object(const nlohmann::json& obj) {
  Config cfg;
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const nlohmann::json& v = it.value();
    if (v.is_array()) {
      std::string joined;
      for (const auto& e : v) {
        if (!joined.empty()) joined += ',';
        joined += json_scalar_to_string(e);
      }
      cfg.set(it.key(), joined);
    } else if (v.is_object()) {
      throw ConfigError("key '" + it.key() + "': nested objects are not configuration values");
    } else {
      cfg.set(it.key(), json_scalar_to_string(v));
    }
  }
  return cfg;
}

}  // namespace

Config parse_json_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("configuration JSON must be an object");
  // a run manifest embeds the config it was produced with; accept it directly
  if (j.contains("config") && j["config"].is_object() && j.contains("outputs"))
    return config_from_json_object(j["config"]);
  return config_from_json_object(j);
}

Config load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') return parse_json_config(text);
  try {
    return parse_key_value(text);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

Config preset(const std::string& name) {
  Config cfg;
  if (name == "fig2") {
    cfg.set("mode", "quantum");
    cfg.set("r0", "0.9");
    cfg.set("r1", "0.9");
    cfg.set("theta", "0.7853981633974483");
    cfg.set("l_list", "1,5,50");
    cfg.set("measurement", "optimized");
    cfg.set("h_list", "3,4,5,6");
    cfg.set("trials", "1000");
    cfg.set("cap", "10000000");
    cfg.set("seed", "1");
  } else if (name == "sm-classical") {
    cfg.set("mode", "classical");
    cfg.set("p_bias", "0.2");
    cfg.set("q_bias", "0.25");
    cfg.set("h_list", "6,22");
    cfg.set("nu", "10000");
    cfg.set("cap", "100000");
    cfg.set("trials", "200");
    cfg.set("trajectories", "20");
    cfg.set("seed", "7");
  } else if (name == "fast-accept") {
    cfg.set("mode", "classical");
    cfg.set("p_bias", "0.2");
    cfg.set("q_bias", "0.6");
    cfg.set("h_list", "2,3,4,6");
    cfg.set("trials", "2000");
    cfg.set("cap", "1000000");
    cfg.set("seed", "11");
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
  return cfg;
}

std::vector<std::string> preset_names() { return {"fig2", "sm-classical", "fast-accept"}; }

}  // namespace qusum::cli
