#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace qusum::cli {

// process exit codes
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitVariational = 3;
inline constexpr int kExitCensoring = 4;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct VariationalNonConvergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CensoringExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat string-to-string configuration. Typed accessors parse on demand and
// raise ConfigError with the offending key in the message.
class Config {
 public:
  void set(std::string key, std::string value);
  void merge_from(const Config& other);  // other wins on conflicts
  bool has(const std::string& key) const;
  const std::map<std::string, std::string>& entries() const { return kv_; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::string require_string(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  double require_double(const std::string& key) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  std::vector<std::int64_t> get_int_list(const std::string& key,
                                         const std::vector<std::int64_t>& fallback) const;
  std::vector<double> get_double_list(const std::string& key,
                                      const std::vector<double>& fallback) const;

 private:
  std::map<std::string, std::string> kv_;
};

// key=value lines, '#' comments; diagnostics carry 1-based line numbers
Config parse_key_value(const std::string& text);
// a plain JSON object, or a run manifest (its embedded config is reused)
Config parse_json_config(const std::string& text);
// dispatches on content: '{' starts JSON, anything else is key=value
Config load_config_file(const std::string& path);

Config preset(const std::string& name);
std::vector<std::string> preset_names();

// --- run manifest -----------------------------------------------------------

struct OutputRecord {
  std::string path;  // basename inside the output directory
  std::string sha256;
  std::uint64_t bytes = 0;
};

std::string sha256_hex(const void* data, std::size_t len);
inline std::string sha256_hex(const std::string& s) { return sha256_hex(s.data(), s.size()); }

void write_manifest(const std::string& out_dir, const std::string& command,
                    const Config& config, const std::vector<OutputRecord>& outputs);

// "out" key, else QUSUM_OUT_DIR, else "."; the directory is created
std::string resolve_out_dir(const Config& config);

// --- commands ----------------------------------------------------------------

int cmd_divergences(const Config& config);
int cmd_block_rate(const Config& config);
int cmd_simulate(const Config& config);
int cmd_classical_demo(const Config& config);

// dispatch by name plus exception-to-exit-code mapping
int run_command(const std::string& name, const Config& config);

}  // namespace qusum::cli
