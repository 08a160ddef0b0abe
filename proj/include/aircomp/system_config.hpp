#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>

namespace aircomp {

// Thrown when a configuration value violates its documented range.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Static system description shared by every module.
//
// Power is stored in watts; the loader also accepts dBm.  `rician_ratio` is
// the LoS-to-scatter power ratio of the fading model (0 = pure Rayleigh).
struct SystemConfig {
  int K = 2;                  // devices, >= 2
  int Nt = 1;                 // transmit antennas, >= K - 1
  int D = 1;                  // model/state dimension, >= 1
  double P0 = 1.0;            // per-device power budget [W], > 0
  double sigma2 = 1.0;        // receiver noise power [W], > 0
  double B = 1e6;             // bandwidth [Hz], > 0
  double rician_ratio = 0.6;  // >= 0
  std::uint64_t seed = 0;

  void validate() const;
};

inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watt_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

// Parsed key=value file: '#' starts a comment, keys may be dotted.  Values
// keep their raw text; typed access happens at lookup time.
struct KeyValueFile {
  std::map<std::string, std::string> entries;

  bool has(const std::string& key) const { return entries.count(key) != 0; }
  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key) const;
  long long get_int(const std::string& key, long long fallback) const;
};

KeyValueFile parse_key_value_text(const std::string& text);
KeyValueFile load_key_value_file(const std::string& path);

// Builds a SystemConfig from the flat keys K, Nt, D, P0_dbm | P0_watt,
// sigma2, bandwidth_hz, rician_ratio, seed.  Missing keys keep defaults;
// P0_dbm and P0_watt together is an error.
SystemConfig system_config_from(const KeyValueFile& kv);

// FNV-1a over the canonical "key=value\n" serialization; used to stamp CSV
// rows so results can be traced back to the exact configuration.
std::uint64_t config_hash(const KeyValueFile& kv);

}  // namespace aircomp
