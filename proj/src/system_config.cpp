#include "aircomp/system_config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace aircomp {

void SystemConfig::validate() const {
  if (K < 2) throw ConfigError("K must be >= 2");
  if (Nt < K - 1) throw ConfigError("Nt must be >= K - 1");
  if (D < 1) throw ConfigError("D must be >= 1");
  if (!(P0 > 0.0)) throw ConfigError("P0 must be > 0");
  if (!(sigma2 > 0.0)) throw ConfigError("sigma2 must be > 0");
  if (!(B > 0.0)) throw ConfigError("bandwidth must be > 0");
  if (!(rician_ratio >= 0.0)) throw ConfigError("rician_ratio must be >= 0");
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace

std::string KeyValueFile::get_string(const std::string& key) const {
  auto it = entries.find(key);
  if (it == entries.end()) throw ConfigError("missing config key: " + key);
  return it->second;
}

std::string KeyValueFile::get_string(const std::string& key,
                                     const std::string& fallback) const {
  auto it = entries.find(key);
  return it == entries.end() ? fallback : it->second;
}

double KeyValueFile::get_double(const std::string& key) const {
  const std::string raw = get_string(key);
  char* end = nullptr;
  const double v = std::strtod(raw.c_str(), &end);
  if (end == raw.c_str() || *end != '\0')
    throw ConfigError("config key " + key + " is not a number: " + raw);
  return v;
}

double KeyValueFile::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

long long KeyValueFile::get_int(const std::string& key) const {
  const std::string raw = get_string(key);
  char* end = nullptr;
  const long long v = std::strtoll(raw.c_str(), &end, 10);
  if (end == raw.c_str() || *end != '\0')
    throw ConfigError("config key " + key + " is not an integer: " + raw);
  return v;
}

long long KeyValueFile::get_int(const std::string& key, long long fallback) const {
  return has(key) ? get_int(key) : fallback;
}

KeyValueFile parse_key_value_text(const std::string& text) {
  KeyValueFile kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) +
                        " has no '=': " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("empty key on line " + std::to_string(lineno));
    kv.entries[key] = val;
  }
  return kv;
}

KeyValueFile load_key_value_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_key_value_text(buf.str());
}

SystemConfig system_config_from(const KeyValueFile& kv) {
  SystemConfig cfg;
  cfg.K = static_cast<int>(kv.get_int("K", cfg.K));
  cfg.Nt = static_cast<int>(kv.get_int("Nt", cfg.Nt));
  cfg.D = static_cast<int>(kv.get_int("D", cfg.D));
  if (kv.has("P0_dbm") && kv.has("P0_watt"))
    throw ConfigError("P0_dbm and P0_watt are mutually exclusive");
  if (kv.has("P0_dbm"))
    cfg.P0 = dbm_to_watt(kv.get_double("P0_dbm"));
  else if (kv.has("P0_watt"))
    cfg.P0 = kv.get_double("P0_watt");
  cfg.sigma2 = kv.get_double("sigma2", cfg.sigma2);
  cfg.B = kv.get_double("bandwidth_hz", cfg.B);
  cfg.rician_ratio = kv.get_double("rician_ratio", cfg.rician_ratio);
  cfg.seed = static_cast<std::uint64_t>(kv.get_int("seed", 0));
  cfg.validate();
  return cfg;
}

std::uint64_t config_hash(const KeyValueFile& kv) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& [k, v] : kv.entries) {
    feed(k);
    feed("=");
    feed(v);
    feed("\n");
  }
  return h;
}

}  // namespace aircomp
