#include "usdr/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "usdr/errors.hpp"

namespace usdr {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

} // namespace

Config Config::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_string(ss.str());
}

Config Config::from_string(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError("config: line " + std::to_string(lineno) +
                            ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ValidationError("config: line " + std::to_string(lineno) +
                            ": empty key");
    cfg.values_[key] = value;
  }
  return cfg;
}

bool Config::has(const std::string& key) const {
  return values_.count(key) != 0;
}

void Config::set(const std::string& key, const std::string& value) {
  values_[key] = value;
}

std::string Config::get_string(const std::string& key,
                               const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

std::string Config::require_string(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end())
    throw ValidationError("config: missing required key '" + key + "'");
  return it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  char* end = nullptr;
  const double v = std::strtod(it->second.c_str(), &end);
  if (end == it->second.c_str() || *end != '\0')
    throw ValidationError("config: key '" + key + "' is not a number: " +
                          it->second);
  return v;
}

double Config::require_double(const std::string& key) const {
  if (!has(key))
    throw ValidationError("config: missing required key '" + key + "'");
  return get_double(key, 0.0);
}

int Config::get_int(const std::string& key, int fallback) const {
  const double v = get_double(key, static_cast<double>(fallback));
  const int i = static_cast<int>(v);
  if (static_cast<double>(i) != v)
    throw ValidationError("config: key '" + key + "' must be an integer");
  return i;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const std::string& v = it->second;
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ValidationError("config: key '" + key + "' is not a boolean: " + v);
}

std::vector<std::string> Config::keys_with_prefix(
    const std::string& prefix) const {
  std::vector<std::string> out;
  const std::string p = prefix + ".";
  for (const auto& [k, _] : values_)
    if (k.rfind(p, 0) == 0) out.push_back(k.substr(p.size()));
  return out;
}

std::string Config::canonical_text() const {
  std::ostringstream out;
  for (const auto& [k, v] : values_) out << k << " = " << v << "\n";
  return out.str();
}

ProbeGeometry probe_from_config(const Config& cfg) {
  return ProbeGeometry::linear(cfg.get_int("probe.element_count", 128),
                               cfg.get_double("probe.pitch", 0.30e-3),
                               cfg.get_double("probe.element_width", 0.27e-3));
}

AcquisitionConfig acquisition_from_config(const Config& cfg) {
  AcquisitionConfig a;
  a.sound_speed = cfg.get_double("acquisition.sound_speed", 1540.0);
  a.sampling_rate = cfg.get_double("acquisition.sampling_rate", 20.8e6);
  a.start_time = cfg.get_double("acquisition.start_time", 0.0);
  a.sample_count = cfg.get_int("acquisition.sample_count", 1536);
  a.steering_angle = cfg.get_double("acquisition.steering_angle", 0.0);
  a.noise_std = cfg.get_double("acquisition.noise_std", 0.0);
  a.validate();
  return a;
}

ImagingGrid grid_from_config(const Config& cfg) {
  ImagingGrid g;
  g.x_min = cfg.get_double("grid.x_min", -18e-3);
  g.x_max = cfg.get_double("grid.x_max", 18e-3);
  g.z_min = cfg.get_double("grid.z_min", 10e-3);
  g.z_max = cfg.get_double("grid.z_max", 46e-3);
  g.nx = cfg.get_int("grid.nx", 64);
  g.nz = cfg.get_int("grid.nz", 64);
  g.validate();
  return g;
}

PulseKernel pulse_from_config(const Config& cfg) {
  return PulseKernel::gaussian_modulated(
      cfg.get_double("pulse.center_frequency", 5.208e6),
      cfg.get_double("pulse.bandwidth_ratio", 0.67),
      cfg.get_double("acquisition.sampling_rate", 20.8e6));
}

} // namespace usdr
