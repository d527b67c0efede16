#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "usdr/probe.hpp"

namespace usdr {

// Flat "key = value" configuration with '#' comments. Keys are dotted
// paths (e.g. "probe.pitch"). Unknown keys are preserved so callers can
// define their own sections (phantoms, regions, denoisers).
class Config {
 public:
  Config() = default;

  static Config from_file(const std::string& path);
  static Config from_string(const std::string& text);

  [[nodiscard]] bool has(const std::string& key) const;
  void set(const std::string& key, const std::string& value);

  [[nodiscard]] std::string get_string(const std::string& key,
                                       const std::string& fallback) const;
  [[nodiscard]] std::string require_string(const std::string& key) const;
  [[nodiscard]] double get_double(const std::string& key, double fallback) const;
  [[nodiscard]] double require_double(const std::string& key) const;
  [[nodiscard]] int get_int(const std::string& key, int fallback) const;
  [[nodiscard]] bool get_bool(const std::string& key, bool fallback) const;

  // Keys under "<prefix>." in file order, prefix stripped.
  [[nodiscard]] std::vector<std::string> keys_with_prefix(
      const std::string& prefix) const;

  // Canonical "key = value" text (sorted keys); used for hashing and
  // manifest snapshots.
  [[nodiscard]] std::string canonical_text() const;

  [[nodiscard]] const std::map<std::string, std::string>& entries() const {
    return values_;
  }

 private:
  std::map<std::string, std::string> values_;
};

// Domain objects from a config, using the probe/grid/pulse defaults
// (128-element linear array, 5.208 MHz / 67% BWR pulse, 20.8 MHz sampling,
// 36 x 36 mm field of view) when keys are absent.
ProbeGeometry probe_from_config(const Config& cfg);
AcquisitionConfig acquisition_from_config(const Config& cfg);
ImagingGrid grid_from_config(const Config& cfg);
PulseKernel pulse_from_config(const Config& cfg);

} // namespace usdr
