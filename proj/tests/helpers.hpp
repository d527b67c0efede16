#pragma once

#include <string>

#include "usdr/config.hpp"
#include "usdr/pipeline.hpp"

namespace usdr::test {

// Small but physically sensible setup: 16 elements, 12x12 grid over a
// 3.3 x 3.3 mm patch around 15 mm depth. Builds in milliseconds.
inline Config tiny_config() {
  return Config::from_string(R"(
probe.element_count = 16
probe.pitch = 0.30e-3
acquisition.sampling_rate = 20.8e6
acquisition.start_time = 17e-6
acquisition.sample_count = 160
grid.x_min = -1.65e-3
grid.x_max = 1.65e-3
grid.z_min = 13.5e-3
grid.z_max = 16.8e-3
grid.nx = 12
grid.nz = 12
apodization.window = tukey
apodization.taper = 0.25
apodization.f_number = 1.4
)");
}

inline Model tiny_model() { return build_model(tiny_config()); }

} // namespace usdr::test
