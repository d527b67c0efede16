#pragma once

#include "usdr/config.hpp"
#include "usdr/container.hpp"

namespace usdr {

// Converts an HDF5 plane-wave acquisition into a channel container. The
// mapping config names the datasets inside the file (internal layouts
// vary per release, so nothing is hardcoded):
//   picmus.format            rf | iq          (iq is rejected)
//   picmus.rf.path           dataset with the RF samples
//   picmus.rf.order          channels_samples | samples_channels
//   picmus.angles.path       transmit angles [rad] (optional; with several
//                            angles the one closest to 0 is selected)
//   picmus.fs.path | picmus.fs.value          sampling rate [Hz]
//   picmus.c.path  | picmus.c.value           sound speed [m/s]
//   picmus.t0.path | picmus.t0.value          initial time [s]
// The resulting container carries fs/c/t0/angle as attributes.
Container picmus_import(const std::string& h5_path, const Config& mapping);

} // namespace usdr
