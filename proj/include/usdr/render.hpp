#pragma once

#include <string>
#include <vector>

#include "usdr/multisample.hpp"

namespace usdr {

// 8-bit PNG writers. Row 0 is the shallowest depth (z_min). Grayscale
// maps [-DR, 0] dB onto [0, 255].
void write_png_gray(const std::string& path, const Vector& db_image,
                    const ImagingGrid& grid, double dynamic_range_db);

void write_png_rgb(const std::string& path, const std::vector<double>& rgb,
                   const ImagingGrid& grid);

// dB rendering through a colormap (gray or jet).
void write_png_colormap(const std::string& path, const Vector& db_image,
                        const ImagingGrid& grid, double dynamic_range_db,
                        Colormap map);

} // namespace usdr
