#include "usdr/render.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace usdr {

namespace {

void write_png(const std::string& path, const std::vector<unsigned char>& pixels,
               int width, int height, int channels) {
  FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw IoError("render: cannot open " + path);

  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw IoError("render: libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw IoError("render: libpng write failed for " + path);
  }

  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width),
               static_cast<png_uint_32>(height), 8,
               channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_bytep> rows(height);
  for (int r = 0; r < height; ++r)
    rows[r] = const_cast<png_bytep>(pixels.data() +
                                    static_cast<std::size_t>(r) * width * channels);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

unsigned char to_byte(double v) {
  return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

} // namespace

void write_png_gray(const std::string& path, const Vector& db_image,
                    const ImagingGrid& grid, double dynamic_range_db) {
  if (db_image.size() != grid.size())
    throw ValidationError("render: image size mismatch");
  std::vector<unsigned char> px(static_cast<std::size_t>(grid.size()));
  for (int iz = 0; iz < grid.nz; ++iz)       // row = depth, top is shallow
    for (int ix = 0; ix < grid.nx; ++ix)
      px[static_cast<std::size_t>(iz) * grid.nx + ix] = to_byte(
          (db_image[grid.flat_index(ix, iz)] + dynamic_range_db) /
          dynamic_range_db);
  write_png(path, px, grid.nx, grid.nz, 1);
}

void write_png_rgb(const std::string& path, const std::vector<double>& rgb,
                   const ImagingGrid& grid) {
  if (rgb.size() != static_cast<std::size_t>(grid.size()) * 3)
    throw ValidationError("render: rgb buffer size mismatch");
  std::vector<unsigned char> px(rgb.size());
  for (int iz = 0; iz < grid.nz; ++iz)
    for (int ix = 0; ix < grid.nx; ++ix) {
      const int n = grid.flat_index(ix, iz);
      const std::size_t o = (static_cast<std::size_t>(iz) * grid.nx + ix) * 3;
      px[o + 0] = to_byte(rgb[3 * n + 0]);
      px[o + 1] = to_byte(rgb[3 * n + 1]);
      px[o + 2] = to_byte(rgb[3 * n + 2]);
    }
  write_png(path, px, grid.nx, grid.nz, 3);
}

void write_png_colormap(const std::string& path, const Vector& db_image,
                        const ImagingGrid& grid, double dynamic_range_db,
                        Colormap map) {
  if (map == Colormap::Gray) {
    write_png_gray(path, db_image, grid, dynamic_range_db);
    return;
  }
  std::vector<double> rgb(static_cast<std::size_t>(grid.size()) * 3);
  for (int n = 0; n < grid.size(); ++n) {
    const double u = (db_image[n] + dynamic_range_db) / dynamic_range_db;
    const auto c = colormap_rgb(map, u);
    rgb[3 * n + 0] = c[0];
    rgb[3 * n + 1] = c[1];
    rgb[3 * n + 2] = c[2];
  }
  write_png_rgb(path, rgb, grid);
}

} // namespace usdr
