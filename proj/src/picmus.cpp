#include "usdr/picmus.hpp"

#include <hdf5.h>

#include <cmath>
#include <vector>

namespace usdr {

namespace {

struct H5File {
  hid_t id = -1;
  explicit H5File(const std::string& path) {
    H5E_BEGIN_TRY {
      id = H5Fopen(path.c_str(), H5F_ACC_RDONLY, H5P_DEFAULT);
    }
    H5E_END_TRY
    if (id < 0) throw IoError("picmus: cannot open HDF5 file " + path);
  }
  ~H5File() {
    if (id >= 0) H5Fclose(id);
  }
};

std::vector<double> read_dataset(hid_t file, const std::string& path,
                                 std::vector<hsize_t>& dims) {
  hid_t ds = -1;
  H5E_BEGIN_TRY { ds = H5Dopen2(file, path.c_str(), H5P_DEFAULT); }
  H5E_END_TRY
  if (ds < 0)
    throw IoError("picmus: dataset '" + path + "' not found in file");
  const hid_t space = H5Dget_space(ds);
  const int rank = H5Sget_simple_extent_ndims(space);
  dims.resize(rank);
  H5Sget_simple_extent_dims(space, dims.data(), nullptr);
  hsize_t total = 1;
  for (auto d : dims) total *= d;
  std::vector<double> data(total);
  const herr_t err = H5Dread(ds, H5T_NATIVE_DOUBLE, H5S_ALL, H5S_ALL,
                             H5P_DEFAULT, data.data());
  H5Sclose(space);
  H5Dclose(ds);
  if (err < 0) throw IoError("picmus: failed to read dataset '" + path + "'");
  return data;
}

double read_scalar(hid_t file, const Config& mapping, const std::string& key) {
  if (mapping.has("picmus." + key + ".value"))
    return mapping.require_double("picmus." + key + ".value");
  const std::string path = mapping.get_string("picmus." + key + ".path", "");
  if (path.empty())
    throw ValidationError("picmus: mapping needs picmus." + key +
                          ".path or picmus." + key + ".value");
  std::vector<hsize_t> dims;
  const auto v = read_dataset(file, path, dims);
  if (v.empty()) throw IoError("picmus: dataset '" + path + "' is empty");
  return v[0];
}

} // namespace

Container picmus_import(const std::string& h5_path, const Config& mapping) {
  const std::string format = mapping.get_string("picmus.format", "rf");
  if (format == "iq")
    throw ValidationError(
        "picmus: IQ-format data is not supported; supply the RF dataset");
  if (format != "rf")
    throw ValidationError("picmus: unknown format '" + format + "'");

  H5File file(h5_path);
  const std::string rf_path = mapping.require_string("picmus.rf.path");
  std::vector<hsize_t> dims;
  const std::vector<double> raw = read_dataset(file.id, rf_path, dims);

  // Optional angle axis: pick the transmission closest to normal incidence.
  std::size_t angle_index = 0;
  double angle = 0.0;
  std::size_t n_angles = 1;
  if (dims.size() == 3) {
    n_angles = dims[0];
    const std::string apath = mapping.get_string("picmus.angles.path", "");
    if (!apath.empty()) {
      std::vector<hsize_t> adims;
      const auto angles = read_dataset(file.id, apath, adims);
      if (angles.size() != n_angles)
        throw ValidationError("picmus: angle count does not match RF layout");
      for (std::size_t i = 1; i < angles.size(); ++i)
        if (std::abs(angles[i]) < std::abs(angles[angle_index]))
          angle_index = i;
      angle = angles[angle_index];
    }
  } else if (dims.size() != 2) {
    throw ValidationError("picmus: RF dataset must have rank 2 or 3");
  }

  const std::string order =
      mapping.get_string("picmus.rf.order", "channels_samples");
  std::size_t n_chan, n_samp;
  const std::size_t d0 = dims[dims.size() - 2], d1 = dims[dims.size() - 1];
  if (order == "channels_samples") {
    n_chan = d0;
    n_samp = d1;
  } else if (order == "samples_channels") {
    n_chan = d1;
    n_samp = d0;
  } else {
    throw ValidationError("picmus: unknown rf.order '" + order + "'");
  }

  Vector y(static_cast<Eigen::Index>(n_chan * n_samp));
  const double* block = raw.data() + angle_index * d0 * d1;
  for (std::size_t j = 0; j < n_chan; ++j)
    for (std::size_t k = 0; k < n_samp; ++k) {
      const double v = order == "channels_samples" ? block[j * n_samp + k]
                                                   : block[k * n_chan + j];
      y[static_cast<Eigen::Index>(j * n_samp + k)] = v;
    }

  Container c = make_channel_container(y, static_cast<int>(n_chan),
                                       static_cast<int>(n_samp));
  c.attrs["acquisition.sampling_rate"] =
      std::to_string(read_scalar(file.id, mapping, "fs"));
  c.attrs["acquisition.sound_speed"] =
      std::to_string(read_scalar(file.id, mapping, "c"));
  c.attrs["acquisition.start_time"] =
      std::to_string(read_scalar(file.id, mapping, "t0"));
  c.attrs["acquisition.steering_angle"] = std::to_string(angle);
  c.attrs["source"] = h5_path;
  return c;
}

} // namespace usdr
