#pragma once

#include <string>
#include <vector>

#include "waveformer/dataset.hpp"
#include "waveformer/model.hpp"

namespace wf {

// Dataset container, magic "WFDS". All integers little-endian; payload is
// raw 64-bit LE floats ordered [sample][time][space...].
void write_dataset(const std::string& path, const TrajectoryDataset& ds);
TrajectoryDataset read_dataset(const std::string& path);

// Checkpoint container, magic "WFCK": config text block, then a name table
// (count, length-prefixed names + shape lists), then the parameter payload
// concatenated in name-table order. load(save(p)) is bit-identical.
void write_checkpoint(const std::string& path, const std::string& config_text,
                      const ParamStore& params);
struct Checkpoint {
  std::string config_text;
  ParamStore params;
};
Checkpoint read_checkpoint(const std::string& path);

/// Fourier zero-pad/truncate of a periodic field along one axis; exact for
/// band-limited inputs.
std::vector<double> spectral_resample(std::span<const double> field,
                                      int64_t n_from, int64_t n_to);

/// Resamples every frame of a 1D trajectory to a new extent.
Trajectory resample_trajectory(const Trajectory& t, int64_t n_to);

}  // namespace wf
