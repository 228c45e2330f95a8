#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "waveformer/errors.hpp"

namespace wf {

struct Grid {
  int dim = 1;
  std::vector<int64_t> extents;
  std::vector<double> lengths;  // physical length per axis (periodic convention)

  int64_t points() const {
    int64_t n = 1;
    for (int64_t e : extents) n *= e;
    return n;
  }
  double dx(int axis) const { return lengths[axis] / static_cast<double>(extents[axis]); }
  void validate() const;
};

/// One solved sample: [time][space...] frames plus solver metadata.
struct Trajectory {
  Grid grid;
  int64_t timesteps = 0;
  double dt_stored = 0.0;
  std::string pde;
  std::map<std::string, std::string> params;
  uint64_t seed = 0;
  std::vector<double> fields;  // timesteps * grid.points()

  std::span<const double> frame(int64_t t) const {
    const int64_t n = grid.points();
    return {fields.data() + t * n, static_cast<size_t>(n)};
  }
  void validate() const;
};

/// A batch of trajectories sharing grid and metadata.
struct TrajectoryDataset {
  Grid grid;
  int64_t samples = 0;
  int64_t timesteps = 0;
  double dt_stored = 0.0;
  std::string pde;
  std::string params_text;  // key=value lines
  bool paper_scale = false;
  uint64_t seed = 0;
  std::vector<double> payload;  // [sample][time][space...]

  std::span<const double> frame(int64_t sample, int64_t t) const {
    const int64_t n = grid.points();
    return {payload.data() + (sample * timesteps + t) * n, static_cast<size_t>(n)};
  }
  std::span<const double> sample_block(int64_t sample) const {
    const int64_t n = grid.points() * timesteps;
    return {payload.data() + sample * n, static_cast<size_t>(n)};
  }
  void append(const Trajectory& t);
  std::map<std::string, std::string> params_map() const;
};

std::string params_to_text(const std::map<std::string, std::string>& params);
std::map<std::string, std::string> params_from_text(const std::string& text);

}  // namespace wf
