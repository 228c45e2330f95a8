#include "waveformer/dataset.hpp"

#include <cmath>
#include <sstream>

namespace wf {

void Grid::validate() const {
  if (dim != 1 && dim != 2) raise(errc::bad_value, "grid dim must be 1 or 2");
  if (static_cast<int>(extents.size()) != dim ||
      static_cast<int>(lengths.size()) != dim)
    raise(errc::bad_value, "grid extent/length rank mismatch");
  for (int64_t e : extents)
    if (e < 8) raise(errc::bad_value, "grid extents must be >= 8");
  for (int a = 0; a < dim; ++a)
    if (!(dx(a) > 0.0)) raise(errc::bad_value, "grid spacing must be positive");
}

void Trajectory::validate() const {
  grid.validate();
  if (timesteps < 2) raise(errc::too_short, "trajectory needs at least 2 frames");
  if (static_cast<int64_t>(fields.size()) != timesteps * grid.points())
    raise(errc::shape_mismatch, "trajectory payload size mismatch");
  for (double v : fields)
    if (!std::isfinite(v)) raise(errc::non_finite, "trajectory contains non-finite values");
}

void TrajectoryDataset::append(const Trajectory& t) {
  t.validate();
  if (samples == 0) {
    grid = t.grid;
    timesteps = t.timesteps;
    dt_stored = t.dt_stored;
    pde = t.pde;
  } else {
    if (t.grid.extents != grid.extents || t.timesteps != timesteps)
      raise(errc::shape_mismatch, "trajectory does not match dataset shape");
  }
  payload.insert(payload.end(), t.fields.begin(), t.fields.end());
  samples += 1;
}

std::map<std::string, std::string> TrajectoryDataset::params_map() const {
  return params_from_text(params_text);
}

std::string params_to_text(const std::map<std::string, std::string>& params) {
  std::ostringstream os;
  for (const auto& [k, v] : params) os << k << "=" << v << "\n";
  return os.str();
}

std::map<std::string, std::string> params_from_text(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    out[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return out;
}

}  // namespace wf
