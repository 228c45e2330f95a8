#include "waveformer/rollout.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace wf {

std::vector<double> rollout(
    ModelKind kind, const ParamStore& params, const ModelConfig& cfg,
    std::span<const double> history, const std::vector<int64_t>& extents,
    int64_t steps,
    const std::function<void(int64_t, std::span<const double>)>& observer) {
  const int k = cfg.history;
  int64_t points = 1;
  for (int64_t e : extents) points *= e;
  if (static_cast<int64_t>(history.size()) != (k + 1) * points)
    raise(errc::shape_mismatch, "rollout history must hold k+1 frames");
  if (steps < 1) raise(errc::bad_value, "rollout needs steps >= 1");

  std::vector<double> window(history.begin(), history.end());
  std::vector<double> out;
  out.reserve(steps * points);
  Shape hist_shape{k + 1};
  hist_shape.insert(hist_shape.end(), extents.begin(), extents.end());

  for (int64_t j = 0; j < steps; ++j) {
    StreamPair sp = make_stream_pair(Tensor::from(hist_shape, window));
    Tensor pred = model_forward(kind, sp, params, cfg);
    const auto pd = pred.data();
    for (double v : pd)
      if (!std::isfinite(v))
        raise(errc::non_finite, "rollout diverged at step " + std::to_string(j));
    out.insert(out.end(), pd.begin(), pd.end());
    // drop the oldest frame, push the prediction
    std::memmove(window.data(), window.data() + points,
                 sizeof(double) * static_cast<size_t>(k) * points);
    std::copy(pd.begin(), pd.end(), window.end() - points);
    if (observer) observer(j, std::span<const double>(window));
  }
  return out;
}

TrajectoryDataset rollout_dataset(ModelKind kind, const ParamStore& params,
                                  const ModelConfig& cfg,
                                  const TrajectoryDataset& truth, int64_t steps,
                                  const std::string& model_label) {
  const int k = cfg.history;
  if (truth.timesteps < k + 1)
    raise(errc::too_short, "truth dataset shorter than the k+1 seed window");
  TrajectoryDataset out;
  out.grid = truth.grid;
  out.samples = truth.samples;
  out.timesteps = steps;
  out.dt_stored = truth.dt_stored;
  out.pde = truth.pde;
  out.paper_scale = truth.paper_scale;
  out.seed = truth.seed;
  const int64_t points = truth.grid.points();
  out.payload.resize(truth.samples * steps * points);
  for (int64_t s = 0; s < truth.samples; ++s) {
    std::span<const double> hist(truth.payload.data() + s * truth.timesteps * points,
                                 static_cast<size_t>((k + 1) * points));
    std::vector<double> pred = rollout(kind, params, cfg, hist, truth.grid.extents, steps);
    std::copy(pred.begin(), pred.end(), out.payload.begin() + s * steps * points);
  }
  auto meta = params_from_text(truth.params_text);
  meta["model"] = model_label;
  meta["start_step"] = std::to_string(k + 1);
  meta["source_pde"] = truth.pde;
  out.params_text = params_to_text(meta);
  return out;
}

RegionReport evaluate(const TrajectoryDataset& pred, const TrajectoryDataset& truth,
                      int64_t boundary) {
  if (pred.grid.extents != truth.grid.extents || pred.samples != truth.samples)
    raise(errc::misaligned, "prediction and truth shapes differ");
  auto meta = pred.params_map();
  int64_t start = 0;
  if (auto it = meta.find("start_step"); it != meta.end())
    start = std::stoll(it->second);
  if (start + pred.timesteps > truth.timesteps)
    raise(errc::misaligned, "prediction range [" + std::to_string(start) + ", " +
                                std::to_string(start + pred.timesteps) +
                                ") exceeds truth frames " + std::to_string(truth.timesteps));
  RegionReport rep;
  rep.model = meta.count("model") ? meta["model"] : "model";
  rep.start_step = start;
  rep.boundary = boundary;
  const int64_t points = pred.grid.points();
  rep.per_step.resize(pred.timesteps);
  for (int64_t j = 0; j < pred.timesteps; ++j) {
    double acc = 0.0;
    for (int64_t s = 0; s < pred.samples; ++s) {
      auto p = pred.frame(s, j);
      auto t = truth.frame(s, start + j);
      double num = 0.0, den = 0.0;
      for (int64_t i = 0; i < points; ++i) {
        const double d = p[i] - t[i];
        num += d * d;
        den += t[i] * t[i];
      }
      if (den == 0.0) raise(errc::zero_reference, "zero reference at step " + std::to_string(j));
      acc += num / den;
    }
    rep.per_step[j] = acc / static_cast<double>(pred.samples);
  }
  double tr_sum = 0.0, ex_sum = 0.0;
  int64_t tr_n = 0, ex_n = 0;
  for (int64_t j = 0; j < pred.timesteps; ++j) {
    if (start + j < boundary) {
      tr_sum += rep.per_step[j];
      ++tr_n;
    } else {
      ex_sum += rep.per_step[j];
      ++ex_n;
    }
  }
  rep.has_trained = tr_n > 0;
  rep.has_extrapolated = ex_n > 0;
  if (tr_n > 0) rep.trained_mean = tr_sum / static_cast<double>(tr_n);
  if (ex_n > 0) rep.extrapolated_mean = ex_sum / static_cast<double>(ex_n);
  return rep;
}

void write_report_csv(const std::string& path, const RegionReport& report) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) raise(errc::io_error, "cannot write " + path);
  f << std::setprecision(17);
  f << "step,model,relative_mse,region\n";
  for (size_t j = 0; j < report.per_step.size(); ++j) {
    const int64_t abs_step = report.start_step + static_cast<int64_t>(j);
    f << abs_step << "," << report.model << "," << report.per_step[j] << ","
      << (abs_step < report.boundary ? "trained" : "extrapolated") << "\n";
  }
}

RegionReport read_report_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) raise(errc::io_error, "cannot open " + path);
  std::string line;
  if (!std::getline(f, line) || line.rfind("step,model,relative_mse,region", 0) != 0)
    raise(errc::io_error, path + ": not a report CSV");
  RegionReport rep;
  bool first = true;
  int64_t prev_step = 0;
  double tr_sum = 0.0, ex_sum = 0.0;
  int64_t tr_n = 0, ex_n = 0;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::istringstream is(line);
    std::string step_s, model, value_s, region;
    if (!std::getline(is, step_s, ',') || !std::getline(is, model, ',') ||
        !std::getline(is, value_s, ',') || !std::getline(is, region))
      raise(errc::io_error, path + ": malformed row '" + line + "'");
    const int64_t step = std::stoll(step_s);
    const double value = std::stod(value_s);
    if (first) {
      rep.start_step = step;
      rep.model = model;
      first = false;
    } else if (step != prev_step + 1 || model != rep.model) {
      raise(errc::misaligned, path + ": non-contiguous steps or mixed models");
    }
    prev_step = step;
    rep.per_step.push_back(value);
    if (region == "trained") {
      tr_sum += value;
      ++tr_n;
      rep.boundary = step + 1;  // boundary is one past the last trained step
    } else {
      ex_sum += value;
      ++ex_n;
      if (ex_n == 1 && tr_n == 0) rep.boundary = step;
    }
  }
  if (first) raise(errc::io_error, path + ": empty report");
  rep.has_trained = tr_n > 0;
  rep.has_extrapolated = ex_n > 0;
  if (tr_n > 0) rep.trained_mean = tr_sum / static_cast<double>(tr_n);
  if (ex_n > 0) rep.extrapolated_mean = ex_sum / static_cast<double>(ex_n);
  return rep;
}

ComparisonTable compare_models(const std::vector<RegionReport>& reports) {
  if (reports.empty()) raise(errc::misaligned, "nothing to compare");
  for (const RegionReport& r : reports) {
    if (r.per_step.size() != reports[0].per_step.size() ||
        r.start_step != reports[0].start_step || r.boundary != reports[0].boundary)
      raise(errc::misaligned, "reports cover different ranges or regions");
  }
  ComparisonTable t;
  for (const RegionReport& r : reports) {
    t.models.push_back(r.model);
    t.trained.push_back(r.has_trained ? r.trained_mean
                                      : std::numeric_limits<double>::quiet_NaN());
    t.extrapolated.push_back(r.has_extrapolated
                                 ? r.extrapolated_mean
                                 : std::numeric_limits<double>::quiet_NaN());
  }
  auto winner = [&](const std::vector<double>& v) -> std::string {
    size_t best = 0;
    bool tie = false;
    for (size_t i = 1; i < v.size(); ++i) {
      if (v[i] < v[best]) {
        best = i;
        tie = false;
      } else if (v[i] == v[best]) {
        tie = true;
      }
    }
    if (std::isnan(v[best])) return "-";
    return tie ? "tie" : t.models[best];
  };
  t.trained_winner = winner(t.trained);
  t.extrapolated_winner = winner(t.extrapolated);
  return t;
}

void write_comparison_csv(const std::string& path, const ComparisonTable& table) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) raise(errc::io_error, "cannot write " + path);
  f << std::setprecision(17);
  f << "region";
  for (const auto& m : table.models) f << "," << m;
  f << ",winner\n";
  f << "trained";
  for (double v : table.trained) f << "," << v;
  f << "," << table.trained_winner << "\n";
  f << "extrapolated";
  for (double v : table.extrapolated) f << "," << v;
  f << "," << table.extrapolated_winner << "\n";
}

}  // namespace wf
