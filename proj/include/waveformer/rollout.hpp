#pragma once

#include <functional>

#include "waveformer/config.hpp"
#include "waveformer/dataset.hpp"
#include "waveformer/model.hpp"

namespace wf {

/// Autoregressive prediction. `history` holds the k+1 seed frames
/// ([k+1][points] flat); each predicted frame is pushed into the window,
/// dropping the oldest. Ground truth is never consumed past the seed.
/// Returns [steps][points] flat. The observer, when set, sees the window
/// contents after every push (for window-update audits).
std::vector<double> rollout(
    ModelKind kind, const ParamStore& params, const ModelConfig& cfg,
    std::span<const double> history, const std::vector<int64_t>& extents,
    int64_t steps,
    const std::function<void(int64_t, std::span<const double>)>& observer = {});

/// Rollout over every sample of a truth dataset: seeds from the first k+1
/// frames, predicts `steps` frames, and returns them as a dataset aligned at
/// absolute step k+1 (recorded as start_step in the metadata).
TrajectoryDataset rollout_dataset(ModelKind kind, const ParamStore& params,
                                  const ModelConfig& cfg,
                                  const TrajectoryDataset& truth, int64_t steps,
                                  const std::string& model_label);

/// Per-step relative MSE averaged over samples, split at `boundary` (an
/// absolute frame index; predictions before it are the trained region).
struct RegionReport {
  std::string model;
  int64_t start_step = 0;
  int64_t boundary = 0;
  std::vector<double> per_step;
  bool has_trained = false;
  bool has_extrapolated = false;
  double trained_mean = 0.0;
  double extrapolated_mean = 0.0;
};

RegionReport evaluate(const TrajectoryDataset& pred, const TrajectoryDataset& truth,
                      int64_t boundary);

void write_report_csv(const std::string& path, const RegionReport& report);
RegionReport read_report_csv(const std::string& path);

struct ComparisonTable {
  std::vector<std::string> models;
  std::vector<double> trained;
  std::vector<double> extrapolated;
  std::string trained_winner;       // "tie" when flagged
  std::string extrapolated_winner;
};

/// Region means per model with the argmin marked; ties are flagged.
ComparisonTable compare_models(const std::vector<RegionReport>& reports);
void write_comparison_csv(const std::string& path, const ComparisonTable& table);

}  // namespace wf
