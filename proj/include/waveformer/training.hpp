#pragma once

#include <functional>

#include "waveformer/config.hpp"
#include "waveformer/dataset.hpp"
#include "waveformer/model.hpp"

namespace wf {

/// Sum((pred-truth)^2) / Sum(truth^2) for one sample; differentiable in pred.
Tensor relative_mse(const Tensor& pred, const Tensor& truth);
Tensor mse_loss(const Tensor& pred, const Tensor& truth);
/// Batch mean of per-sample relative MSE.
Tensor relative_mse_batch(const std::vector<Tensor>& preds,
                          const std::vector<Tensor>& truths);

/// One training window: history frames [t, t+k], target frame t+k+1.
struct WindowRef {
  int64_t sample = 0;
  int64_t t = 0;
};

std::vector<WindowRef> dataset_windows(const TrajectoryDataset& ds, int k,
                                       int64_t sample_begin, int64_t sample_end);
StreamPair window_streams(const TrajectoryDataset& ds, const WindowRef& w, int k);
Tensor window_target(const TrajectoryDataset& ds, const WindowRef& w, int k);

/// All (streams, target) pairs of a single trajectory.
std::vector<std::pair<StreamPair, Tensor>> make_windows(const Trajectory& traj, int k);

/// Anything trainable by the epoch loop: item count plus a per-item scalar
/// loss evaluated against a given parameter set.
struct FitProblem {
  int64_t n_items = 0;
  std::function<Tensor(int64_t item, const ParamStore& params)> loss;
};

struct TrainResult {
  std::vector<double> train_loss;  // per-epoch mean over items
  std::vector<double> val_loss;    // per-epoch; empty when no validation split
  std::vector<double> lr;          // per-epoch learning rate
  int best_epoch = -1;
};

/// Seeded-shuffle minibatch Adam loop with the step-decay schedule and
/// global-norm gradient clipping. Per-item gradients are evaluated against a
/// private parameter copy (so batch items may run on worker threads) and
/// accumulated in item order; results are bit-identical for any thread count.
TrainResult fit(const FitProblem& problem, ParamStore& params,
                const TrainConfig& cfg,
                const std::function<double(const ParamStore&)>& validate = {},
                const std::function<void(int, const ParamStore&)>& on_best = {});

/// Full training entry point: windows the dataset, holds out the last
/// val_fraction of trajectories for checkpoint selection, writes the best
/// checkpoint to ckpt_path and (optionally) a per-epoch metrics CSV.
TrainResult train_model(const RunConfig& run, const TrajectoryDataset& ds,
                        const std::string& ckpt_path,
                        const std::string& metrics_csv_path = "");

}  // namespace wf
