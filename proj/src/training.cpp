#include "waveformer/training.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <thread>

#include "waveformer/io.hpp"
#include "waveformer/rng.hpp"

namespace wf {

Tensor relative_mse(const Tensor& pred, const Tensor& truth) {
  if (pred.shape() != truth.shape())
    raise(errc::shape_mismatch, "relative_mse shapes " + shape_str(pred.shape()) +
                                    " vs " + shape_str(truth.shape()));
  double denom = 0.0;
  for (double v : truth.data()) denom += v * v;
  if (denom == 0.0) raise(errc::zero_reference, "relative_mse: reference norm is zero");
  Tensor diff = subtract(pred, truth);
  return scalar_multiply(sum_all(multiply(diff, diff)), 1.0 / denom);
}

Tensor mse_loss(const Tensor& pred, const Tensor& truth) {
  if (pred.shape() != truth.shape())
    raise(errc::shape_mismatch, "mse shapes differ");
  Tensor diff = subtract(pred, truth);
  return mean_all(multiply(diff, diff));
}

Tensor relative_mse_batch(const std::vector<Tensor>& preds,
                          const std::vector<Tensor>& truths) {
  if (preds.empty() || preds.size() != truths.size())
    raise(errc::shape_mismatch, "relative_mse_batch: count mismatch");
  Tensor acc = relative_mse(preds[0], truths[0]);
  for (size_t i = 1; i < preds.size(); ++i)
    acc = add(acc, relative_mse(preds[i], truths[i]));
  return scalar_multiply(acc, 1.0 / static_cast<double>(preds.size()));
}

// ---- windows ---------------------------------------------------------------------

std::vector<WindowRef> dataset_windows(const TrajectoryDataset& ds, int k,
                                       int64_t sample_begin, int64_t sample_end) {
  if (ds.timesteps < k + 2)
    raise(errc::too_short, "trajectories too short for k = " + std::to_string(k));
  std::vector<WindowRef> out;
  const int64_t per_traj = ds.timesteps - k - 1;
  out.reserve((sample_end - sample_begin) * per_traj);
  for (int64_t s = sample_begin; s < sample_end; ++s)
    for (int64_t t = 0; t < per_traj; ++t) out.push_back({s, t});
  return out;
}

namespace {
Tensor frames_tensor(const TrajectoryDataset& ds, int64_t sample, int64_t t0,
                     int64_t count) {
  const int64_t n = ds.grid.points();
  std::vector<double> data(count * n);
  for (int64_t i = 0; i < count; ++i) {
    auto f = ds.frame(sample, t0 + i);
    std::copy(f.begin(), f.end(), data.begin() + i * n);
  }
  Shape shape{count};
  shape.insert(shape.end(), ds.grid.extents.begin(), ds.grid.extents.end());
  return Tensor::from(std::move(shape), std::move(data));
}
}  // namespace

StreamPair window_streams(const TrajectoryDataset& ds, const WindowRef& w, int k) {
  return make_stream_pair(frames_tensor(ds, w.sample, w.t, k + 1));
}

Tensor window_target(const TrajectoryDataset& ds, const WindowRef& w, int k) {
  const int64_t n = ds.grid.points();
  auto f = ds.frame(w.sample, w.t + k + 1);
  Shape shape(ds.grid.extents.begin(), ds.grid.extents.end());
  return Tensor::from(std::move(shape), std::vector<double>(f.begin(), f.begin() + n));
}

std::vector<std::pair<StreamPair, Tensor>> make_windows(const Trajectory& traj, int k) {
  if (traj.timesteps < k + 2)
    raise(errc::too_short, "trajectory too short for k = " + std::to_string(k));
  const int64_t n = traj.grid.points();
  std::vector<std::pair<StreamPair, Tensor>> out;
  for (int64_t t = 0; t + k + 1 < traj.timesteps; ++t) {
    std::vector<double> hist((k + 1) * n);
    for (int64_t i = 0; i <= k; ++i) {
      auto f = traj.frame(t + i);
      std::copy(f.begin(), f.end(), hist.begin() + i * n);
    }
    Shape hshape{k + 1};
    hshape.insert(hshape.end(), traj.grid.extents.begin(), traj.grid.extents.end());
    auto target_frame = traj.frame(t + k + 1);
    Shape tshape(traj.grid.extents.begin(), traj.grid.extents.end());
    out.emplace_back(
        make_stream_pair(Tensor::from(std::move(hshape), std::move(hist))),
        Tensor::from(std::move(tshape),
                     std::vector<double>(target_frame.begin(), target_frame.end())));
  }
  return out;
}

// ---- fit loop --------------------------------------------------------------------

namespace {

void shuffle_in_place(std::vector<int64_t>& v, RngStream& rng) {
  for (size_t i = v.size(); i > 1; --i) {
    const size_t j = static_cast<size_t>(rng.next_u64() % i);
    std::swap(v[i - 1], v[j]);
  }
}

/// Reusable per-worker state: a private copy of the parameters whose values
/// are refreshed from the master before every batch. Reusing the buffers
/// keeps the inner loop free of per-item allocation.
struct Worker {
  ParamStore local;

  explicit Worker(const ParamStore& master) : local(master.clone()) {}

  void refresh(const ParamStore& master) {
    const auto& src = master.items();
    auto& dst = local.mutable_items();
    for (size_t p = 0; p < src.size(); ++p) {
      const auto s = src[p].second.data();
      std::copy(s.begin(), s.end(), dst[p].second.mutable_data().begin());
    }
  }

  double run_item(const FitProblem& problem, int64_t item,
                  std::vector<std::vector<double>>& grad_slot) {
    local.zero_grads();
    double loss_value = 0.0;
    {
      Tape tape;
      Tape::Scope scope(tape);
      Tensor loss = problem.loss(item, local);
      tape.backward(loss);
      loss_value = loss.item();
    }
    const auto& items = local.items();
    for (size_t p = 0; p < items.size(); ++p) {
      const Tensor& t = items[p].second;
      if (t.has_grad()) {
        auto g = t.grad();
        std::copy(g.begin(), g.end(), grad_slot[p].begin());
      } else {
        std::fill(grad_slot[p].begin(), grad_slot[p].end(), 0.0);
      }
    }
    return loss_value;
  }
};

}  // namespace

TrainResult fit(const FitProblem& problem, ParamStore& params,
                const TrainConfig& cfg,
                const std::function<double(const ParamStore&)>& validate,
                const std::function<void(int, const ParamStore&)>& on_best) {
  cfg.validate();
  if (problem.n_items < 1) raise(errc::too_short, "nothing to train on");
  params.set_requires_grad(true);
  std::vector<Tensor> master = params.tensors();
  AdamState adam;
  adam.init(master);
  adam.weight_decay = cfg.weight_decay;

  std::vector<int64_t> order(problem.n_items);
  for (int64_t i = 0; i < problem.n_items; ++i) order[i] = i;

  TrainResult res;
  double best = std::numeric_limits<double>::infinity();
  const int threads = std::min<int>(cfg.threads, cfg.batch);

  std::vector<Worker> workers;
  workers.reserve(threads);
  for (int w = 0; w < threads; ++w) workers.emplace_back(params);

  // per-item gradient slots and the batch accumulator, allocated once
  std::vector<std::vector<std::vector<double>>> slots(cfg.batch);
  for (auto& slot : slots) {
    slot.resize(master.size());
    for (size_t p = 0; p < master.size(); ++p) slot[p].assign(master[p].numel(), 0.0);
  }
  std::vector<double> losses(cfg.batch, 0.0);
  std::vector<std::vector<double>> total(master.size());
  for (size_t p = 0; p < master.size(); ++p) total[p].assign(master[p].numel(), 0.0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    adam.lr = lr_at_epoch(cfg, epoch);
    RngStream shuffle_rng(cfg.seed, fnv1a64("shuffle") + static_cast<uint64_t>(epoch));
    shuffle_in_place(order, shuffle_rng);

    double loss_sum = 0.0;
    for (int64_t start = 0; start < problem.n_items; start += cfg.batch) {
      const int64_t bsz = std::min<int64_t>(cfg.batch, problem.n_items - start);
      if (threads > 1 && bsz > 1) {
        std::vector<std::thread> pool;
        std::atomic<int64_t> next{0};
        for (int w = 0; w < threads; ++w)
          pool.emplace_back([&, w]() {
            workers[w].refresh(params);
            for (int64_t i = next.fetch_add(1); i < bsz; i = next.fetch_add(1))
              losses[i] = workers[w].run_item(problem, order[start + i], slots[i]);
          });
        for (auto& th : pool) th.join();
      } else {
        workers[0].refresh(params);
        for (int64_t i = 0; i < bsz; ++i)
          losses[i] = workers[0].run_item(problem, order[start + i], slots[i]);
      }

      // accumulate in item order: deterministic for any thread count
      for (size_t p = 0; p < master.size(); ++p)
        std::fill(total[p].begin(), total[p].end(), 0.0);
      const double inv_b = 1.0 / static_cast<double>(bsz);
      for (int64_t i = 0; i < bsz; ++i) {
        if (!std::isfinite(losses[i]))
          raise(errc::early_nan,
                "non-finite loss at epoch " + std::to_string(epoch) + ", batch item " +
                    std::to_string(start + i));
        loss_sum += losses[i];
        for (size_t p = 0; p < master.size(); ++p) {
          const auto& g = slots[i][p];
          double* t = total[p].data();
          for (size_t j = 0; j < g.size(); ++j) t[j] += g[j] * inv_b;
        }
      }

      if (cfg.grad_clip > 0.0) {
        double norm2 = 0.0;
        for (const auto& g : total)
          for (double v : g) norm2 += v * v;
        const double norm = std::sqrt(norm2);
        if (norm > cfg.grad_clip) {
          const double s = cfg.grad_clip / norm;
          for (auto& g : total)
            for (double& v : g) v *= s;
        }
      }

      std::vector<std::span<const double>> grad_views;
      grad_views.reserve(total.size());
      for (const auto& g : total) grad_views.emplace_back(g);
      adam_step(master, grad_views, adam);
    }

    const double epoch_loss = loss_sum / static_cast<double>(problem.n_items);
    res.train_loss.push_back(epoch_loss);
    res.lr.push_back(adam.lr);

    double score = epoch_loss;
    if (validate) {
      const double v = validate(params);
      res.val_loss.push_back(v);
      score = v;
    }
    if (score < best) {
      best = score;
      res.best_epoch = epoch;
      if (on_best) on_best(epoch, params);
    }
  }
  return res;
}

// ---- dataset-level training ---------------------------------------------------------

TrainResult train_model(const RunConfig& run, const TrajectoryDataset& ds,
                        const std::string& ckpt_path,
                        const std::string& metrics_csv_path) {
  RunConfig cfg = run;
  if (cfg.model.dim != ds.grid.dim)
    raise(errc::bad_value, "config dim does not match dataset dim");
  cfg.model.train_extents = ds.grid.extents;
  cfg.model.validate();
  cfg.train.validate();
  const int k = cfg.model.history;
  if (ds.timesteps < k + 2)
    raise(errc::too_short, "dataset frames " + std::to_string(ds.timesteps) +
                               " too short for k = " + std::to_string(k));

  int64_t n_val = static_cast<int64_t>(std::llround(cfg.train.val_fraction *
                                                    static_cast<double>(ds.samples)));
  n_val = std::min<int64_t>(n_val, ds.samples - 1);
  const int64_t n_train = ds.samples - n_val;

  const std::vector<WindowRef> train_windows = dataset_windows(ds, k, 0, n_train);
  const std::vector<WindowRef> val_windows =
      n_val > 0 ? dataset_windows(ds, k, n_train, ds.samples) : std::vector<WindowRef>{};

  const bool use_mse = cfg.train.loss == "mse";
  auto item_loss = [&](const WindowRef& w, const ParamStore& ps) {
    StreamPair sp = window_streams(ds, w, k);
    Tensor target = window_target(ds, w, k);
    Tensor pred = model_forward(cfg.kind, sp, ps, cfg.model);
    return use_mse ? mse_loss(pred, target) : relative_mse(pred, target);
  };

  FitProblem problem;
  problem.n_items = static_cast<int64_t>(train_windows.size());
  problem.loss = [&](int64_t item, const ParamStore& ps) {
    return item_loss(train_windows[item], ps);
  };

  std::function<double(const ParamStore&)> validate;
  if (!val_windows.empty()) {
    validate = [&, threads = cfg.train.threads](const ParamStore& ps) {
      std::vector<double> losses(val_windows.size(), 0.0);
      if (threads > 1) {
        std::vector<std::thread> pool;
        std::atomic<size_t> next{0};
        for (int w = 0; w < threads; ++w)
          pool.emplace_back([&]() {
            for (size_t i = next.fetch_add(1); i < val_windows.size();
                 i = next.fetch_add(1))
              losses[i] = item_loss(val_windows[i], ps).item();
          });
        for (auto& th : pool) th.join();
      } else {
        for (size_t i = 0; i < val_windows.size(); ++i)
          losses[i] = item_loss(val_windows[i], ps).item();
      }
      double sum = 0.0;
      for (double l : losses) sum += l;  // fixed order
      return sum / static_cast<double>(val_windows.size());
    };
  }

  ParamStore params = init_params(cfg.model, cfg.kind, cfg.train.seed);
  const std::string config_text = config_to_text(cfg, cfg.kind);
  auto on_best = [&](int, const ParamStore& ps) {
    if (!ckpt_path.empty()) write_checkpoint(ckpt_path, config_text, ps);
  };

  TrainResult res = fit(problem, params, cfg.train, validate, on_best);

  if (!metrics_csv_path.empty()) {
    std::ofstream csv(metrics_csv_path, std::ios::trunc);
    if (!csv) raise(errc::io_error, "cannot write " + metrics_csv_path);
    csv << std::setprecision(17);
    csv << "epoch,train_loss,val_loss,lr\n";
    for (size_t e = 0; e < res.train_loss.size(); ++e) {
      csv << e << "," << res.train_loss[e] << ",";
      if (e < res.val_loss.size()) csv << res.val_loss[e];
      csv << "," << res.lr[e] << "\n";
    }
  }
  return res;
}

}  // namespace wf
