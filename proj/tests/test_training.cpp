#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "test_util.hpp"
#include "waveformer/io.hpp"
#include "waveformer/solvers.hpp"
#include "waveformer/training.hpp"

using namespace wf;

namespace {

std::filesystem::path tmp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "wf_train_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

TrajectoryDataset tiny_dataset(int64_t samples, int64_t frames, int64_t n,
                               uint64_t seed) {
  GenConfig cfg = gen_preset("burgers", "desk");
  cfg.grid.extents = {n};
  cfg.resample_to = 0;
  cfg.burgers.frames = frames;
  cfg.burgers.store_every = 4;
  cfg.burgers.dt = 1e-3;
  return build_dataset(cfg, samples, seed);
}

RunConfig tiny_run(uint64_t seed) {
  RunConfig run;
  run.kind = ModelKind::Waveformer;
  run.model.dim = 1;
  run.model.history = 4;
  run.model.d_v = 6;
  run.model.d_model = 6;
  run.model.q_hidden = 12;
  run.model.levels = 2;
  run.model.wavelet = "db2";
  run.model.n_enc = 1;
  run.model.n_dec = 1;
  run.model.n_heads = 2;
  run.train.epochs = 3;
  run.train.batch = 4;
  run.train.lr = 1e-3;
  run.train.seed = seed;
  run.train.threads = 1;
  return run;
}

}  // namespace

TEST_CASE("relative mse basics") {
  RngStream rng(1, 0);
  Tensor truth = wft::random_tensor({12}, rng);
  CHECK(relative_mse(truth, truth).item() == 0.0);
  Tensor twice = scalar_multiply(truth, 2.0);
  CHECK(relative_mse(twice, truth).item() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(relative_mse(truth, Tensor::zeros({12})), Error);
  CHECK_THROWS_AS(relative_mse(truth, Tensor::zeros({11})), Error);
}

TEST_CASE("relative mse batch is the arithmetic mean of per-sample ratios") {
  // construct samples with per-sample values 0.1 and 0.3
  Tensor t1 = Tensor::from({4}, {1.0, 0.0, 0.0, 0.0});
  Tensor p1 = Tensor::from({4}, {1.0 + std::sqrt(0.1), 0.0, 0.0, 0.0});
  Tensor t2 = Tensor::from({4}, {0.0, 2.0, 0.0, 0.0});
  Tensor p2 = Tensor::from({4}, {0.0, 2.0, 2.0 * std::sqrt(0.3), 0.0});
  CHECK(relative_mse(p1, t1).item() == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(relative_mse(p2, t2).item() == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(relative_mse_batch({p1, p2}, {t1, t2}).item() ==
        doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("window construction: counts, overlap, targets") {
  TrajectoryDataset ds = tiny_dataset(2, 12, 16, 5);
  REQUIRE(ds.timesteps == 12);

  // time extent 12 with k = 10 leaves exactly one window
  auto w10 = dataset_windows(ds, 10, 0, 2);
  CHECK(w10.size() == 2);  // one per trajectory
  CHECK(w10[0].t == 0);

  auto windows = dataset_windows(ds, 4, 0, 2);
  CHECK(windows.size() == 2 * (12 - 4 - 1));

  // enc/dec overlap and exact target indexing
  const WindowRef w = windows[3];
  StreamPair sp = window_streams(ds, w, 4);
  Tensor target = window_target(ds, w, 4);
  for (int64_t t = 0; t + 1 < 4; ++t)
    for (int64_t i = 0; i < 16; ++i)
      CHECK(sp.dec.at({t, i}) == sp.enc.at({t + 1, i}));
  auto truth = ds.frame(w.sample, w.t + 5);
  for (int64_t i = 0; i < 16; ++i) CHECK(target.at({i}) == truth[i]);

  // per-trajectory variant agrees
  Trajectory traj;
  traj.grid = ds.grid;
  traj.timesteps = ds.timesteps;
  traj.dt_stored = ds.dt_stored;
  traj.pde = ds.pde;
  auto block = ds.sample_block(0);
  traj.fields.assign(block.begin(), block.end());
  auto pairs = make_windows(traj, 4);
  CHECK(pairs.size() == 12 - 4 - 1);
  CHECK_THROWS_AS(make_windows(traj, 11), Error);
}

TEST_CASE("fit converges on a one-parameter quadratic") {
  ParamStore ps;
  ps.add("w", {1});
  ps.at("w").mutable_data()[0] = 0.0;
  FitProblem prob;
  prob.n_items = 8;
  prob.loss = [](int64_t, const ParamStore& p) {
    Tensor w = p.at("w");
    Tensor d = subtract(w, Tensor::full({1}, 3.0));
    return reshape(multiply(d, d), {});
  };
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.batch = 4;
  cfg.lr = 0.04;
  cfg.weight_decay = 0.0;
  cfg.grad_clip = 0.0;
  cfg.seed = 1;
  TrainResult res = fit(prob, ps, cfg);
  CHECK(std::abs(ps.at("w").data()[0] - 3.0) < 0.05);
  for (size_t e = 4; e < res.train_loss.size(); ++e)
    CHECK(res.train_loss[e] < res.train_loss[e - 1]);
}

TEST_CASE("fit applies the step-decay learning-rate schedule") {
  ParamStore ps;
  ps.add("w", {1});
  FitProblem prob;
  prob.n_items = 2;
  prob.loss = [](int64_t, const ParamStore& p) {
    Tensor w = p.at("w");
    return reshape(multiply(w, w), {});
  };
  TrainConfig cfg;
  cfg.epochs = 45;
  cfg.batch = 2;
  cfg.lr = 1e-3;
  cfg.decay_factor = 0.75;
  cfg.decay_interval = 20;
  cfg.seed = 2;
  TrainResult res = fit(prob, ps, cfg);
  CHECK(res.lr[0] == doctest::Approx(1e-3));
  CHECK(res.lr[19] == doctest::Approx(1e-3));
  CHECK(res.lr[20] == doctest::Approx(0.75e-3));
  CHECK(res.lr[40] == doctest::Approx(0.5625e-3));
}

TEST_CASE("training is deterministic for a fixed seed and any thread count") {
  TrajectoryDataset ds = tiny_dataset(3, 10, 16, 11);
  RunConfig run = tiny_run(7);
  TrainResult a = train_model(run, ds, "");
  TrainResult b = train_model(run, ds, "");
  REQUIRE(a.train_loss.size() == b.train_loss.size());
  for (size_t i = 0; i < a.train_loss.size(); ++i)
    CHECK(a.train_loss[i] == b.train_loss[i]);

  RunConfig threaded = run;
  threaded.train.threads = 2;
  TrainResult c = train_model(threaded, ds, "");
  for (size_t i = 0; i < a.train_loss.size(); ++i)
    CHECK(a.train_loss[i] == c.train_loss[i]);

  RunConfig other = run;
  other.train.seed = 8;
  TrainResult d = train_model(other, ds, "");
  bool any_diff = false;
  for (size_t i = 0; i < a.train_loss.size(); ++i)
    any_diff = any_diff || a.train_loss[i] != d.train_loss[i];
  CHECK(any_diff);
}

TEST_CASE("checkpoint round trip reproduces the forward pass bit for bit") {
  TrajectoryDataset ds = tiny_dataset(3, 10, 16, 13);
  RunConfig run = tiny_run(9);
  auto ckpt = tmp_path("tiny.wfck");
  auto metrics = tmp_path("tiny_metrics.csv");
  train_model(run, ds, ckpt.string(), metrics.string());
  REQUIRE(std::filesystem::exists(ckpt));
  REQUIRE(std::filesystem::exists(metrics));

  Checkpoint ck = read_checkpoint(ckpt.string());
  RunConfig loaded = parse_config_text(ck.config_text, ModelKind::Waveformer);
  CHECK(loaded.model.train_extents == std::vector<int64_t>{16});

  const WindowRef w{0, 2};
  StreamPair sp = window_streams(ds, w, run.model.history);
  RunConfig local = run;
  local.model.train_extents = {16};
  Tensor out1 = model_forward(loaded.kind, sp, ck.params, loaded.model);
  // write -> read -> identical output
  auto ckpt2 = tmp_path("tiny2.wfck");
  write_checkpoint(ckpt2.string(), ck.config_text, ck.params);
  Checkpoint ck2 = read_checkpoint(ckpt2.string());
  Tensor out2 = model_forward(loaded.kind, sp, ck2.params, loaded.model);
  CHECK(wft::max_abs_diff(out1.data(), out2.data()) == 0.0);
}

TEST_CASE("training rejects too-short datasets") {
  TrajectoryDataset ds = tiny_dataset(2, 5, 16, 17);
  RunConfig run = tiny_run(1);
  run.model.history = 4;  // needs >= 6 frames
  CHECK_THROWS_AS(train_model(run, ds, ""), Error);
}

TEST_CASE("wno and transformer baselines train end to end") {
  TrajectoryDataset ds = tiny_dataset(3, 10, 16, 19);
  for (ModelKind kind : {ModelKind::Wno, ModelKind::Transformer}) {
    RunConfig run = tiny_run(21);
    run.kind = kind;
    run.train.epochs = 2;
    TrainResult res = train_model(run, ds, "");
    CHECK(res.train_loss.size() == 2);
    for (double l : res.train_loss) CHECK(std::isfinite(l));
  }
}
