// End-to-end coverage of the 2D model path and the remaining PDE pipelines
// at miniature sizes.
#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "test_util.hpp"
#include "waveformer/config.hpp"
#include "waveformer/io.hpp"
#include "waveformer/rollout.hpp"
#include "waveformer/solvers.hpp"
#include "waveformer/training.hpp"

using namespace wf;

namespace {
std::filesystem::path tmp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "wf_integration_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}
}  // namespace

TEST_CASE("allen-cahn 2D: generate, train, roll out, evaluate") {
  GenConfig gen = gen_preset("allen-cahn", "desk");
  gen.grid = {2, {16, 16}, {1.0, 1.0}};
  gen.allen_cahn.store_every = 20;
  gen.allen_cahn.frames = 12;
  TrajectoryDataset ds = build_dataset(gen, 3, 31);
  REQUIRE(ds.grid.dim == 2);
  REQUIRE(ds.timesteps == 12);

  RunConfig run;
  run.kind = ModelKind::Waveformer;
  run.model.dim = 2;
  run.model.history = 4;
  run.model.d_v = 6;
  run.model.d_model = 6;
  run.model.q_hidden = 8;
  run.model.levels = 2;
  run.model.wavelet = "db2";
  run.model.n_enc = 1;
  run.model.n_dec = 1;
  run.model.n_heads = 2;
  run.model.stride = 2;
  run.train.epochs = 2;
  run.train.batch = 4;
  run.train.lr = 1e-3;
  run.train.seed = 3;
  run.train.threads = 2;
  auto ckpt = tmp_path("ac2d.wfck");
  TrainResult res = train_model(run, ds, ckpt.string());
  REQUIRE(res.train_loss.size() == 2);
  for (double l : res.train_loss) CHECK(std::isfinite(l));

  Checkpoint ck = read_checkpoint(ckpt.string());
  RunConfig loaded = parse_config_text(ck.config_text, ModelKind::Waveformer);
  CHECK(loaded.model.dim == 2);
  CHECK(loaded.model.train_extents == std::vector<int64_t>({16, 16}));

  TrajectoryDataset pred =
      rollout_dataset(loaded.kind, ck.params, loaded.model, ds, 5, "waveformer");
  CHECK(pred.timesteps == 5);
  CHECK(pred.grid.extents == ds.grid.extents);
  RegionReport rep = evaluate(pred, ds, 8);
  CHECK(rep.per_step.size() == 5);
  for (double v : rep.per_step) CHECK(std::isfinite(v));
}

TEST_CASE("gradients flow through the 2D waveformer") {
  ModelConfig cfg;
  cfg.dim = 2;
  cfg.history = 3;
  cfg.d_v = 4;
  cfg.d_model = 4;
  cfg.q_hidden = 6;
  cfg.levels = 1;
  cfg.wavelet = "db2";
  cfg.n_enc = 1;
  cfg.n_dec = 1;
  cfg.n_heads = 2;
  cfg.stride = 2;
  ParamStore ps = init_params(cfg, ModelKind::Waveformer, 5);
  {
    RngStream rng(55, 1);
    for (auto& [name, t] : ps.mutable_items())
      for (double& v : t.mutable_data()) v = rng.uniform(-0.8, 0.8);
  }
  ps.set_requires_grad(true);
  RngStream rng(56, 0);
  StreamPair sp = make_stream_pair(wft::random_tensor({4, 8, 8}, rng, -1.5, 1.5));
  Tensor target = wft::random_tensor({8, 8}, rng, -1.5, 1.5);
  auto loss = [&]() {
    return relative_mse(waveformer_forward(sp, ps, cfg), target);
  };
  for (const char* pname : {"p.w", "wb.embed.w", "pb.unembed.b", "q.w1"}) {
    const double err = wft::param_grad_check(ps, pname, loss, 1e-5);
    INFO(pname);
    CHECK(err < 1e-4);
  }
}

TEST_CASE("ks pipeline: 101-point solve resampled to 96 trains the ks preset model") {
  GenConfig gen = gen_preset("ks", "desk");
  gen.ks.transient_skip = 50;  // miniature transient for the smoke run
  gen.ks.frames = 10;
  TrajectoryDataset ds = build_dataset(gen, 2, 41);
  REQUIRE(ds.grid.extents == std::vector<int64_t>{96});
  CHECK(ds.params_map()["resampled_from"] == "101");

  RunConfig run = preset_config("ks", ModelKind::Waveformer);
  CHECK(run.model.wavelet == "db4");
  run.model.history = 4;
  run.model.d_v = 6;
  run.model.d_model = 6;
  run.model.q_hidden = 8;
  run.train.epochs = 1;
  run.train.batch = 2;
  run.train.seed = 1;
  run.train.threads = 2;
  TrainResult res = train_model(run, ds, "");
  CHECK(res.train_loss.size() == 1);
  CHECK(std::isfinite(res.train_loss[0]));
}

TEST_CASE("navier-stokes desk pipeline at reduced size") {
  GenConfig gen = gen_preset("navier-stokes", "desk");
  gen.grid = {2, {16, 16}, {1.0, 1.0}};
  gen.navier_stokes.store_every = 25;
  gen.navier_stokes.frames = 8;
  gen.navier_stokes.transient_frames = 1;
  TrajectoryDataset ds = build_dataset(gen, 2, 51);
  REQUIRE(ds.timesteps == 8);
  CHECK(ds.params_map()["grf_tau"].substr(0, 1) == "7");

  RunConfig run;
  run.kind = ModelKind::Waveformer;
  run.model.dim = 2;
  run.model.history = 3;
  run.model.d_v = 4;
  run.model.d_model = 4;
  run.model.q_hidden = 6;
  run.model.levels = 2;
  run.model.wavelet = "db2";
  run.model.n_dec = 1;
  run.model.n_heads = 2;
  run.model.stride = 2;
  run.train.epochs = 1;
  run.train.batch = 4;
  run.train.seed = 9;
  run.train.threads = 2;
  TrainResult res = train_model(run, ds, "");
  CHECK(std::isfinite(res.train_loss[0]));
}

TEST_CASE("wno baseline trains on the 2D grid it was sized for") {
  GenConfig gen = gen_preset("allen-cahn", "desk");
  gen.grid = {2, {16, 16}, {1.0, 1.0}};
  gen.allen_cahn.store_every = 20;
  gen.allen_cahn.frames = 10;
  TrajectoryDataset ds = build_dataset(gen, 2, 61);
  RunConfig run;
  run.kind = ModelKind::Wno;
  run.model.dim = 2;
  run.model.history = 3;
  run.model.d_v = 4;
  run.model.d_model = 4;
  run.model.q_hidden = 6;
  run.model.levels = 2;
  run.model.wavelet = "db2";
  run.model.wno_layers = 2;
  run.train.epochs = 1;
  run.train.batch = 4;
  run.train.seed = 11;
  run.train.threads = 2;
  TrainResult res = train_model(run, ds, "");
  CHECK(std::isfinite(res.train_loss[0]));
}
