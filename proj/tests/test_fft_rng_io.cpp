#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "test_util.hpp"
#include "waveformer/config.hpp"
#include "waveformer/fft.hpp"
#include "waveformer/io.hpp"
#include "waveformer/rng.hpp"

using namespace wf;

namespace {
std::filesystem::path tmp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "wf_io_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

std::string file_bytes(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(f)),
                     std::istreambuf_iterator<char>());
}
}  // namespace

TEST_CASE("fft of a constant concentrates in the DC bin") {
  for (int64_t n : {8, 60, 101}) {
    std::vector<double> x(n, 2.5);
    auto spec = fft_1d(x);
    CHECK(spec[0].real() == doctest::Approx(2.5 * n).epsilon(1e-12));
    CHECK(std::abs(spec[0].imag()) < 1e-9);
    for (int64_t k = 1; k < n; ++k) CHECK(std::abs(spec[k]) < 1e-9);
  }
}

TEST_CASE("fft round trip and Parseval") {
  RngStream rng(1, 0);
  for (int64_t n : {64, 101, 96}) {
    std::vector<double> x(n);
    for (double& v : x) v = rng.uniform(-1, 1);
    auto spec = fft_1d(x);
    auto back = ifft_1d_real(spec);
    CHECK(wft::max_abs_diff(x, back) < 1e-12);
    double ex = 0.0, es = 0.0;
    for (double v : x) ex += v * v;
    for (auto& c : spec) es += std::norm(c);
    CHECK(es / static_cast<double>(n) == doctest::Approx(ex).epsilon(1e-12));
  }
}

TEST_CASE("2D fft round trip") {
  RngStream rng(2, 0);
  std::vector<double> x(32 * 48);
  for (double& v : x) v = rng.uniform(-1, 1);
  auto spec = fft_2d(x, 32, 48);
  auto back = ifft_2d_real(spec, 32, 48);
  CHECK(wft::max_abs_diff(x, back) < 1e-11);
}

TEST_CASE("rng streams are deterministic and reproducible") {
  RngStream a(7, 0);
  CHECK(a.uniform() == RngStream(7, 0).uniform());
  RngStream b(7, 0);
  b.skip(5);
  RngStream c(7, 0);
  for (int i = 0; i < 5; ++i) c.next_u64();
  CHECK(b.next_u64() == c.next_u64());
}

TEST_CASE("distinct streams pass a chi-square independence check") {
  // 16x16 contingency table over 1e5 paired draws
  RngStream s0(7, 0), s1(7, 1);
  const int bins = 16;
  std::vector<int64_t> table(bins * bins, 0);
  const int64_t n = 100000;
  for (int64_t i = 0; i < n; ++i) {
    const int a = static_cast<int>(s0.uniform() * bins);
    const int b = static_cast<int>(s1.uniform() * bins);
    table[a * bins + b]++;
  }
  const double expect = static_cast<double>(n) / (bins * bins);
  double chi2 = 0.0;
  for (int64_t c : table) {
    const double d = static_cast<double>(c) - expect;
    chi2 += d * d / expect;
  }
  // df = 255; critical value at p = 0.01 is 310.457
  CHECK(chi2 < 310.457);
}

TEST_CASE("box-muller normals have near-zero mean") {
  RngStream rng(3, 0);
  double sum = 0.0;
  const int64_t n = 100000;
  for (int64_t i = 0; i < n; ++i) sum += rng.normal();
  CHECK(std::abs(sum / n) < 0.02);
}

TEST_CASE("spectral resample identities") {
  RngStream rng(4, 0);
  std::vector<double> x(60);
  for (double& v : x) v = rng.uniform(-1, 1);
  auto same = spectral_resample(x, 60, 60);
  CHECK(wft::max_abs_diff(x, same) < 1e-12);

  // sin(2 pi x) on 60 points -> 64 points, against the analytic values
  std::vector<double> s(60);
  for (int i = 0; i < 60; ++i) s[i] = std::sin(2.0 * M_PI * i / 60.0);
  auto up = spectral_resample(s, 60, 64);
  double err = 0.0;
  for (int i = 0; i < 64; ++i)
    err = std::max(err, std::abs(up[i] - std::sin(2.0 * M_PI * i / 64.0)));
  CHECK(err < 1e-10);

  // band-limited field: down then up is the identity
  std::vector<double> band(64, 0.0);
  for (int i = 0; i < 64; ++i) {
    const double t = static_cast<double>(i) / 64.0;
    band[i] = std::sin(2 * M_PI * t) + 0.3 * std::cos(2 * M_PI * 5 * t) +
              0.1 * std::sin(2 * M_PI * 9 * t);
  }
  auto down = spectral_resample(band, 64, 32);
  auto back = spectral_resample(down, 32, 64);
  CHECK(wft::max_abs_diff(band, back) < 1e-10);
}

TEST_CASE("dataset file round trip is bit-identical") {
  TrajectoryDataset ds;
  ds.grid = {1, {16}, {1.0}};
  ds.samples = 2;
  ds.timesteps = 3;
  ds.dt_stored = 0.125;
  ds.pde = "burgers";
  ds.params_text = "nu=0.1\nbc=dirichlet\n";
  ds.paper_scale = false;
  ds.seed = 99;
  RngStream rng(5, 0);
  ds.payload.resize(2 * 3 * 16);
  for (double& v : ds.payload) v = rng.uniform(-1, 1);

  auto p1 = tmp_path("ds_a.wfds");
  auto p2 = tmp_path("ds_b.wfds");
  write_dataset(p1.string(), ds);
  TrajectoryDataset back = read_dataset(p1.string());
  CHECK(back.pde == ds.pde);
  CHECK(back.grid.extents == ds.grid.extents);
  CHECK(back.samples == ds.samples);
  CHECK(back.timesteps == ds.timesteps);
  CHECK(back.dt_stored == ds.dt_stored);
  CHECK(back.params_text == ds.params_text);
  CHECK(back.seed == ds.seed);
  CHECK(back.payload == ds.payload);
  write_dataset(p2.string(), back);
  CHECK(file_bytes(p1) == file_bytes(p2));
}

TEST_CASE("corrupt dataset files are rejected") {
  auto p = tmp_path("bad.wfds");
  std::ofstream(p) << "not a dataset";
  CHECK_THROWS_AS(read_dataset(p.string()), Error);
  CHECK_THROWS_AS(read_dataset(tmp_path("missing.wfds").string()), Error);
}

TEST_CASE("checkpoint round trip is bit-identical") {
  ParamStore ps;
  RngStream rng(6, 0);
  ps.add("p.w", {3, 4});
  ps.add("p.b", {4});
  ps.add("q.w", {4, 1});
  for (auto& [name, t] : ps.mutable_items())
    for (double& v : t.mutable_data()) v = rng.uniform(-1, 1);
  auto p1 = tmp_path("ck_a.wfck");
  auto p2 = tmp_path("ck_b.wfck");
  write_checkpoint(p1.string(), "model = waveformer\nk = 4\n", ps);
  Checkpoint ck = read_checkpoint(p1.string());
  CHECK(ck.config_text == "model = waveformer\nk = 4\n");
  REQUIRE(ck.params.items().size() == 3);
  CHECK(ck.params.at("p.w").shape() == Shape{3, 4});
  CHECK(ck.params.at("p.w").data()[5] == ps.at("p.w").data()[5]);
  write_checkpoint(p2.string(), ck.config_text, ck.params);
  CHECK(file_bytes(p1) == file_bytes(p2));
}

TEST_CASE("config parsing: presets, overrides, duplicates, rejects") {
  RunConfig cfg = parse_config_text("preset = burgers\n", ModelKind::Waveformer);
  CHECK(cfg.model.d_v == 80);
  CHECK(cfg.model.q_hidden == 128);
  CHECK(cfg.model.levels == 3);
  CHECK(cfg.model.wavelet == "db6");
  CHECK(cfg.model.n_enc == 1);
  CHECK(cfg.model.n_dec == 2);
  CHECK(cfg.train.batch == 5);

  RunConfig ks = parse_config_text("preset = ks\n", ModelKind::Waveformer);
  CHECK(ks.model.wavelet == "db4");
  CHECK(ks.train.batch == 2);

  RunConfig tf = parse_config_text("preset = burgers\n", ModelKind::Transformer);
  CHECK(tf.model.d_v == 32);

  RunConfig wno = parse_config_text("preset = allen-cahn\n", ModelKind::Wno);
  CHECK(wno.model.levels == 3);
  CHECK(wno.model.wno_layers == 4);

  CHECK_THROWS_AS(parse_config_text("levels = 0\npreset = burgers\n", ModelKind::Waveformer),
                  Error);
  CHECK_THROWS_AS(parse_config_text("nonsense_key = 3\n", ModelKind::Waveformer), Error);

  // duplicate: last wins
  RunConfig dup =
      parse_config_text("preset = burgers\nd_v = 16\nd_v = 24\n", ModelKind::Waveformer);
  CHECK(dup.model.d_v == 24);

  // comments and blank lines
  RunConfig com = parse_config_text("# comment\n\npreset = burgers # trailing\n",
                                    ModelKind::Waveformer);
  CHECK(com.model.d_v == 80);

  // optional knobs
  RunConfig act = parse_config_text("preset = burgers\nactivation = relu\nloss = mse\n",
                                    ModelKind::Waveformer);
  CHECK(act.model.activation == Activation::Relu);
  CHECK(act.train.loss == "mse");
  CHECK_THROWS_AS(parse_config_text("loss = rmse\npreset = burgers\n",
                                    ModelKind::Waveformer),
                  Error);
}

TEST_CASE("config text embeds and restores the full run configuration") {
  RunConfig cfg = preset_config("burgers", ModelKind::Waveformer);
  cfg.model.d_v = 12;
  cfg.model.history = 10;
  cfg.model.train_extents = {64};
  cfg.train.seed = 7;
  cfg.train.epochs = 100;
  const std::string text = config_to_text(cfg, ModelKind::Waveformer);
  RunConfig back = parse_config_text(text, ModelKind::Wno);
  CHECK(back.kind == ModelKind::Waveformer);
  CHECK(back.model.d_v == 12);
  CHECK(back.model.history == 10);
  CHECK(back.model.train_extents == std::vector<int64_t>{64});
  CHECK(back.train.seed == 7);
  CHECK(back.train.epochs == 100);
}

TEST_CASE("lr schedule") {
  TrainConfig t;
  t.lr = 1e-3;
  t.decay_factor = 0.75;
  t.decay_interval = 20;
  CHECK(lr_at_epoch(t, 0) == doctest::Approx(1e-3));
  CHECK(lr_at_epoch(t, 19) == doctest::Approx(1e-3));
  CHECK(lr_at_epoch(t, 20) == doctest::Approx(0.75e-3));
  CHECK(lr_at_epoch(t, 39) == doctest::Approx(0.75e-3));
  CHECK(lr_at_epoch(t, 40) == doctest::Approx(0.5625e-3));
}
