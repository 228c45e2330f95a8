#include "waveformer.h"

#include <cstring>
#include <string>

#include "waveformer/config.hpp"
#include "waveformer/io.hpp"
#include "waveformer/rollout.hpp"
#include "waveformer/selftest.hpp"
#include "waveformer/solvers.hpp"
#include "waveformer/training.hpp"

namespace {

thread_local std::string g_last_error;

wf_status to_status(const wf::Error& e) {
  g_last_error = std::string(wf::errc_name(e.code())) + ": " + e.what();
  return static_cast<wf_status>(wf::exit_class(e.code()));
}

template <typename Fn>
wf_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return WF_OK;
  } catch (const wf::Error& e) {
    return to_status(e);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return WF_ERR_NUMERIC;
  }
}

wf::GenConfig apply_gen_options(wf::GenConfig cfg, const char* options) {
  if (!options) return cfg;
  for (const auto& [key, value] : wf::params_from_text(options)) {
    if (key == "bc") {
      if (value == "periodic")
        cfg.burgers.bc = wf::BurgersBc::Periodic;
      else if (value == "dirichlet")
        cfg.burgers.bc = wf::BurgersBc::Dirichlet;
      else
        wf::raise(wf::errc::bad_value, "bc must be dirichlet or periodic");
    } else if (key == "grid") {
      std::vector<int64_t> extents;
      size_t pos = 0;
      std::string v = value;
      while (!v.empty()) {
        const size_t comma = v.find(',');
        extents.push_back(std::stoll(v.substr(0, comma), &pos));
        v = comma == std::string::npos ? "" : v.substr(comma + 1);
      }
      if (extents.size() != cfg.grid.extents.size())
        wf::raise(wf::errc::bad_value, "grid override rank mismatch");
      cfg.grid.extents = extents;
      cfg.resample_to = 0;  // explicit grids are used as-is
    } else if (key == "steps") {
      const int64_t frames = std::stoll(value);
      cfg.burgers.frames = frames;
      cfg.ks.frames = frames;
      cfg.allen_cahn.frames = frames;
      cfg.navier_stokes.frames = frames;
    } else {
      wf::raise(wf::errc::unknown_key, "unknown generate option '" + key + "'");
    }
  }
  return cfg;
}

}  // namespace

extern "C" {

const char* wf_version(void) { return "waveformer 1.0.0"; }

const char* wf_last_error(void) { return g_last_error.c_str(); }

wf_status wf_generate(const char* pde, int64_t samples, uint64_t seed,
                      const char* preset, const char* options,
                      const char* out_path) {
  return guarded([&]() {
    if (!pde || !preset || !out_path)
      wf::raise(wf::errc::usage_error, "generate: missing argument");
    wf::GenConfig cfg = apply_gen_options(wf::gen_preset(pde, preset), options);
    wf::TrajectoryDataset ds = wf::build_dataset(cfg, samples, seed);
    wf::write_dataset(out_path, ds);
  });
}

wf_status wf_train(const char* model_kind, const char* data_path,
                   const char* config_path, const char* ckpt_path,
                   const char* metrics_csv) {
  return guarded([&]() {
    if (!model_kind || !data_path || !config_path || !ckpt_path)
      wf::raise(wf::errc::usage_error, "train: missing argument");
    const wf::ModelKind kind = wf::model_kind_from_string(model_kind);
    wf::RunConfig run = wf::parse_config(config_path, kind);
    run.kind = kind;  // the explicit flag wins over any file default
    wf::TrajectoryDataset ds = wf::read_dataset(data_path);
    wf::train_model(run, ds, ckpt_path, metrics_csv ? metrics_csv : "");
  });
}

wf_status wf_predict(const char* ckpt_path, const char* data_path, int64_t steps,
                     const char* out_path) {
  return guarded([&]() {
    if (!ckpt_path || !data_path || !out_path)
      wf::raise(wf::errc::usage_error, "predict: missing argument");
    wf::Checkpoint ck = wf::read_checkpoint(ckpt_path);
    wf::RunConfig run = wf::parse_config_text(ck.config_text, wf::ModelKind::Waveformer);
    wf::TrajectoryDataset truth = wf::read_dataset(data_path);
    wf::TrajectoryDataset pred =
        wf::rollout_dataset(run.kind, ck.params, run.model, truth, steps,
                            wf::model_kind_name(run.kind));
    wf::write_dataset(out_path, pred);
  });
}

wf_status wf_evaluate(const char* pred_path, const char* truth_path,
                      int64_t boundary, const char* csv_path) {
  return guarded([&]() {
    if (!pred_path || !truth_path || !csv_path)
      wf::raise(wf::errc::usage_error, "evaluate: missing argument");
    wf::TrajectoryDataset pred = wf::read_dataset(pred_path);
    wf::TrajectoryDataset truth = wf::read_dataset(truth_path);
    wf::RegionReport rep = wf::evaluate(pred, truth, boundary);
    wf::write_report_csv(csv_path, rep);
  });
}

wf_status wf_compare(const char* const* csv_paths, int64_t count,
                     const char* out_path) {
  return guarded([&]() {
    if (!csv_paths || count < 1 || !out_path)
      wf::raise(wf::errc::usage_error, "compare: need at least one CSV");
    std::vector<wf::RegionReport> reports;
    for (int64_t i = 0; i < count; ++i)
      reports.push_back(wf::read_report_csv(csv_paths[i]));
    wf::write_comparison_csv(out_path, wf::compare_models(reports));
  });
}

wf_status wf_selftest(void) {
  return guarded([]() { wf::run_selftest(); });
}

// ---- handles -------------------------------------------------------------------

struct wf_dataset {
  wf::TrajectoryDataset ds;
};

wf_status wf_dataset_open(const char* path, wf_dataset** out) {
  return guarded([&]() {
    if (!path || !out) wf::raise(wf::errc::usage_error, "dataset_open: missing argument");
    *out = new wf_dataset{wf::read_dataset(path)};
  });
}

void wf_dataset_close(wf_dataset* ds) { delete ds; }

int64_t wf_dataset_samples(const wf_dataset* ds) { return ds->ds.samples; }
int64_t wf_dataset_timesteps(const wf_dataset* ds) { return ds->ds.timesteps; }
int64_t wf_dataset_dim(const wf_dataset* ds) { return ds->ds.grid.dim; }
int64_t wf_dataset_extent(const wf_dataset* ds, int axis) {
  if (axis < 0 || axis >= ds->ds.grid.dim) return -1;
  return ds->ds.grid.extents[axis];
}
double wf_dataset_dt(const wf_dataset* ds) { return ds->ds.dt_stored; }
const char* wf_dataset_pde(const wf_dataset* ds) { return ds->ds.pde.c_str(); }

wf_status wf_dataset_frame(const wf_dataset* ds, int64_t sample, int64_t t,
                           double* buf, int64_t buflen) {
  return guarded([&]() {
    if (sample < 0 || sample >= ds->ds.samples || t < 0 || t >= ds->ds.timesteps)
      wf::raise(wf::errc::usage_error, "dataset_frame: index out of range");
    const int64_t n = ds->ds.grid.points();
    if (buflen < n) wf::raise(wf::errc::usage_error, "dataset_frame: buffer too small");
    auto f = ds->ds.frame(sample, t);
    std::memcpy(buf, f.data(), sizeof(double) * n);
  });
}

struct wf_model {
  wf::RunConfig run;
  wf::ParamStore params;
  std::string kind_name;
};

wf_status wf_model_load(const char* ckpt_path, wf_model** out) {
  return guarded([&]() {
    if (!ckpt_path || !out) wf::raise(wf::errc::usage_error, "model_load: missing argument");
    wf::Checkpoint ck = wf::read_checkpoint(ckpt_path);
    auto* m = new wf_model;
    m->run = wf::parse_config_text(ck.config_text, wf::ModelKind::Waveformer);
    m->params = std::move(ck.params);
    m->kind_name = wf::model_kind_name(m->run.kind);
    *out = m;
  });
}

void wf_model_close(wf_model* m) { delete m; }

const char* wf_model_kind(const wf_model* m) { return m->kind_name.c_str(); }
int64_t wf_model_param_count(const wf_model* m) { return m->params.total_params(); }
int64_t wf_model_history(const wf_model* m) { return m->run.model.history; }

wf_status wf_model_rollout(const wf_model* m, const double* history,
                           const int64_t* extents, int64_t dim, int64_t steps,
                           double* out) {
  return guarded([&]() {
    if (!history || !extents || !out || dim < 1 || dim > 2)
      wf::raise(wf::errc::usage_error, "model_rollout: bad arguments");
    std::vector<int64_t> ext(extents, extents + dim);
    int64_t points = 1;
    for (int64_t e : ext) points *= e;
    const int64_t k = m->run.model.history;
    std::span<const double> hist(history, static_cast<size_t>((k + 1) * points));
    std::vector<double> pred =
        wf::rollout(m->run.kind, m->params, m->run.model, hist, ext, steps);
    std::memcpy(out, pred.data(), sizeof(double) * pred.size());
  });
}

}  // extern "C"
