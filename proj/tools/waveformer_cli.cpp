// Command-line front end. Talks to the library exclusively through the C API
// in waveformer.h.
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "waveformer.h"

namespace {

int finish(wf_status st) {
  if (st != WF_OK) std::fprintf(stderr, "error: %s\n", wf_last_error());
  return static_cast<int>(st);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"waveformer: wavelet-transformer neural operator toolkit"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  // generate
  auto* gen = app.add_subcommand("generate", "solve a PDE ensemble and write a dataset");
  std::string gen_pde, gen_preset = "desk", gen_out, gen_bc, gen_grid;
  int64_t gen_samples = 0, gen_steps = 0;
  uint64_t gen_seed = 0;
  gen->add_option("--pde", gen_pde, "burgers | ks | allen-cahn | navier-stokes")->required();
  gen->add_option("--samples", gen_samples, "number of trajectories")->required();
  gen->add_option("--seed", gen_seed, "RNG seed")->required();
  gen->add_option("--preset", gen_preset, "desk | paper (default desk)");
  gen->add_option("--out", gen_out, "output dataset file")->required();
  gen->add_option("--bc", gen_bc, "burgers boundary condition: dirichlet | periodic");
  gen->add_option("--grid", gen_grid, "override grid extents, comma separated");
  gen->add_option("--steps", gen_steps, "override stored frames per trajectory");

  // train
  auto* train = app.add_subcommand("train", "train a model on a dataset");
  std::string tr_model, tr_data, tr_config, tr_out, tr_metrics;
  train->add_option("--model", tr_model, "waveformer | wno | transformer")->required();
  train->add_option("--data", tr_data, "training dataset file")->required();
  train->add_option("--config", tr_config, "key = value config file")->required();
  train->add_option("--out", tr_out, "checkpoint output path")->required();
  train->add_option("--metrics", tr_metrics, "per-epoch metrics CSV");

  // predict
  auto* pred = app.add_subcommand("predict", "autoregressive rollout from a checkpoint");
  std::string pr_ckpt, pr_data, pr_out;
  int64_t pr_steps = 0;
  pred->add_option("--model-file", pr_ckpt, "checkpoint file")->required();
  pred->add_option("--data", pr_data, "dataset supplying the seed history")->required();
  pred->add_option("--steps", pr_steps, "prediction steps")->required();
  pred->add_option("--out", pr_out, "predictions dataset file")->required();

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "per-step error of predictions vs truth");
  std::string ev_pred, ev_truth, ev_csv;
  int64_t ev_boundary = 0;
  eval->add_option("--pred", ev_pred, "predictions dataset")->required();
  eval->add_option("--truth", ev_truth, "ground-truth dataset")->required();
  eval->add_option("--boundary", ev_boundary,
                   "first extrapolated frame index (trained/extrapolated split)")
      ->required();
  eval->add_option("--csv", ev_csv, "output CSV")->required();

  // compare
  auto* cmp = app.add_subcommand("compare", "region comparison across models");
  std::vector<std::string> cmp_csvs;
  std::string cmp_out;
  cmp->add_option("--csv", cmp_csvs, "evaluate CSVs, one per model")->required();
  cmp->add_option("--out", cmp_out, "comparison CSV")->required();

  // selftest
  app.add_subcommand("selftest", "run the built-in invariant suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (gen->parsed()) {
    std::string options;
    if (!gen_bc.empty()) options += "bc=" + gen_bc + "\n";
    if (!gen_grid.empty()) options += "grid=" + gen_grid + "\n";
    if (gen_steps > 0) options += "steps=" + std::to_string(gen_steps) + "\n";
    return finish(wf_generate(gen_pde.c_str(), gen_samples, gen_seed,
                              gen_preset.c_str(), options.empty() ? nullptr : options.c_str(),
                              gen_out.c_str()));
  }
  if (train->parsed()) {
    return finish(wf_train(tr_model.c_str(), tr_data.c_str(), tr_config.c_str(),
                           tr_out.c_str(), tr_metrics.empty() ? nullptr : tr_metrics.c_str()));
  }
  if (pred->parsed()) {
    return finish(wf_predict(pr_ckpt.c_str(), pr_data.c_str(), pr_steps, pr_out.c_str()));
  }
  if (eval->parsed()) {
    return finish(wf_evaluate(ev_pred.c_str(), ev_truth.c_str(), ev_boundary, ev_csv.c_str()));
  }
  if (cmp->parsed()) {
    std::vector<const char*> ptrs;
    for (const auto& s : cmp_csvs) ptrs.push_back(s.c_str());
    return finish(wf_compare(ptrs.data(), static_cast<int64_t>(ptrs.size()), cmp_out.c_str()));
  }
  // selftest
  return finish(wf_selftest());
}
