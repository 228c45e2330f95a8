#pragma once

#include <string>

#include "waveformer/model.hpp"

namespace wf {

struct TrainConfig {
  int epochs = 200;
  int batch = 5;
  double lr = 1e-3;
  double weight_decay = 1e-4;
  double decay_factor = 0.75;
  int decay_interval = 20;  // epochs between decays
  uint64_t seed = 0;
  std::string loss = "relative_mse";  // relative_mse | mse
  double val_fraction = 0.1;
  int threads = 1;
  double grad_clip = 1.0;  // global-norm clip; 0 disables

  void validate() const;
};

struct RunConfig {
  ModelKind kind = ModelKind::Waveformer;
  ModelConfig model;
  TrainConfig train;
  std::string preset;  // resolved preset name, informational
};

/// lr(epoch) = lr0 * decay_factor^floor(epoch / decay_interval)
double lr_at_epoch(const TrainConfig& cfg, int epoch);

/// Parses `key = value` lines ('#' comments). Unknown keys are rejected;
/// duplicate keys take the last value with a warning on stderr. A `preset`
/// key loads per-example defaults for the given model kind before the
/// remaining keys override them.
RunConfig parse_config_text(const std::string& text, ModelKind kind);
RunConfig parse_config(const std::string& path, ModelKind kind);

/// defaults for one of the four benchmark presets
RunConfig preset_config(const std::string& preset, ModelKind kind);

std::string config_to_text(const RunConfig& cfg, ModelKind kind);

}  // namespace wf
