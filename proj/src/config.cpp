#include "waveformer/config.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

namespace wf {

void TrainConfig::validate() const {
  if (epochs < 1) raise(errc::bad_value, "epochs must be >= 1");
  if (batch < 1) raise(errc::bad_value, "batch must be >= 1");
  if (!(lr > 0.0)) raise(errc::bad_value, "lr must be positive");
  if (!(decay_factor > 0.0) || decay_factor > 1.0)
    raise(errc::bad_value, "decay_factor must be in (0, 1]");
  if (decay_interval < 1) raise(errc::bad_value, "decay_interval must be >= 1");
  if (weight_decay < 0.0) raise(errc::bad_value, "weight_decay must be >= 0");
  if (val_fraction < 0.0 || val_fraction > 0.9)
    raise(errc::bad_value, "val_fraction must be in [0, 0.9]");
  if (threads < 1) raise(errc::bad_value, "threads must be >= 1");
  if (grad_clip < 0.0) raise(errc::bad_value, "grad_clip must be >= 0");
  if (loss != "relative_mse" && loss != "mse")
    raise(errc::bad_value, "loss must be relative_mse or mse");
}

double lr_at_epoch(const TrainConfig& cfg, int epoch) {
  return cfg.lr * std::pow(cfg.decay_factor, epoch / cfg.decay_interval);
}

namespace {

struct PresetRow {
  int dim;
  int k;
  int batch;
  int d_v;
  int q_hidden;
  int levels;
  const char* wavelet;
  int wno_layers;
  int stride;
};

// Benchmark rows: burgers, ks, allen-cahn, navier-stokes.
PresetRow preset_row(const std::string& preset, ModelKind kind) {
  const bool wf_kind = kind == ModelKind::Waveformer;
  const bool tf = kind == ModelKind::Transformer;
  if (preset == "burgers")
    return {1, 51, 5, tf ? 32 : 80, 128, 3, wf_kind ? "db6" : "db6", 3, 1};
  if (preset == "ks")
    return {1, 51, 2, tf ? 32 : 80, 128, 3, wf_kind ? "db4" : "db6", 3, 1};
  if (preset == "allen-cahn")
    return {2, 10, 5, tf ? 32 : 40, 128, kind == ModelKind::Wno ? 3 : 4, "db4", 4, 4};
  if (preset == "navier-stokes")
    return {2, 14, 10, tf ? 40 : 40, 128, kind == ModelKind::Wno ? 3 : 4, "db4", 4, 4};
  raise(errc::bad_value, "unknown preset '" + preset + "'");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

int to_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const long long r = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return static_cast<int>(r);
  } catch (const std::exception&) {
    raise(errc::bad_value, "key '" + key + "': bad integer '" + v + "'");
  }
}

double to_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const double r = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    raise(errc::bad_value, "key '" + key + "': bad number '" + v + "'");
  }
}

uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const unsigned long long r = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    raise(errc::bad_value, "key '" + key + "': bad unsigned '" + v + "'");
  }
}

std::vector<int64_t> to_extents(const std::string& key, const std::string& v) {
  std::vector<int64_t> out;
  std::istringstream is(v);
  std::string item;
  while (std::getline(is, item, ',')) out.push_back(to_int(key, trim(item)));
  if (out.empty() || out.size() > 2)
    raise(errc::bad_value, "key '" + key + "': expected 1 or 2 extents");
  return out;
}

}  // namespace

RunConfig preset_config(const std::string& preset, ModelKind kind) {
  RunConfig cfg;
  cfg.kind = kind;
  cfg.preset = preset;
  const PresetRow row = preset_row(preset, kind);
  cfg.model.dim = row.dim;
  cfg.model.history = row.k;
  cfg.model.d_v = row.d_v;
  cfg.model.q_hidden = row.q_hidden;
  cfg.model.levels = row.levels;
  cfg.model.wavelet = row.wavelet;
  cfg.model.n_enc = 1;
  cfg.model.n_dec = 2;
  cfg.model.n_heads = 2;
  cfg.model.stride = row.stride;
  cfg.model.wno_layers = row.wno_layers;
  cfg.train.batch = row.batch;
  cfg.train.epochs = 200;
  cfg.train.lr = 1e-3;
  cfg.train.weight_decay = 1e-4;
  cfg.train.decay_factor = 0.75;
  cfg.train.decay_interval = 20;
  return cfg;
}

RunConfig parse_config_text(const std::string& text, ModelKind kind) {
  // collect key/value pairs, warn on duplicates (last wins)
  std::vector<std::pair<std::string, std::string>> kv;
  std::set<std::string> seen;
  std::istringstream is(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(is, raw)) {
    ++lineno;
    std::string line = raw;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      raise(errc::bad_value, "config line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      raise(errc::bad_value, "config line " + std::to_string(lineno) + ": empty key or value");
    if (!seen.insert(key).second)
      std::cerr << "warning: duplicate config key '" << key << "', last value wins\n";
    kv.emplace_back(std::move(key), std::move(value));
  }

  // resolve the preset (and model kind override) first, then apply the rest
  RunConfig cfg;
  cfg.kind = kind;
  std::string preset;
  for (const auto& [k, v] : kv) {
    if (k == "preset") preset = v;
    if (k == "model") cfg.kind = model_kind_from_string(v);
  }
  if (!preset.empty()) {
    cfg = preset_config(preset, cfg.kind);
  }

  for (const auto& [key, v] : kv) {
    if (key == "preset" || key == "model") continue;
    if (key == "dim") cfg.model.dim = to_int(key, v);
    else if (key == "k") cfg.model.history = to_int(key, v);
    else if (key == "d_v") cfg.model.d_v = to_int(key, v);
    else if (key == "d_model") cfg.model.d_model = to_int(key, v);
    else if (key == "q_hidden") cfg.model.q_hidden = to_int(key, v);
    else if (key == "levels") cfg.model.levels = to_int(key, v);
    else if (key == "wavelet") cfg.model.wavelet = v;
    else if (key == "n_enc") cfg.model.n_enc = to_int(key, v);
    else if (key == "n_dec") cfg.model.n_dec = to_int(key, v);
    else if (key == "n_heads") cfg.model.n_heads = to_int(key, v);
    else if (key == "stride") cfg.model.stride = to_int(key, v);
    else if (key == "wno_layers") cfg.model.wno_layers = to_int(key, v);
    else if (key == "activation") cfg.model.activation = activation_from_string(v);
    else if (key == "train_extents") cfg.model.train_extents = to_extents(key, v);
    else if (key == "epochs") cfg.train.epochs = to_int(key, v);
    else if (key == "batch") cfg.train.batch = to_int(key, v);
    else if (key == "lr") cfg.train.lr = to_double(key, v);
    else if (key == "weight_decay") cfg.train.weight_decay = to_double(key, v);
    else if (key == "decay_factor") cfg.train.decay_factor = to_double(key, v);
    else if (key == "decay_interval") cfg.train.decay_interval = to_int(key, v);
    else if (key == "seed") cfg.train.seed = to_u64(key, v);
    else if (key == "loss") cfg.train.loss = v;
    else if (key == "val_fraction") cfg.train.val_fraction = to_double(key, v);
    else if (key == "threads") cfg.train.threads = to_int(key, v);
    else if (key == "grad_clip") cfg.train.grad_clip = to_double(key, v);
    else raise(errc::unknown_key, "unknown config key '" + key + "'");
  }
  cfg.model.validate();
  cfg.train.validate();
  return cfg;
}

RunConfig parse_config(const std::string& path, ModelKind kind) {
  std::ifstream f(path);
  if (!f) raise(errc::io_error, "cannot open config " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str(), kind);
}

std::string config_to_text(const RunConfig& cfg, ModelKind kind) {
  std::ostringstream os;
  os << "model = " << model_kind_name(kind) << "\n";
  os << "dim = " << cfg.model.dim << "\n";
  os << "k = " << cfg.model.history << "\n";
  os << "d_v = " << cfg.model.d_v << "\n";
  os << "d_model = " << cfg.model.d_model << "\n";
  os << "q_hidden = " << cfg.model.q_hidden << "\n";
  os << "levels = " << cfg.model.levels << "\n";
  os << "wavelet = " << cfg.model.wavelet << "\n";
  os << "n_enc = " << cfg.model.n_enc << "\n";
  os << "n_dec = " << cfg.model.n_dec << "\n";
  os << "n_heads = " << cfg.model.n_heads << "\n";
  os << "stride = " << cfg.model.stride << "\n";
  os << "wno_layers = " << cfg.model.wno_layers << "\n";
  os << "activation = " << activation_name(cfg.model.activation) << "\n";
  if (!cfg.model.train_extents.empty()) {
    os << "train_extents = ";
    for (size_t i = 0; i < cfg.model.train_extents.size(); ++i)
      os << (i ? "," : "") << cfg.model.train_extents[i];
    os << "\n";
  }
  os << "epochs = " << cfg.train.epochs << "\n";
  os << "batch = " << cfg.train.batch << "\n";
  os << "lr = " << cfg.train.lr << "\n";
  os << "weight_decay = " << cfg.train.weight_decay << "\n";
  os << "decay_factor = " << cfg.train.decay_factor << "\n";
  os << "decay_interval = " << cfg.train.decay_interval << "\n";
  os << "seed = " << cfg.train.seed << "\n";
  os << "loss = " << cfg.train.loss << "\n";
  os << "val_fraction = " << cfg.train.val_fraction << "\n";
  os << "threads = " << cfg.train.threads << "\n";
  os << "grad_clip = " << cfg.train.grad_clip << "\n";
  return os.str();
}

}  // namespace wf
