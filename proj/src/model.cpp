#include "waveformer/model.hpp"

#include <cmath>
#include <cstring>

#include "waveformer/rng.hpp"

namespace wf {

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "waveformer") return ModelKind::Waveformer;
  if (s == "wno") return ModelKind::Wno;
  if (s == "transformer") return ModelKind::Transformer;
  raise(errc::bad_value, "unknown model kind '" + s + "'");
}

const char* model_kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::Waveformer: return "waveformer";
    case ModelKind::Wno: return "wno";
    case ModelKind::Transformer: return "transformer";
  }
  return "?";
}

void ModelConfig::validate() const {
  if (dim != 1 && dim != 2) raise(errc::bad_value, "dim must be 1 or 2");
  if (history < 1) raise(errc::bad_value, "history must be >= 1");
  if (d_v < 1) raise(errc::bad_value, "d_v must be >= 1");
  if (q_hidden < 1) raise(errc::bad_value, "q_hidden must be >= 1");
  if (levels < 1) raise(errc::bad_value, "levels must be >= 1");
  if (n_enc < 1 || n_dec < 1) raise(errc::bad_value, "n_enc and n_dec must be >= 1");
  if (stride < 1) raise(errc::bad_value, "stride must be >= 1");
  if (wno_layers < 1) raise(errc::bad_value, "wno_layers must be >= 1");
  if (n_heads < 1) raise(errc::bad_value, "n_heads must be >= 1");
  if (token_width() % n_heads != 0)
    raise(errc::bad_value, "d_model must be divisible by n_heads");
  if (token_width() % 2 != 0)
    raise(errc::bad_value, "d_model must be even (sinusoidal positions)");
  make_filter(wavelet);  // rejects unknown names
}

// ---- ParamStore ---------------------------------------------------------------

Tensor& ParamStore::add(const std::string& name, Shape shape) {
  if (has(name)) raise(errc::bad_value, "duplicate parameter name " + name);
  index_.emplace(name, items_.size());
  items_.emplace_back(name, Tensor::zeros(std::move(shape), true));
  return items_.back().second;
}

Tensor& ParamStore::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) raise(errc::bad_value, "no parameter named " + name);
  return items_[it->second].second;
}

const Tensor& ParamStore::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) raise(errc::bad_value, "no parameter named " + name);
  return items_[it->second].second;
}

bool ParamStore::has(const std::string& name) const {
  return index_.find(name) != index_.end();
}

std::vector<Tensor> ParamStore::tensors() const {
  std::vector<Tensor> out;
  out.reserve(items_.size());
  for (const auto& [n, t] : items_) out.push_back(t);
  return out;
}

int64_t ParamStore::total_params() const {
  int64_t n = 0;
  for (const auto& [name, t] : items_) n += t.numel();
  return n;
}

ParamStore ParamStore::clone() const {
  ParamStore out;
  out.items_.reserve(items_.size());
  for (const auto& [name, t] : items_) {
    Tensor c = t.clone_detached();
    c.set_requires_grad(t.requires_grad());
    out.index_.emplace(name, out.items_.size());
    out.items_.emplace_back(name, std::move(c));
  }
  return out;
}

void ParamStore::set_requires_grad(bool b) {
  for (auto& [name, t] : items_) t.set_requires_grad(b);
}

void ParamStore::zero_grads() {
  for (auto& [name, t] : items_) t.zero_grad();
}

// ---- StreamPair ----------------------------------------------------------------

StreamPair::StreamPair(Tensor enc_fields, Tensor dec_fields)
    : enc(std::move(enc_fields)), dec(std::move(dec_fields)) {
  if (enc.shape() != dec.shape())
    raise(errc::shape_mismatch, "stream shapes differ");
  if (enc.rank() < 2 || enc.extent(0) < 1)
    raise(errc::shape_mismatch, "streams must be [k, space...] with k >= 1");
  const int64_t k = enc.extent(0);
  const int64_t n = enc.numel() / k;
  const double* pe = enc.data().data();
  const double* pd = dec.data().data();
  for (int64_t t = 0; t + 1 < k; ++t)
    if (std::memcmp(pd + t * n, pe + (t + 1) * n, sizeof(double) * n) != 0)
      raise(errc::shape_mismatch, "decoder stream is not the one-step shift of the encoder stream");
}

StreamPair make_stream_pair(const Tensor& history) {
  if (history.rank() < 2 || history.extent(0) < 2)
    raise(errc::too_short, "history must hold at least 2 steps");
  const int64_t k = history.extent(0) - 1;
  return StreamPair(slice(history, 0, 0, k), slice(history, 0, 1, k + 1));
}

// ---- parameter registration and init --------------------------------------------

namespace {

void add_attention(ParamStore& ps, const std::string& prefix, int d) {
  ps.add(prefix + ".wq", {d, d});
  ps.add(prefix + ".wk", {d, d});
  ps.add(prefix + ".wv", {d, d});
  ps.add(prefix + ".wo", {d, d});
}

void add_ln(ParamStore& ps, const std::string& prefix, int d) {
  ps.add(prefix + ".g", {d});
  ps.add(prefix + ".b", {d});
}

void add_ffn(ParamStore& ps, const std::string& prefix, int d) {
  const int d_ff = 4 * d;
  ps.add(prefix + ".w1", {d, d_ff});
  ps.add(prefix + ".b1", {d_ff});
  ps.add(prefix + ".w2", {d_ff, d});
  ps.add(prefix + ".b2", {d});
}

void add_branch(ParamStore& ps, const std::string& br, const ModelConfig& cfg) {
  const int dm = cfg.token_width();
  ps.add(br + ".embed.w", {cfg.d_v, dm});
  ps.add(br + ".embed.b", {dm});
  ps.add(br + ".unembed.w", {dm, cfg.d_v});
  ps.add(br + ".unembed.b", {cfg.d_v});
  for (int i = 0; i < cfg.n_enc; ++i) {
    const std::string p = br + ".enc" + std::to_string(i);
    add_ln(ps, p + ".ln1", dm);
    add_attention(ps, p + ".attn", dm);
    add_ln(ps, p + ".ln2", dm);
    add_ffn(ps, p + ".ffn", dm);
  }
  for (int i = 0; i < cfg.n_dec; ++i) {
    const std::string p = br + ".dec" + std::to_string(i);
    add_ln(ps, p + ".ln1", dm);
    add_attention(ps, p + ".self", dm);
    add_ln(ps, p + ".ln2", dm);
    add_attention(ps, p + ".cross", dm);
    add_ln(ps, p + ".ln3", dm);
    add_ffn(ps, p + ".ffn", dm);
  }
}

int64_t wno_mode_count(const ModelConfig& cfg) {
  if (cfg.train_extents.empty())
    raise(errc::bad_value, "WNO model needs the training grid extents");
  int64_t m = 1;
  for (int64_t e : cfg.train_extents) m *= e >> cfg.levels;
  return m;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

void fill_params(ParamStore& ps, uint64_t seed) {
  for (auto& [name, t] : ps.mutable_items()) {
    double* p = t.mutable_data().data();
    const int64_t n = t.numel();
    if (ends_with(name, ".g")) {
      std::fill(p, p + n, 1.0);
      continue;
    }
    const bool is_bias = t.rank() < 2;
    if (is_bias) continue;  // zeros
    if (ends_with(name, ".wo") || ends_with(name, "unembed.w")) continue;  // zeros
    const int64_t fan_in = t.extent(-2);
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    RngStream rng(seed, fnv1a64(name));
    for (int64_t i = 0; i < n; ++i) p[i] = rng.uniform(-bound, bound);
  }
}

}  // namespace

ParamStore init_params(const ModelConfig& cfg, ModelKind kind, uint64_t seed) {
  cfg.validate();
  ParamStore ps;
  const int feat = cfg.history + cfg.dim;
  ps.add("p.w", {feat, cfg.d_v});
  ps.add("p.b", {cfg.d_v});
  switch (kind) {
    case ModelKind::Waveformer:
      add_branch(ps, "wb", cfg);
      add_branch(ps, "pb", cfg);
      break;
    case ModelKind::Transformer:
      add_branch(ps, "pb", cfg);
      break;
    case ModelKind::Wno: {
      const int64_t m = wno_mode_count(cfg);
      for (int i = 0; i < cfg.wno_layers; ++i) {
        const std::string p = "wno" + std::to_string(i);
        ps.add(p + ".r", {m, cfg.d_v, cfg.d_v});
        ps.add(p + ".lin.w", {cfg.d_v, cfg.d_v});
        ps.add(p + ".lin.b", {cfg.d_v});
      }
      break;
    }
  }
  ps.add("q.w1", {cfg.d_v, cfg.q_hidden});
  ps.add("q.b1", {cfg.q_hidden});
  ps.add("q.w2", {cfg.q_hidden, 1});
  ps.add("q.b2", {1});
  fill_params(ps, seed);
  return ps;
}

// ---- forward passes --------------------------------------------------------------

namespace {

Tensor grid_coords(const Shape& spatial) {
  if (spatial.size() == 1) {
    const int64_t n = spatial[0];
    std::vector<double> c(n);
    for (int64_t i = 0; i < n; ++i) c[i] = static_cast<double>(i) / static_cast<double>(n);
    return Tensor::from({n, 1}, std::move(c));
  }
  const int64_t n1 = spatial[0], n2 = spatial[1];
  std::vector<double> c(n1 * n2 * 2);
  for (int64_t i = 0; i < n1; ++i)
    for (int64_t j = 0; j < n2; ++j) {
      c[(i * n2 + j) * 2] = static_cast<double>(i) / static_cast<double>(n1);
      c[(i * n2 + j) * 2 + 1] = static_cast<double>(j) / static_cast<double>(n2);
    }
  return Tensor::from({n1, n2, 2}, std::move(c));
}

AttentionParams attn_view(const ParamStore& ps, const std::string& prefix, int n_heads) {
  AttentionParams p;
  p.wq = ps.at(prefix + ".wq");
  p.wk = ps.at(prefix + ".wk");
  p.wv = ps.at(prefix + ".wv");
  p.wo = ps.at(prefix + ".wo");
  p.n_heads = n_heads;
  return p;
}

LayerNormParams ln_view(const ParamStore& ps, const std::string& prefix) {
  return {ps.at(prefix + ".g"), ps.at(prefix + ".b")};
}

FeedForward ffn_view(const ParamStore& ps, const std::string& prefix, Activation act) {
  return {ps.at(prefix + ".w1"), ps.at(prefix + ".b1"), ps.at(prefix + ".w2"),
          ps.at(prefix + ".b2"), act};
}

/// Embed [N, d_v] tokens to d_model, add positions, run the branch stack and
/// project back; returns the [N, d_v] correction.
Tensor run_branch_transformer(const Tensor& enc_tokens, const Tensor& dec_tokens,
                              const ParamStore& ps, const std::string& br,
                              const ModelConfig& cfg) {
  Tensor mem = linear(enc_tokens, ps.at(br + ".embed.w"), ps.at(br + ".embed.b"));
  mem = add(mem, positional_encoding(mem.extent(0), cfg.token_width()));
  for (int i = 0; i < cfg.n_enc; ++i) {
    const std::string p = br + ".enc" + std::to_string(i);
    EncoderBlock blk{ln_view(ps, p + ".ln1"),
                     ln_view(ps, p + ".ln2"),
                     attn_view(ps, p + ".attn", cfg.n_heads),
                     ffn_view(ps, p + ".ffn", cfg.activation)};
    mem = encoder_forward(mem, blk);
  }
  Tensor tok = linear(dec_tokens, ps.at(br + ".embed.w"), ps.at(br + ".embed.b"));
  tok = add(tok, positional_encoding(tok.extent(0), cfg.token_width()));
  for (int i = 0; i < cfg.n_dec; ++i) {
    const std::string p = br + ".dec" + std::to_string(i);
    DecoderBlock blk{ln_view(ps, p + ".ln1"),
                     ln_view(ps, p + ".ln2"),
                     ln_view(ps, p + ".ln3"),
                     attn_view(ps, p + ".self", cfg.n_heads),
                     attn_view(ps, p + ".cross", cfg.n_heads),
                     ffn_view(ps, p + ".ffn", cfg.activation)};
    tok = decoder_forward(tok, mem, blk);
  }
  return linear(tok, ps.at(br + ".unembed.w"), ps.at(br + ".unembed.b"));
}

Shape spatial_of(const Tensor& lifted, int dim) {
  Shape s(lifted.shape().begin(), lifted.shape().begin() + dim);
  return s;
}

Tensor channels_first(const Tensor& v, int dim) {
  return dim == 1 ? transpose_last2(v) : move_last_axis_front(v);
}

Tensor channels_last(const Tensor& v, int dim) {
  return dim == 1 ? transpose_last2(v) : move_first_axis_back(v);
}

/// act -> Q (d_v -> q_hidden -> 1), flattened to the spatial extents.
Tensor project_output(const Tensor& v_out, const ParamStore& ps,
                      const ModelConfig& cfg) {
  Tensor a = apply_activation(v_out, cfg.activation);
  Tensor h = apply_activation(linear(a, ps.at("q.w1"), ps.at("q.b1")), cfg.activation);
  Tensor o = linear(h, ps.at("q.w2"), ps.at("q.b2"));
  Shape spatial = spatial_of(v_out, cfg.dim);
  return reshape(o, spatial);
}

}  // namespace

Tensor lift_p(const Tensor& stream_fields, const ModelConfig& cfg,
              const ParamStore& params) {
  if (stream_fields.rank() != cfg.dim + 1 || stream_fields.extent(0) != cfg.history)
    raise(errc::shape_mismatch, "stream fields must be [k, space...] with k = " +
                                    std::to_string(cfg.history));
  Tensor per_point = channels_last(stream_fields, cfg.dim);  // [space..., k]
  Shape spatial(per_point.shape().begin(), per_point.shape().end() - 1);
  Tensor feat = concat({per_point, grid_coords(spatial)}, -1);
  return linear(feat, params.at("p.w"), params.at("p.b"));
}

Tensor wavelet_branch(const Tensor& v_enc, const Tensor& v_dec,
                      const ParamStore& params, const ModelConfig& cfg) {
  const WaveletFilter f = make_filter(cfg.wavelet);
  const int dim = cfg.dim;
  Tensor cf_enc = channels_first(v_enc, dim);
  Tensor cf_dec = channels_first(v_dec, dim);
  WaveletCoeffs ce = dim == 1 ? dwt_multilevel(cf_enc, f, cfg.levels)
                              : dwt2_multilevel(cf_enc, f, cfg.levels);
  WaveletCoeffs cd = dim == 1 ? dwt_multilevel(cf_dec, f, cfg.levels)
                              : dwt2_multilevel(cf_dec, f, cfg.levels);
  Tensor a_enc = channels_last(ce.approx(), dim);  // [m..., d_v]
  Tensor a_dec = channels_last(cd.approx(), dim);
  Shape m_spatial = spatial_of(a_dec, dim);
  const int64_t tokens = shape_numel(m_spatial);
  Tensor tok_enc = dim == 1 ? a_enc : reshape(a_enc, {tokens, cfg.d_v});
  Tensor tok_dec = dim == 1 ? a_dec : reshape(a_dec, {tokens, cfg.d_v});
  Tensor corr = run_branch_transformer(tok_enc, tok_dec, params, "wb", cfg);
  Tensor a_new = add(tok_dec, corr);
  if (dim == 2) {
    Shape full = m_spatial;
    full.push_back(cfg.d_v);
    a_new = reshape(a_new, full);
  }
  WaveletCoeffs cd2 = cd.with_approx(channels_first(a_new, dim));
  Tensor out_cf = dim == 1 ? idwt_multilevel(cd2, f) : idwt2_multilevel(cd2, f);
  return channels_last(out_cf, dim);
}

Tensor physical_branch(const Tensor& v_enc, const Tensor& v_dec,
                       const ParamStore& params, const ModelConfig& cfg) {
  const int dim = cfg.dim;
  const int64_t s = cfg.stride;
  Tensor se = downsample_stride(v_enc, s, dim);
  Tensor sd = downsample_stride(v_dec, s, dim);
  Shape sub_spatial = spatial_of(sd, dim);
  const int64_t tokens = shape_numel(sub_spatial);
  Tensor tok_enc = dim == 1 ? se : reshape(se, {tokens, cfg.d_v});
  Tensor tok_dec = dim == 1 ? sd : reshape(sd, {tokens, cfg.d_v});
  Tensor corr = run_branch_transformer(tok_enc, tok_dec, params, "pb", cfg);
  if (dim == 2) {
    Shape sub = sub_spatial;
    sub.push_back(cfg.d_v);
    corr = reshape(corr, sub);
  }
  Shape full_spatial = spatial_of(v_dec, dim);
  corr = upsample_nn(corr, s, dim,
                     std::vector<int64_t>(full_spatial.begin(), full_spatial.end()));
  return add(v_dec, corr);
}

Tensor waveformer_forward_masked(const StreamPair& window, const ParamStore& params,
                                 const ModelConfig& cfg, bool use_wavelet,
                                 bool use_physical) {
  if (!use_wavelet && !use_physical)
    raise(errc::bad_value, "at least one branch must be active");
  Tensor v_enc = lift_p(window.enc, cfg, params);
  Tensor v_dec = lift_p(window.dec, cfg, params);
  Tensor sum;
  if (use_wavelet && use_physical) {
    sum = add(wavelet_branch(v_enc, v_dec, params, cfg),
              physical_branch(v_enc, v_dec, params, cfg));
  } else if (use_wavelet) {
    sum = wavelet_branch(v_enc, v_dec, params, cfg);
  } else {
    sum = physical_branch(v_enc, v_dec, params, cfg);
  }
  return project_output(sum, params, cfg);
}

Tensor waveformer_forward(const StreamPair& window, const ParamStore& params,
                          const ModelConfig& cfg) {
  return waveformer_forward_masked(window, params, cfg, true, true);
}

Tensor wno_baseline_forward(const StreamPair& window, const ParamStore& params,
                            const ModelConfig& cfg) {
  const WaveletFilter f = make_filter(cfg.wavelet);
  const int dim = cfg.dim;
  Tensor v = lift_p(window.dec, cfg, params);
  for (int layer = 0; layer < cfg.wno_layers; ++layer) {
    const std::string p = "wno" + std::to_string(layer);
    Tensor cf = channels_first(v, dim);
    WaveletCoeffs c = dim == 1 ? dwt_multilevel(cf, f, cfg.levels)
                               : dwt2_multilevel(cf, f, cfg.levels);
    Tensor a = channels_last(c.approx(), dim);
    Shape m_spatial = spatial_of(a, dim);
    const int64_t modes = shape_numel(m_spatial);
    const Tensor& r = params.at(p + ".r");
    if (r.extent(0) != modes)
      raise(errc::shape_mismatch,
            "WNO kernel holds " + std::to_string(r.extent(0)) +
                " modes but the input decomposes to " + std::to_string(modes));
    Tensor a_tok = reshape(a, {modes, 1, cfg.d_v});
    Tensor mixed = reshape(matmul(a_tok, r), {modes, cfg.d_v});
    if (dim == 2) {
      Shape full = m_spatial;
      full.push_back(cfg.d_v);
      mixed = reshape(mixed, full);
    }
    // kernel path keeps only the mixed approximation band
    WaveletCoeffs zero;
    zero.packed = Tensor::zeros(cf.shape());
    zero.levels = cfg.levels;
    zero.spatial_dims = dim;
    WaveletCoeffs kc = zero.with_approx(channels_first(mixed, dim));
    Tensor kernel_path =
        channels_last(dim == 1 ? idwt_multilevel(kc, f) : idwt2_multilevel(kc, f), dim);
    Tensor lin = linear(v, params.at(p + ".lin.w"), params.at(p + ".lin.b"));
    v = apply_activation(add(kernel_path, lin), cfg.activation);
  }
  Tensor h = apply_activation(linear(v, params.at("q.w1"), params.at("q.b1")),
                              cfg.activation);
  Tensor o = linear(h, params.at("q.w2"), params.at("q.b2"));
  return reshape(o, spatial_of(v, dim));
}

Tensor transformer_baseline_forward(const StreamPair& window,
                                    const ParamStore& params,
                                    const ModelConfig& cfg) {
  Tensor v_enc = lift_p(window.enc, cfg, params);
  Tensor v_dec = lift_p(window.dec, cfg, params);
  return project_output(physical_branch(v_enc, v_dec, params, cfg), params, cfg);
}

Tensor model_forward(ModelKind kind, const StreamPair& window,
                     const ParamStore& params, const ModelConfig& cfg) {
  switch (kind) {
    case ModelKind::Waveformer: return waveformer_forward(window, params, cfg);
    case ModelKind::Wno: return wno_baseline_forward(window, params, cfg);
    case ModelKind::Transformer:
      return transformer_baseline_forward(window, params, cfg);
  }
  raise(errc::bad_value, "unknown model kind");
}

}  // namespace wf
