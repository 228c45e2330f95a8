#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "waveformer/attention.hpp"
#include "waveformer/tensor.hpp"
#include "waveformer/wavelet.hpp"

namespace wf {

enum class ModelKind { Waveformer, Wno, Transformer };
ModelKind model_kind_from_string(const std::string& s);
const char* model_kind_name(ModelKind k);

struct ModelConfig {
  int dim = 1;             // spatial dimension (1 or 2)
  int history = 10;        // k, steps fed to the model
  int d_v = 80;            // lift width
  int d_model = 0;         // token width; 0 means d_v
  int q_hidden = 128;      // projection hidden width
  int levels = 3;          // wavelet decomposition levels p
  std::string wavelet = "db6";
  int n_enc = 1;
  int n_dec = 2;
  int n_heads = 2;
  int stride = 1;          // physical-branch token stride
  int wno_layers = 3;      // wavelet integral layers of the WNO baseline
  Activation activation = Activation::Gelu;
  // Grid the model was initialized against. Only the WNO baseline's kernel
  // weights depend on it; the waveformer evaluates at any valid resolution.
  std::vector<int64_t> train_extents;

  int token_width() const { return d_model > 0 ? d_model : d_v; }
  void validate() const;
};

/// Named trainable tensors. Order is fixed at construction and is the
/// checkpoint serialization order.
class ParamStore {
 public:
  Tensor& add(const std::string& name, Shape shape);
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  bool has(const std::string& name) const;

  const std::vector<std::pair<std::string, Tensor>>& items() const { return items_; }
  std::vector<std::pair<std::string, Tensor>>& mutable_items() { return items_; }
  std::vector<Tensor> tensors() const;
  int64_t total_params() const;

  ParamStore clone() const;
  void set_requires_grad(bool b);
  void zero_grads();

 private:
  std::vector<std::pair<std::string, Tensor>> items_;
  std::unordered_map<std::string, size_t> index_;
};

/// Encoder/decoder history slices: dec is enc shifted forward one step, so
/// dec[t] == enc[t+1] for t < k-1. Fields are [k, n] (1D) or [k, n1, n2].
struct StreamPair {
  Tensor enc;
  Tensor dec;
  StreamPair(Tensor enc_fields, Tensor dec_fields);
};

/// Builds the StreamPair from a [k+1, n...] history block.
StreamPair make_stream_pair(const Tensor& history);

/// Deterministic initialization: weights uniform in +-1/sqrt(fan_in), biases
/// zero, layer-norm gains one, attention output projections and branch
/// output embeddings zero (the initial map is the identity through the
/// residual paths).
ParamStore init_params(const ModelConfig& cfg, ModelKind kind, uint64_t seed);

/// Pointwise lift: per-point feature vector (k history values + normalized
/// grid coordinates) -> d_v channels. Output [n..., d_v].
Tensor lift_p(const Tensor& stream_fields, const ModelConfig& cfg,
              const ParamStore& params);

Tensor wavelet_branch(const Tensor& v_enc, const Tensor& v_dec,
                      const ParamStore& params, const ModelConfig& cfg);
Tensor physical_branch(const Tensor& v_enc, const Tensor& v_dec,
                       const ParamStore& params, const ModelConfig& cfg);

Tensor waveformer_forward(const StreamPair& window, const ParamStore& params,
                          const ModelConfig& cfg);
Tensor wno_baseline_forward(const StreamPair& window, const ParamStore& params,
                            const ModelConfig& cfg);
Tensor transformer_baseline_forward(const StreamPair& window,
                                    const ParamStore& params,
                                    const ModelConfig& cfg);

Tensor model_forward(ModelKind kind, const StreamPair& window,
                     const ParamStore& params, const ModelConfig& cfg);

/// Waveformer with either branch disabled (its summand replaced by zero).
Tensor waveformer_forward_masked(const StreamPair& window, const ParamStore& params,
                                 const ModelConfig& cfg, bool use_wavelet,
                                 bool use_physical);

}  // namespace wf
