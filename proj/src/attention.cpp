#include "waveformer/attention.hpp"

#include <cmath>

namespace wf {

Tensor apply_activation(const Tensor& x, Activation act) {
  switch (act) {
    case Activation::Gelu: return gelu(x);
    case Activation::Relu: return relu(x);
  }
  raise(errc::bad_value, "unknown activation");
}

Activation activation_from_string(const std::string& s) {
  if (s == "gelu") return Activation::Gelu;
  if (s == "relu") return Activation::Relu;
  raise(errc::bad_value, "unknown activation '" + s + "'");
}

const char* activation_name(Activation act) {
  return act == Activation::Gelu ? "gelu" : "relu";
}

Tensor scaled_dot_attention(const Tensor& y_q, const Tensor& y_kv,
                            const AttentionParams& p) {
  if (y_q.rank() != 2 || y_kv.rank() != 2)
    raise(errc::shape_mismatch, "attention expects rank-2 token matrices");
  const int64_t d = y_q.extent(-1);
  if (y_kv.extent(-1) != d || p.wq.extent(0) != d)
    raise(errc::shape_mismatch, "attention width mismatch");
  if (p.n_heads < 1 || d % p.n_heads != 0)
    raise(errc::shape_mismatch, "d must be divisible by n_heads");
  const int64_t dh = d / p.n_heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Tensor q = matmul(y_q, p.wq);
  Tensor k = matmul(y_kv, p.wk);
  Tensor v = matmul(y_kv, p.wv);

  std::vector<Tensor> head_out;
  head_out.reserve(p.n_heads);
  for (int h = 0; h < p.n_heads; ++h) {
    Tensor qh = p.n_heads == 1 ? q : slice(q, -1, h * dh, (h + 1) * dh);
    Tensor kh = p.n_heads == 1 ? k : slice(k, -1, h * dh, (h + 1) * dh);
    Tensor vh = p.n_heads == 1 ? v : slice(v, -1, h * dh, (h + 1) * dh);
    Tensor scores = scalar_multiply(matmul(qh, transpose_last2(kh)), scale);
    Tensor weights = softmax_last(scores);
    head_out.push_back(matmul(weights, vh));
  }
  Tensor merged = p.n_heads == 1 ? head_out[0] : concat(head_out, -1);
  return matmul(merged, p.wo);
}

namespace {
Tensor feed_forward(const Tensor& x, const FeedForward& f) {
  return linear(apply_activation(linear(x, f.w1, f.b1), f.act), f.w2, f.b2);
}
}  // namespace

Tensor encoder_forward(const Tensor& tokens, const EncoderBlock& block) {
  check_finite(tokens.data(), "encoder input");
  Tensor n1 = layer_norm_last(tokens, block.ln1.gamma, block.ln1.beta);
  Tensor x = add(tokens, scaled_dot_attention(n1, n1, block.self_attn));
  return add(x, feed_forward(layer_norm_last(x, block.ln2.gamma, block.ln2.beta),
                             block.ffn));
}

Tensor decoder_forward(const Tensor& tokens, const Tensor& memory,
                       const DecoderBlock& block) {
  if (tokens.extent(-1) != memory.extent(-1))
    raise(errc::shape_mismatch, "decoder token/memory width mismatch");
  Tensor n1 = layer_norm_last(tokens, block.ln1.gamma, block.ln1.beta);
  Tensor x = add(tokens, scaled_dot_attention(n1, n1, block.self_attn));
  Tensor n2 = layer_norm_last(x, block.ln2.gamma, block.ln2.beta);
  x = add(x, scaled_dot_attention(n2, memory, block.cross_attn));
  return add(x, feed_forward(layer_norm_last(x, block.ln3.gamma, block.ln3.beta),
                             block.ffn));
}

Tensor positional_encoding(int64_t n, int64_t d) {
  if (d % 2 != 0) raise(errc::odd_width, "positional encoding width must be even");
  Tensor out = Tensor::zeros({n, d});
  double* p = out.mutable_data().data();
  for (int64_t pos = 0; pos < n; ++pos) {
    for (int64_t j = 0; j < d / 2; ++j) {
      const double freq =
          std::pow(10000.0, -2.0 * static_cast<double>(j) / static_cast<double>(d));
      const double a = static_cast<double>(pos) * freq;
      p[pos * d + 2 * j] = std::sin(a);
      p[pos * d + 2 * j + 1] = std::cos(a);
    }
  }
  return out;
}

}  // namespace wf
