#pragma once

#include "waveformer/tensor.hpp"

namespace wf {

enum class Activation { Gelu, Relu };
Tensor apply_activation(const Tensor& x, Activation act);
Activation activation_from_string(const std::string& s);
const char* activation_name(Activation act);

/// Weights of one scaled-dot-product attention map. d is split into n_heads
/// equal slices; each head is scaled by 1/sqrt(d/n_heads).
struct AttentionParams {
  Tensor wq, wk, wv, wo;  // all d x d
  int n_heads = 1;
};

/// Queries from y_q, keys and values from y_kv (self-attention when they are
/// the same tensor). Rows of each head's score matrix sum to 1.
Tensor scaled_dot_attention(const Tensor& y_q, const Tensor& y_kv,
                            const AttentionParams& p);

struct FeedForward {
  Tensor w1, b1, w2, b2;  // d -> d_ff -> d
  Activation act = Activation::Gelu;
};

struct LayerNormParams {
  Tensor gamma, beta;
};

/// Pre-norm residual blocks: x + Attn(LN(x)), then x + FFN(LN(x)).
struct EncoderBlock {
  LayerNormParams ln1, ln2;
  AttentionParams self_attn;
  FeedForward ffn;
};

/// Self-attention, cross-attention against encoder memory, then FFN.
struct DecoderBlock {
  LayerNormParams ln1, ln2, ln3;
  AttentionParams self_attn, cross_attn;
  FeedForward ffn;
};

Tensor encoder_forward(const Tensor& tokens, const EncoderBlock& block);
Tensor decoder_forward(const Tensor& tokens, const Tensor& memory,
                       const DecoderBlock& block);

/// Standard sinusoid table: [n, 2j] = sin(n / 10000^(2j/d)),
/// [n, 2j+1] = cos(n / 10000^(2j/d)). d must be even.
Tensor positional_encoding(int64_t n, int64_t d);

}  // namespace wf
