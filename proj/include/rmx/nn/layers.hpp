#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "rmx/nn/ops.hpp"

namespace rmx::nn {

/// Named, ordered collection of trainable leaves. Names are unique; order is
/// creation order, which is also the checkpoint order.
template <typename T>
class ParameterStore {
 public:
  using Entry = std::pair<std::string, Var<T>>;

  /// Glorot-uniform over the last two axes' fan-in/fan-out (1-D tensors use
  /// their length for both).
  Var<T> glorot(const std::string& name, Shape shape, Rng& rng);
  Var<T> zeros(const std::string& name, Shape shape);
  Var<T> ones(const std::string& name, Shape shape);

  const std::vector<Entry>& entries() const { return entries_; }
  /// Throws ConfigError for unknown names.
  const Var<T>& get(const std::string& name) const;
  bool contains(const std::string& name) const;
  std::size_t scalar_count() const;
  void zero_grad();

 private:
  Var<T> add(const std::string& name, Tensor<T> value);
  std::vector<Entry> entries_;
};

/// Per-call forward settings. Dropout is active only when training and an
/// rng is supplied.
struct ForwardContext {
  bool training = false;
  Rng* rng = nullptr;

  Rng* dropout_rng() const { return training ? rng : nullptr; }
};

template <typename T>
struct Linear {
  Var<T> weight;  // [in, out]
  Var<T> bias;    // [out]

  Linear() = default;
  Linear(ParameterStore<T>& store, const std::string& name, std::size_t in,
         std::size_t out, Rng& rng, bool with_bias = true);
  Var<T> operator()(const Var<T>& x) const { return linear(x, weight, bias); }
};

template <typename T>
struct LayerNorm {
  Var<T> gamma;
  Var<T> beta;

  LayerNorm() = default;
  LayerNorm(ParameterStore<T>& store, const std::string& name, std::size_t dim);
  Var<T> operator()(const Var<T>& x) const { return layer_norm(x, gamma, beta); }
};

/// Projections around the attention core. Query input is [G, Lq, d], key
/// and value input [G, Lk, d].
template <typename T>
struct MultiHeadAttention {
  Linear<T> q_proj, k_proj, v_proj, out_proj;
  std::size_t heads = 1;

  MultiHeadAttention() = default;
  MultiHeadAttention(ParameterStore<T>& store, const std::string& name,
                     std::size_t d_model, std::size_t n_heads, Rng& rng);
  Var<T> operator()(const Var<T>& query, const Var<T>& key_value, bool causal,
                    Tensor<T>* weights = nullptr) const;
};

/// linear(d -> ffn) -> gelu -> linear(ffn -> d).
template <typename T>
struct FeedForward {
  Linear<T> fc1, fc2;
  double dropout_p = 0.0;

  FeedForward() = default;
  FeedForward(ParameterStore<T>& store, const std::string& name, std::size_t d_model,
              std::size_t d_ffn, double dropout, Rng& rng);
  Var<T> operator()(const Var<T>& x, const ForwardContext& ctx) const;
};

/// Pre-norm self-attention + feed-forward block.
template <typename T>
struct EncoderLayer {
  LayerNorm<T> norm1, norm2;
  MultiHeadAttention<T> self_attn;
  FeedForward<T> ffn;
  double dropout_p = 0.0;

  EncoderLayer() = default;
  EncoderLayer(ParameterStore<T>& store, const std::string& name, std::size_t d_model,
               std::size_t n_heads, std::size_t d_ffn, double dropout, Rng& rng);
  Var<T> operator()(const Var<T>& x, const ForwardContext& ctx, bool causal = false,
                    Tensor<T>* weights = nullptr) const;
};

/// Pre-norm causal self-attention, cross-attention over `memory`, then
/// feed-forward.
template <typename T>
struct DecoderLayer {
  LayerNorm<T> norm1, norm2, norm3;
  MultiHeadAttention<T> self_attn, cross_attn;
  FeedForward<T> ffn;
  double dropout_p = 0.0;

  DecoderLayer() = default;
  DecoderLayer(ParameterStore<T>& store, const std::string& name, std::size_t d_model,
               std::size_t n_heads, std::size_t d_ffn, double dropout, Rng& rng);
  Var<T> operator()(const Var<T>& x, const Var<T>& memory,
                    const ForwardContext& ctx) const;
};

}  // namespace rmx::nn
