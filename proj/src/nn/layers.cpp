#include "rmx/nn/layers.hpp"

#include <cmath>

#include "rmx/error.hpp"

namespace rmx::nn {

template <typename T>
Var<T> ParameterStore<T>::add(const std::string& name, Tensor<T> value) {
  if (contains(name)) throw ConfigError("duplicate parameter name '" + name + "'");
  Var<T> p = parameter(std::move(value));
  entries_.emplace_back(name, p);
  return p;
}

template <typename T>
Var<T> ParameterStore<T>::glorot(const std::string& name, Shape shape, Rng& rng) {
  std::size_t fan_in = shape.back(), fan_out = shape.back();
  if (shape.size() >= 2) {
    fan_in = shape[shape.size() - 2];
    fan_out = shape.back();
  }
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor<T> t(std::move(shape));
  for (T& v : t.storage()) v = static_cast<T>((2.0 * uniform01(rng) - 1.0) * limit);
  return add(name, std::move(t));
}

template <typename T>
Var<T> ParameterStore<T>::zeros(const std::string& name, Shape shape) {
  return add(name, Tensor<T>(std::move(shape), T(0)));
}

template <typename T>
Var<T> ParameterStore<T>::ones(const std::string& name, Shape shape) {
  return add(name, Tensor<T>(std::move(shape), T(1)));
}

template <typename T>
const Var<T>& ParameterStore<T>::get(const std::string& name) const {
  for (const auto& [n, v] : entries_) {
    if (n == name) return v;
  }
  throw ConfigError("unknown parameter '" + name + "'");
}

template <typename T>
bool ParameterStore<T>::contains(const std::string& name) const {
  for (const auto& e : entries_) {
    if (e.first == name) return true;
  }
  return false;
}

template <typename T>
std::size_t ParameterStore<T>::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.second->value.size();
  return n;
}

template <typename T>
void ParameterStore<T>::zero_grad() {
  for (auto& e : entries_) e.second->grad = Tensor<T>();
}

template <typename T>
Linear<T>::Linear(ParameterStore<T>& store, const std::string& name, std::size_t in,
                  std::size_t out, Rng& rng, bool with_bias)
    : weight(store.glorot(name + ".weight", {in, out}, rng)),
      bias(with_bias ? store.zeros(name + ".bias", {out}) : nullptr) {}

template <typename T>
LayerNorm<T>::LayerNorm(ParameterStore<T>& store, const std::string& name,
                        std::size_t dim)
    : gamma(store.ones(name + ".gamma", {dim})),
      beta(store.zeros(name + ".beta", {dim})) {}

template <typename T>
MultiHeadAttention<T>::MultiHeadAttention(ParameterStore<T>& store,
                                          const std::string& name, std::size_t d_model,
                                          std::size_t n_heads, Rng& rng)
    : q_proj(store, name + ".q", d_model, d_model, rng),
      k_proj(store, name + ".k", d_model, d_model, rng),
      v_proj(store, name + ".v", d_model, d_model, rng),
      out_proj(store, name + ".out", d_model, d_model, rng),
      heads(n_heads) {
  if (n_heads == 0 || d_model % n_heads != 0) {
    throw ConfigError("d_model " + std::to_string(d_model) +
                      " must be divisible by n_heads " + std::to_string(n_heads));
  }
}

template <typename T>
Var<T> MultiHeadAttention<T>::operator()(const Var<T>& query, const Var<T>& key_value,
                                         bool causal, Tensor<T>* weights) const {
  auto q = q_proj(query);
  auto k = k_proj(key_value);
  auto v = v_proj(key_value);
  return out_proj(attention(q, k, v, heads, causal, weights));
}

template <typename T>
FeedForward<T>::FeedForward(ParameterStore<T>& store, const std::string& name,
                            std::size_t d_model, std::size_t d_ffn, double dropout,
                            Rng& rng)
    : fc1(store, name + ".fc1", d_model, d_ffn, rng),
      fc2(store, name + ".fc2", d_ffn, d_model, rng),
      dropout_p(dropout) {}

template <typename T>
Var<T> FeedForward<T>::operator()(const Var<T>& x, const ForwardContext& ctx) const {
  return fc2(nn::dropout(gelu(fc1(x)), dropout_p, ctx.dropout_rng()));
}

template <typename T>
EncoderLayer<T>::EncoderLayer(ParameterStore<T>& store, const std::string& name,
                              std::size_t d_model, std::size_t n_heads,
                              std::size_t d_ffn, double dropout, Rng& rng)
    : norm1(store, name + ".norm1", d_model),
      norm2(store, name + ".norm2", d_model),
      self_attn(store, name + ".self_attn", d_model, n_heads, rng),
      ffn(store, name + ".ffn", d_model, d_ffn, dropout, rng),
      dropout_p(dropout) {}

template <typename T>
Var<T> EncoderLayer<T>::operator()(const Var<T>& x, const ForwardContext& ctx,
                                   bool causal, Tensor<T>* weights) const {
  auto h = norm1(x);
  auto y = add(x, dropout(self_attn(h, h, causal, weights), dropout_p, ctx.dropout_rng()));
  return add(y, dropout(ffn(norm2(y), ctx), dropout_p, ctx.dropout_rng()));
}

template <typename T>
DecoderLayer<T>::DecoderLayer(ParameterStore<T>& store, const std::string& name,
                              std::size_t d_model, std::size_t n_heads,
                              std::size_t d_ffn, double dropout, Rng& rng)
    : norm1(store, name + ".norm1", d_model),
      norm2(store, name + ".norm2", d_model),
      norm3(store, name + ".norm3", d_model),
      self_attn(store, name + ".self_attn", d_model, n_heads, rng),
      cross_attn(store, name + ".cross_attn", d_model, n_heads, rng),
      ffn(store, name + ".ffn", d_model, d_ffn, dropout, rng),
      dropout_p(dropout) {}

template <typename T>
Var<T> DecoderLayer<T>::operator()(const Var<T>& x, const Var<T>& memory,
                                   const ForwardContext& ctx) const {
  Rng* rng = ctx.dropout_rng();
  auto h = norm1(x);
  auto y = add(x, dropout(self_attn(h, h, /*causal=*/true), dropout_p, rng));
  y = add(y, dropout(cross_attn(norm2(y), memory, false), dropout_p, rng));
  return add(y, dropout(ffn(norm3(y), ctx), dropout_p, rng));
}

template class ParameterStore<float>;
template class ParameterStore<double>;
template struct Linear<float>;
template struct Linear<double>;
template struct LayerNorm<float>;
template struct LayerNorm<double>;
template struct MultiHeadAttention<float>;
template struct MultiHeadAttention<double>;
template struct FeedForward<float>;
template struct FeedForward<double>;
template struct EncoderLayer<float>;
template struct EncoderLayer<double>;
template struct DecoderLayer<float>;
template struct DecoderLayer<double>;

}  // namespace rmx::nn
