#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "rmx/nn/autograd.hpp"

namespace rmx::nn {

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) built from the top 53 bits of one draw.
double uniform01(Rng& rng);

/// y = x W + b over the last axis; x is [..., in], W is [in, out], b is
/// [out] or null.
template <typename T>
Var<T> linear(const Var<T>& x, const Var<T>& weight, const Var<T>& bias);

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b);

/// x viewed as [x.size() / v.size(), v.size()], v added to every row.
template <typename T>
Var<T> add_broadcast(const Var<T>& x, const Var<T>& v);

/// x viewed as [G, R, inner, d]; adds table row owner[r] ([P, d]) to every
/// x[g, r, s, :].
template <typename T>
Var<T> add_rows_indexed(const Var<T>& x, const Var<T>& table,
                        const std::vector<std::size_t>& owner, std::size_t inner);

/// [P...] -> [repeats, P...] by copying; gradients are summed back.
template <typename T>
Var<T> tile_leading(const Var<T>& x, std::size_t repeats);

template <typename T>
Var<T> reshape(const Var<T>& x, Shape shape);

/// [a, b, c, d] -> [a, c, b, d].
template <typename T>
Var<T> swap_middle_axes(const Var<T>& x);

/// x viewed as [G, row_len]; returns [G, idx.size()] with out[g, j] =
/// x[g, idx[j]].
template <typename T>
Var<T> gather_columns(const Var<T>& x, std::size_t row_len,
                      const std::vector<std::size_t>& idx);

/// Normalizes over the last axis, then scales by gamma and shifts by beta.
template <typename T>
Var<T> layer_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta,
                  double eps = 1e-5);

/// Tanh-form GELU.
template <typename T>
Var<T> gelu(const Var<T>& x);

double gelu_tanh(double x);
double gelu_erf(double x);

/// Inverted dropout: zeroes with probability p and scales survivors by
/// 1/(1-p). Identity when rng is null or p == 0.
template <typename T>
Var<T> dropout(const Var<T>& x, double p, Rng* rng);

/// Scaled dot-product attention core, no projections. q is [G, Lq, d],
/// k and v are [G, Lk, d]; the last axis is split into `heads` equal slices.
/// Reductions over keys accumulate in double, so reordering keys together
/// with values does not change the result. A causal mask needs Lq == Lk and
/// lets query i see keys 0..i. When `weights` is given it receives the
/// softmax weights as [G, heads, Lq, Lk].
template <typename T>
Var<T> attention(const Var<T>& q, const Var<T>& k, const Var<T>& v,
                 std::size_t heads, bool causal, Tensor<T>* weights = nullptr);

/// Mean of squared differences, accumulated in double; returns a [1] node.
template <typename T>
Var<T> mse_loss(const Var<T>& pred, const Tensor<T>& target);

/// Standard sin/cos table of shape [seq_len, d_model]: even columns sin,
/// odd columns cos, frequency 10000^(-2i/d_model).
template <typename T>
Tensor<T> sinusoidal_positional_encoding(std::size_t seq_len, std::size_t d_model);

}  // namespace rmx::nn
