#include "rmx/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rmx/error.hpp"
#include "rmx/simd/kernels.hpp"

namespace rmx::nn {

namespace {

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
}

template <typename T>
void add_into(Tensor<T>& dst, const Tensor<T>& src) {
  simd::axpy<T>(dst.size(), T(1), src.data(), dst.data());
}

constexpr double kSqrt2OverPi = 0.7978845608028654;
constexpr double kGeluCoeff = 0.044715;

}  // namespace

double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

template <typename T>
Var<T> linear(const Var<T>& x, const Var<T>& weight, const Var<T>& bias) {
  const auto& xs = x->value.shape();
  const auto& ws = weight->value.shape();
  if (ws.size() != 2 || xs.empty() || xs.back() != ws[0]) {
    throw ShapeError("linear: input " + shape_str(xs) + " vs weight " + shape_str(ws));
  }
  const std::size_t in = ws[0], out = ws[1];
  if (bias && bias->value.size() != out) {
    throw ShapeError("linear: bias " + shape_str(bias->value.shape()));
  }
  const std::size_t rows = x->value.size() / in;
  Shape ys = xs;
  ys.back() = out;
  Tensor<T> y(ys);
  simd::GemmArgs g;
  g.m = rows;
  g.n = out;
  g.k = in;
  g.lda = in;
  g.ldb = out;
  g.ldc = out;
  simd::gemm<T>(g, x->value.data(), weight->value.data(), y.data());
  if (bias) {
    const T* b = bias->value.data();
    for (std::size_t r = 0; r < rows; ++r) {
      T* yr = y.data() + r * out;
      for (std::size_t j = 0; j < out; ++j) yr[j] += b[j];
    }
  }
  std::vector<Var<T>> inputs{x, weight};
  if (bias) inputs.push_back(bias);
  return make_op<T>(std::move(y), std::move(inputs), [rows, in, out](Node<T>& n) {
    const T* dy = n.grad.data();
    Node<T>& xn = *n.inputs[0];
    Node<T>& wn = *n.inputs[1];
    if (xn.requires_grad) {
      simd::GemmArgs g;
      g.trans_b = true;
      g.m = rows;
      g.n = in;
      g.k = out;
      g.lda = out;
      g.ldb = out;
      g.ldc = in;
      g.accumulate = true;
      simd::gemm<T>(g, dy, wn.value.data(), xn.grad_buffer().data());
    }
    if (wn.requires_grad) {
      simd::GemmArgs g;
      g.trans_a = true;
      g.m = in;
      g.n = out;
      g.k = rows;
      g.lda = in;
      g.ldb = out;
      g.ldc = out;
      g.accumulate = true;
      simd::gemm<T>(g, xn.value.data(), dy, wn.grad_buffer().data());
    }
    if (n.inputs.size() > 2 && n.inputs[2]->requires_grad) {
      T* db = n.inputs[2]->grad_buffer().data();
      for (std::size_t r = 0; r < rows; ++r) {
        simd::axpy<T>(out, T(1), dy + r * out, db);
      }
    }
  });
}

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  require_same_shape(a->value, b->value, "add");
  Tensor<T> y = a->value;
  add_into(y, b->value);
  return make_op<T>(std::move(y), {a, b}, [](Node<T>& n) {
    for (auto& in : n.inputs) {
      if (in->requires_grad) add_into(in->grad_buffer(), n.grad);
    }
  });
}

template <typename T>
Var<T> add_broadcast(const Var<T>& x, const Var<T>& v) {
  const std::size_t len = v->value.size();
  if (len == 0 || x->value.size() % len != 0) {
    throw ShapeError("add_broadcast: " + shape_str(x->value.shape()) + " + " +
                     shape_str(v->value.shape()));
  }
  const std::size_t rows = x->value.size() / len;
  Tensor<T> y = x->value;
  for (std::size_t r = 0; r < rows; ++r) {
    simd::axpy<T>(len, T(1), v->value.data(), y.data() + r * len);
  }
  return make_op<T>(std::move(y), {x, v}, [rows, len](Node<T>& n) {
    if (n.inputs[0]->requires_grad) add_into(n.inputs[0]->grad_buffer(), n.grad);
    if (n.inputs[1]->requires_grad) {
      T* dv = n.inputs[1]->grad_buffer().data();
      for (std::size_t r = 0; r < rows; ++r) {
        simd::axpy<T>(len, T(1), n.grad.data() + r * len, dv);
      }
    }
  });
}

template <typename T>
Var<T> add_rows_indexed(const Var<T>& x, const Var<T>& table,
                        const std::vector<std::size_t>& owner, std::size_t inner) {
  const auto& ts = table->value.shape();
  if (ts.size() != 2) throw ShapeError("add_rows_indexed: table must be 2-D");
  const std::size_t n_rows = ts[0], d = ts[1];
  const std::size_t r = owner.size();
  const std::size_t block = r * inner * d;
  if (r == 0 || inner == 0 || x->value.size() % block != 0) {
    throw ShapeError("add_rows_indexed: " + shape_str(x->value.shape()) +
                     " incompatible with " + std::to_string(r) + " rows x " +
                     std::to_string(inner) + " x " + std::to_string(d));
  }
  for (std::size_t o : owner) {
    if (o >= n_rows) throw ConfigError("add_rows_indexed: owner index out of range");
  }
  const std::size_t groups = x->value.size() / block;
  Tensor<T> y = x->value;
  for (std::size_t g = 0; g < groups; ++g) {
    for (std::size_t i = 0; i < r; ++i) {
      const T* row = table->value.data() + owner[i] * d;
      for (std::size_t s = 0; s < inner; ++s) {
        simd::axpy<T>(d, T(1), row, y.data() + ((g * r + i) * inner + s) * d);
      }
    }
  }
  return make_op<T>(std::move(y), {x, table},
                    [owner, groups, r, inner, d](Node<T>& n) {
                      if (n.inputs[0]->requires_grad) {
                        add_into(n.inputs[0]->grad_buffer(), n.grad);
                      }
                      if (!n.inputs[1]->requires_grad) return;
                      T* dt = n.inputs[1]->grad_buffer().data();
                      for (std::size_t g = 0; g < groups; ++g) {
                        for (std::size_t i = 0; i < r; ++i) {
                          for (std::size_t s = 0; s < inner; ++s) {
                            simd::axpy<T>(d, T(1),
                                          n.grad.data() + ((g * r + i) * inner + s) * d,
                                          dt + owner[i] * d);
                          }
                        }
                      }
                    });
}

template <typename T>
Var<T> tile_leading(const Var<T>& x, std::size_t repeats) {
  if (repeats == 0) throw ShapeError("tile_leading: zero repeats");
  const std::size_t len = x->value.size();
  Shape ys{repeats};
  ys.insert(ys.end(), x->value.shape().begin(), x->value.shape().end());
  Tensor<T> y(ys);
  for (std::size_t r = 0; r < repeats; ++r) {
    std::copy(x->value.data(), x->value.data() + len, y.data() + r * len);
  }
  return make_op<T>(std::move(y), {x}, [repeats, len](Node<T>& n) {
    T* dx = n.inputs[0]->grad_buffer().data();
    for (std::size_t r = 0; r < repeats; ++r) {
      simd::axpy<T>(len, T(1), n.grad.data() + r * len, dx);
    }
  });
}

template <typename T>
Var<T> reshape(const Var<T>& x, Shape shape) {
  Tensor<T> y = x->value.reshaped(std::move(shape));
  return make_op<T>(std::move(y), {x}, [](Node<T>& n) {
    Tensor<T>& dx = n.inputs[0]->grad_buffer();
    simd::axpy<T>(dx.size(), T(1), n.grad.data(), dx.data());
  });
}

template <typename T>
Var<T> swap_middle_axes(const Var<T>& x) {
  const auto& s = x->value.shape();
  if (s.size() != 4) throw ShapeError("swap_middle_axes needs rank 4, got " + shape_str(s));
  const std::size_t A = s[0], B = s[1], C = s[2], D = s[3];
  Tensor<T> y({A, C, B, D});
  for (std::size_t a = 0; a < A; ++a) {
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t c = 0; c < C; ++c) {
        const T* src = x->value.data() + ((a * B + b) * C + c) * D;
        std::copy(src, src + D, y.data() + ((a * C + c) * B + b) * D);
      }
    }
  }
  return make_op<T>(std::move(y), {x}, [A, B, C, D](Node<T>& n) {
    T* dx = n.inputs[0]->grad_buffer().data();
    for (std::size_t a = 0; a < A; ++a) {
      for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t c = 0; c < C; ++c) {
          simd::axpy<T>(D, T(1), n.grad.data() + ((a * C + c) * B + b) * D,
                        dx + ((a * B + b) * C + c) * D);
        }
      }
    }
  });
}

template <typename T>
Var<T> gather_columns(const Var<T>& x, std::size_t row_len,
                      const std::vector<std::size_t>& idx) {
  if (row_len == 0 || x->value.size() % row_len != 0) {
    throw ShapeError("gather_columns: row length " + std::to_string(row_len) +
                     " does not divide " + shape_str(x->value.shape()));
  }
  for (std::size_t i : idx) {
    if (i >= row_len) throw ShapeError("gather_columns: index out of range");
  }
  const std::size_t groups = x->value.size() / row_len;
  const std::size_t m = idx.size();
  Tensor<T> y({groups, m});
  for (std::size_t g = 0; g < groups; ++g) {
    for (std::size_t j = 0; j < m; ++j) y[g * m + j] = x->value[g * row_len + idx[j]];
  }
  return make_op<T>(std::move(y), {x}, [idx, groups, row_len, m](Node<T>& n) {
    Tensor<T>& dx = n.inputs[0]->grad_buffer();
    for (std::size_t g = 0; g < groups; ++g) {
      for (std::size_t j = 0; j < m; ++j) dx[g * row_len + idx[j]] += n.grad[g * m + j];
    }
  });
}

template <typename T>
Var<T> layer_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta,
                  double eps) {
  const std::size_t d = gamma->value.size();
  if (x->value.shape().empty() || x->value.shape().back() != d ||
      beta->value.size() != d) {
    throw ShapeError("layer_norm: input " + shape_str(x->value.shape()) +
                     " vs gamma " + shape_str(gamma->value.shape()));
  }
  const std::size_t rows = x->value.size() / d;
  Tensor<T> y(x->value.shape());
  std::vector<T> xhat(x->value.size());
  std::vector<T> rstd(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = x->value.data() + r * d;
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) mean += xr[j];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double c = xr[j] - mean;
      var += c * c;
    }
    var /= static_cast<double>(d);
    const double rs = 1.0 / std::sqrt(var + eps);
    rstd[r] = static_cast<T>(rs);
    for (std::size_t j = 0; j < d; ++j) {
      const T xh = static_cast<T>((xr[j] - mean) * rs);
      xhat[r * d + j] = xh;
      y[r * d + j] = xh * gamma->value[j] + beta->value[j];
    }
  }
  return make_op<T>(
      std::move(y), {x, gamma, beta},
      [rows, d, xhat = std::move(xhat), rstd = std::move(rstd)](Node<T>& n) {
        Node<T>& xn = *n.inputs[0];
        Node<T>& gn = *n.inputs[1];
        Node<T>& bn = *n.inputs[2];
        const T* gam = gn.value.data();
        T* dg = gn.requires_grad ? gn.grad_buffer().data() : nullptr;
        T* db = bn.requires_grad ? bn.grad_buffer().data() : nullptr;
        T* dx = xn.requires_grad ? xn.grad_buffer().data() : nullptr;
        for (std::size_t r = 0; r < rows; ++r) {
          const T* dy = n.grad.data() + r * d;
          const T* xh = xhat.data() + r * d;
          double mean_dxh = 0.0, mean_dxh_xh = 0.0;
          for (std::size_t j = 0; j < d; ++j) {
            const double dxh = static_cast<double>(dy[j]) * gam[j];
            mean_dxh += dxh;
            mean_dxh_xh += dxh * xh[j];
            if (dg) dg[j] += dy[j] * xh[j];
            if (db) db[j] += dy[j];
          }
          if (!dx) continue;
          mean_dxh /= static_cast<double>(d);
          mean_dxh_xh /= static_cast<double>(d);
          for (std::size_t j = 0; j < d; ++j) {
            const double dxh = static_cast<double>(dy[j]) * gam[j];
            dx[r * d + j] += static_cast<T>(
                static_cast<double>(rstd[r]) * (dxh - mean_dxh - xh[j] * mean_dxh_xh));
          }
        }
      });
}

double gelu_tanh(double x) {
  return 0.5 * x * (1.0 + std::tanh(kSqrt2OverPi * (x + kGeluCoeff * x * x * x)));
}

double gelu_erf(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

template <typename T>
Var<T> gelu(const Var<T>& x) {
  Tensor<T> y(x->value.shape());
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = static_cast<T>(gelu_tanh(x->value[i]));
  }
  return make_op<T>(std::move(y), {x}, [](Node<T>& n) {
    Node<T>& xn = *n.inputs[0];
    Tensor<T>& dx = xn.grad_buffer();
    for (std::size_t i = 0; i < dx.size(); ++i) {
      const double v = xn.value[i];
      const double u = kSqrt2OverPi * (v + kGeluCoeff * v * v * v);
      const double t = std::tanh(u);
      const double du = kSqrt2OverPi * (1.0 + 3.0 * kGeluCoeff * v * v);
      const double dgelu = 0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * du;
      dx[i] += static_cast<T>(dgelu * n.grad[i]);
    }
  });
}

template <typename T>
Var<T> dropout(const Var<T>& x, double p, Rng* rng) {
  if (rng == nullptr || p <= 0.0) return x;
  if (p >= 1.0) throw ConfigError("dropout probability must be < 1");
  const T scale = static_cast<T>(1.0 / (1.0 - p));
  std::vector<T> mask(x->value.size());
  Tensor<T> y(x->value.shape());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    mask[i] = uniform01(*rng) >= p ? scale : T(0);
    y[i] = x->value[i] * mask[i];
  }
  return make_op<T>(std::move(y), {x}, [mask = std::move(mask)](Node<T>& n) {
    Tensor<T>& dx = n.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += n.grad[i] * mask[i];
  });
}

template <typename T>
Var<T> attention(const Var<T>& q, const Var<T>& k, const Var<T>& v,
                 std::size_t heads, bool causal, Tensor<T>* weights) {
  const auto& qs = q->value.shape();
  const auto& ks = k->value.shape();
  if (qs.size() != 3 || ks.size() != 3 || ks != v->value.shape() || qs[0] != ks[0] ||
      qs[2] != ks[2]) {
    throw ShapeError("attention: q " + shape_str(qs) + ", k " + shape_str(ks) +
                     ", v " + shape_str(v->value.shape()));
  }
  const std::size_t G = qs[0], Lq = qs[1], Lk = ks[1], d = qs[2];
  if (heads == 0 || d % heads != 0) {
    throw ConfigError("attention: model width " + std::to_string(d) +
                      " not divisible by " + std::to_string(heads) + " heads");
  }
  if (Lk == 0) throw ShapeError("attention: no keys");
  if (causal && Lq != Lk) throw ShapeError("attention: causal mask needs Lq == Lk");
  const std::size_t dh = d / heads;
  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));

  Tensor<T> probs({G, heads, Lq, Lk});
  Tensor<T> out({G, Lq, d});
  std::vector<double> e(Lk);
  std::vector<double> acc(dh);
  const T* Q = q->value.data();
  const T* K = k->value.data();
  const T* V = v->value.data();
  for (std::size_t g = 0; g < G; ++g) {
    for (std::size_t h = 0; h < heads; ++h) {
      for (std::size_t i = 0; i < Lq; ++i) {
        const T* qi = Q + (g * Lq + i) * d + h * dh;
        const std::size_t visible = causal ? i + 1 : Lk;
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < visible; ++j) {
          const T s = scale * simd::dot<T>(qi, K + (g * Lk + j) * d + h * dh, dh);
          e[j] = s;
          mx = std::max(mx, e[j]);
        }
        double sum = 0.0;
        for (std::size_t j = 0; j < visible; ++j) {
          e[j] = std::exp(e[j] - mx);
          sum += e[j];
        }
        T* prow = probs.data() + ((g * heads + h) * Lq + i) * Lk;
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::size_t j = 0; j < visible; ++j) {
          const T p = static_cast<T>(e[j] / sum);
          prow[j] = p;
          const T* vj = V + (g * Lk + j) * d + h * dh;
          for (std::size_t c = 0; c < dh; ++c) {
            acc[c] += static_cast<double>(p) * static_cast<double>(vj[c]);
          }
        }
        T* oi = out.data() + (g * Lq + i) * d + h * dh;
        for (std::size_t c = 0; c < dh; ++c) oi[c] = static_cast<T>(acc[c]);
      }
    }
  }
  if (weights != nullptr) *weights = probs;

  return make_op<T>(
      std::move(out), {q, k, v},
      [G, Lq, Lk, d, dh, heads, scale, causal, probs = std::move(probs)](Node<T>& n) {
        Node<T>& qn = *n.inputs[0];
        Node<T>& kn = *n.inputs[1];
        Node<T>& vn = *n.inputs[2];
        T* dQ = qn.requires_grad ? qn.grad_buffer().data() : nullptr;
        T* dK = kn.requires_grad ? kn.grad_buffer().data() : nullptr;
        T* dV = vn.requires_grad ? vn.grad_buffer().data() : nullptr;
        const T* Q = qn.value.data();
        const T* K = kn.value.data();
        const T* V = vn.value.data();
        std::vector<T> dp(Lk);
        for (std::size_t g = 0; g < G; ++g) {
          for (std::size_t h = 0; h < heads; ++h) {
            for (std::size_t i = 0; i < Lq; ++i) {
              const std::size_t visible = causal ? i + 1 : Lk;
              const T* prow = probs.data() + ((g * heads + h) * Lq + i) * Lk;
              const T* dOi = n.grad.data() + (g * Lq + i) * d + h * dh;
              double rowdot = 0.0;
              for (std::size_t j = 0; j < visible; ++j) {
                dp[j] = simd::dot<T>(dOi, V + (g * Lk + j) * d + h * dh, dh);
                rowdot += static_cast<double>(prow[j]) * dp[j];
              }
              for (std::size_t j = 0; j < visible; ++j) {
                const T ds = static_cast<T>(prow[j] * (dp[j] - rowdot)) * scale;
                const std::size_t kv_off = (g * Lk + j) * d + h * dh;
                const std::size_t q_off = (g * Lq + i) * d + h * dh;
                if (dQ) simd::axpy<T>(dh, ds, K + kv_off, dQ + q_off);
                if (dK) simd::axpy<T>(dh, ds, Q + q_off, dK + kv_off);
                if (dV) simd::axpy<T>(dh, prow[j], dOi, dV + kv_off);
              }
            }
          }
        }
      });
}

template <typename T>
Var<T> mse_loss(const Var<T>& pred, const Tensor<T>& target) {
  require_same_shape(pred->value, target, "mse_loss");
  if (target.empty()) throw ShapeError("mse_loss: empty tensors");
  double sum = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double diff = static_cast<double>(pred->value[i]) - target[i];
    sum += diff * diff;
  }
  const double count = static_cast<double>(target.size());
  Tensor<T> loss({1}, static_cast<T>(sum / count));
  return make_op<T>(std::move(loss), {pred}, [target, count](Node<T>& n) {
    Node<T>& pn = *n.inputs[0];
    Tensor<T>& dp = pn.grad_buffer();
    const double g = static_cast<double>(n.grad[0]) * 2.0 / count;
    for (std::size_t i = 0; i < dp.size(); ++i) {
      dp[i] += static_cast<T>(g * (static_cast<double>(pn.value[i]) - target[i]));
    }
  });
}

template <typename T>
Tensor<T> sinusoidal_positional_encoding(std::size_t seq_len, std::size_t d_model) {
  Tensor<T> pe({seq_len, d_model});
  for (std::size_t pos = 0; pos < seq_len; ++pos) {
    for (std::size_t j = 0; j < d_model; ++j) {
      const std::size_t pair = j / 2;
      const double freq =
          std::pow(10000.0, -2.0 * static_cast<double>(pair) / static_cast<double>(d_model));
      const double angle = static_cast<double>(pos) * freq;
      pe[pos * d_model + j] = static_cast<T>(j % 2 == 0 ? std::sin(angle) : std::cos(angle));
    }
  }
  return pe;
}

#define RMX_INSTANTIATE_OPS(T)                                                      \
  template Var<T> linear(const Var<T>&, const Var<T>&, const Var<T>&);              \
  template Var<T> add(const Var<T>&, const Var<T>&);                                \
  template Var<T> add_broadcast(const Var<T>&, const Var<T>&);                      \
  template Var<T> add_rows_indexed(const Var<T>&, const Var<T>&,                    \
                                   const std::vector<std::size_t>&, std::size_t);   \
  template Var<T> tile_leading(const Var<T>&, std::size_t);                         \
  template Var<T> reshape(const Var<T>&, Shape);                                    \
  template Var<T> swap_middle_axes(const Var<T>&);                                  \
  template Var<T> gather_columns(const Var<T>&, std::size_t,                        \
                                 const std::vector<std::size_t>&);                  \
  template Var<T> layer_norm(const Var<T>&, const Var<T>&, const Var<T>&, double);  \
  template Var<T> gelu(const Var<T>&);                                              \
  template Var<T> dropout(const Var<T>&, double, Rng*);                             \
  template Var<T> attention(const Var<T>&, const Var<T>&, const Var<T>&,            \
                            std::size_t, bool, Tensor<T>*);                         \
  template Var<T> mse_loss(const Var<T>&, const Tensor<T>&);                        \
  template Tensor<T> sinusoidal_positional_encoding<T>(std::size_t, std::size_t);

RMX_INSTANTIATE_OPS(float)
RMX_INSTANTIATE_OPS(double)

#undef RMX_INSTANTIATE_OPS

}  // namespace rmx::nn
