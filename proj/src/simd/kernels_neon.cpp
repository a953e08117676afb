#include "rmx/simd/kernel_types.hpp"

#if defined(__aarch64__)
#include <arm_neon.h>

namespace rmx::simd::neon {

namespace {

struct F32 {
  using T = float;
  using V = float32x4_t;
  static constexpr std::size_t kWidth = 4;
  static V zero() { return vdupq_n_f32(0.0f); }
  static V set1(T x) { return vdupq_n_f32(x); }
  static V load(const T* p) { return vld1q_f32(p); }
  static void store(T* p, V v) { vst1q_f32(p, v); }
  static V fma(V a, V b, V c) { return vfmaq_f32(c, a, b); }
  static V add(V a, V b) { return vaddq_f32(a, b); }
  static T hsum(V v) { return vaddvq_f32(v); }
};

struct F64 {
  using T = double;
  using V = float64x2_t;
  static constexpr std::size_t kWidth = 2;
  static V zero() { return vdupq_n_f64(0.0); }
  static V set1(T x) { return vdupq_n_f64(x); }
  static V load(const T* p) { return vld1q_f64(p); }
  static void store(T* p, V v) { vst1q_f64(p, v); }
  static V fma(V a, V b, V c) { return vfmaq_f64(c, a, b); }
  static V add(V a, V b) { return vaddq_f64(a, b); }
  static T hsum(V v) { return vaddvq_f64(v); }
};

template <class K>
typename K::T dot(const typename K::T* a, const typename K::T* b, std::size_t n) {
  constexpr std::size_t W = K::kWidth;
  auto acc0 = K::zero(), acc1 = K::zero();
  std::size_t i = 0;
  for (; i + 2 * W <= n; i += 2 * W) {
    acc0 = K::fma(K::load(a + i), K::load(b + i), acc0);
    acc1 = K::fma(K::load(a + i + W), K::load(b + i + W), acc1);
  }
  for (; i + W <= n; i += W) acc0 = K::fma(K::load(a + i), K::load(b + i), acc0);
  typename K::T s = K::hsum(K::add(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

template <class K>
void axpy(std::size_t n, typename K::T alpha, const typename K::T* x,
          typename K::T* y) {
  constexpr std::size_t W = K::kWidth;
  const auto va = K::set1(alpha);
  std::size_t i = 0;
  for (; i + W <= n; i += W) K::store(y + i, K::fma(va, K::load(x + i), K::load(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

template <class K>
void gemm(const GemmArgs& g, const typename K::T* a, const typename K::T* b,
          typename K::T* c) {
  using T = typename K::T;
  constexpr std::size_t W = K::kWidth;
  if (g.trans_b) {
    for (std::size_t i = 0; i < g.m; ++i) {
      for (std::size_t j = 0; j < g.n; ++j) {
        T r;
        if (!g.trans_a) {
          r = dot<K>(a + i * g.lda, b + j * g.ldb, g.k);
        } else {
          r = 0;
          for (std::size_t p = 0; p < g.k; ++p) r += a[p * g.lda + i] * b[j * g.ldb + p];
        }
        T& out = c[i * g.ldc + j];
        out = g.accumulate ? out + r : r;
      }
    }
    return;
  }
  for (std::size_t i = 0; i < g.m; ++i) {
    T* crow = c + i * g.ldc;
    std::size_t j = 0;
    for (; j + 2 * W <= g.n; j += 2 * W) {
      auto c0 = g.accumulate ? K::load(crow + j) : K::zero();
      auto c1 = g.accumulate ? K::load(crow + j + W) : K::zero();
      for (std::size_t p = 0; p < g.k; ++p) {
        const auto av = K::set1(g.trans_a ? a[p * g.lda + i] : a[i * g.lda + p]);
        c0 = K::fma(av, K::load(b + p * g.ldb + j), c0);
        c1 = K::fma(av, K::load(b + p * g.ldb + j + W), c1);
      }
      K::store(crow + j, c0);
      K::store(crow + j + W, c1);
    }
    for (; j < g.n; ++j) {
      T acc = 0;
      for (std::size_t p = 0; p < g.k; ++p) {
        acc += (g.trans_a ? a[p * g.lda + i] : a[i * g.lda + p]) * b[p * g.ldb + j];
      }
      crow[j] = g.accumulate ? crow[j] + acc : acc;
    }
  }
}

const KernelTable<float> kFloatTable{&dot<F32>, &axpy<F32>, &gemm<F32>};
const KernelTable<double> kDoubleTable{&dot<F64>, &axpy<F64>, &gemm<F64>};

}  // namespace

const KernelTable<float>* const kFloat = &kFloatTable;
const KernelTable<double>* const kDouble = &kDoubleTable;

}  // namespace rmx::simd::neon

#else

namespace rmx::simd::neon {
const KernelTable<float>* const kFloat = nullptr;
const KernelTable<double>* const kDouble = nullptr;
}  // namespace rmx::simd::neon

#endif
