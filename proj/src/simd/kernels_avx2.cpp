// Compiled with -mavx2 -mfma on x86-64; only reached after a runtime CPU
// check. Do not include standard headers with inline code here.

#include "rmx/simd/kernel_types.hpp"

#if defined(__x86_64__) && defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>

namespace rmx::simd::avx2 {

namespace {

struct F32 {
  using T = float;
  using V = __m256;
  static constexpr std::size_t kWidth = 8;
  static V zero() { return _mm256_setzero_ps(); }
  static V set1(T x) { return _mm256_set1_ps(x); }
  static V load(const T* p) { return _mm256_loadu_ps(p); }
  static void store(T* p, V v) { _mm256_storeu_ps(p, v); }
  static V fma(V a, V b, V c) { return _mm256_fmadd_ps(a, b, c); }
  static V add(V a, V b) { return _mm256_add_ps(a, b); }
  static T hsum(V v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_add_ps(lo, hi);
    __m128 shuf = _mm_movehdup_ps(lo);
    __m128 sums = _mm_add_ps(lo, shuf);
    shuf = _mm_movehl_ps(shuf, sums);
    sums = _mm_add_ss(sums, shuf);
    return _mm_cvtss_f32(sums);
  }
};

struct F64 {
  using T = double;
  using V = __m256d;
  static constexpr std::size_t kWidth = 4;
  static V zero() { return _mm256_setzero_pd(); }
  static V set1(T x) { return _mm256_set1_pd(x); }
  static V load(const T* p) { return _mm256_loadu_pd(p); }
  static void store(T* p, V v) { _mm256_storeu_pd(p, v); }
  static V fma(V a, V b, V c) { return _mm256_fmadd_pd(a, b, c); }
  static V add(V a, V b) { return _mm256_add_pd(a, b); }
  static T hsum(V v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d high64 = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, high64));
  }
};

template <class K>
typename K::T dot(const typename K::T* a, const typename K::T* b, std::size_t n) {
  constexpr std::size_t W = K::kWidth;
  auto acc0 = K::zero(), acc1 = K::zero(), acc2 = K::zero(), acc3 = K::zero();
  std::size_t i = 0;
  for (; i + 4 * W <= n; i += 4 * W) {
    acc0 = K::fma(K::load(a + i), K::load(b + i), acc0);
    acc1 = K::fma(K::load(a + i + W), K::load(b + i + W), acc1);
    acc2 = K::fma(K::load(a + i + 2 * W), K::load(b + i + 2 * W), acc2);
    acc3 = K::fma(K::load(a + i + 3 * W), K::load(b + i + 3 * W), acc3);
  }
  for (; i + W <= n; i += W) acc0 = K::fma(K::load(a + i), K::load(b + i), acc0);
  typename K::T s = K::hsum(K::add(K::add(acc0, acc1), K::add(acc2, acc3)));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

template <class K>
void axpy(std::size_t n, typename K::T alpha, const typename K::T* x,
          typename K::T* y) {
  constexpr std::size_t W = K::kWidth;
  const auto va = K::set1(alpha);
  std::size_t i = 0;
  for (; i + 2 * W <= n; i += 2 * W) {
    K::store(y + i, K::fma(va, K::load(x + i), K::load(y + i)));
    K::store(y + i + W, K::fma(va, K::load(x + i + W), K::load(y + i + W)));
  }
  for (; i + W <= n; i += W) K::store(y + i, K::fma(va, K::load(x + i), K::load(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

// Panel sizes: a KC x NC block of B stays cache-resident while row tiles
// of A stream past it.
constexpr std::size_t kKc = 256;
constexpr std::size_t kNc = 256;
constexpr std::size_t kNtRows = 64;

template <bool kTransA, class T>
inline T a_at(const GemmArgs& g, const T* a, std::size_t i, std::size_t p) {
  return kTransA ? a[p * g.lda + i] : a[i * g.lda + p];
}

// MR x (NV * W) register tile of C over p in [p0, p1).
template <class K, bool kTransA, int MR, int NV>
inline void tile(const GemmArgs& g, const typename K::T* a, const typename K::T* b,
                 typename K::T* c, std::size_t i0, std::size_t j0, std::size_t p0,
                 std::size_t p1, bool acc) {
  constexpr std::size_t W = K::kWidth;
  typename K::V r[MR][NV];
  for (int m = 0; m < MR; ++m) {
    for (int v = 0; v < NV; ++v) {
      r[m][v] = acc ? K::load(c + (i0 + m) * g.ldc + j0 + v * W) : K::zero();
    }
  }
  for (std::size_t p = p0; p < p1; ++p) {
    typename K::V bv[NV];
    for (int v = 0; v < NV; ++v) bv[v] = K::load(b + p * g.ldb + j0 + v * W);
    for (int m = 0; m < MR; ++m) {
      const auto av = K::set1(a_at<kTransA>(g, a, i0 + m, p));
      for (int v = 0; v < NV; ++v) r[m][v] = K::fma(av, bv[v], r[m][v]);
    }
  }
  for (int m = 0; m < MR; ++m) {
    for (int v = 0; v < NV; ++v) K::store(c + (i0 + m) * g.ldc + j0 + v * W, r[m][v]);
  }
}

template <class K, bool kTransA, int MR>
inline void row_block(const GemmArgs& g, const typename K::T* a, const typename K::T* b,
                      typename K::T* c, std::size_t i0, std::size_t j0, std::size_t j1,
                      std::size_t p0, std::size_t p1, bool acc) {
  using T = typename K::T;
  constexpr std::size_t W = K::kWidth;
  std::size_t j = j0;
  for (; j + 2 * W <= j1; j += 2 * W) tile<K, kTransA, MR, 2>(g, a, b, c, i0, j, p0, p1, acc);
  for (; j + W <= j1; j += W) tile<K, kTransA, MR, 1>(g, a, b, c, i0, j, p0, p1, acc);
  for (; j < j1; ++j) {
    for (int m = 0; m < MR; ++m) {
      T s = acc ? c[(i0 + m) * g.ldc + j] : T(0);
      for (std::size_t p = p0; p < p1; ++p) s += a_at<kTransA>(g, a, i0 + m, p) * b[p * g.ldb + j];
      c[(i0 + m) * g.ldc + j] = s;
    }
  }
}

// C (+)= op(A) B with B not transposed.
template <class K, bool kTransA>
void gemm_rows(const GemmArgs& g, const typename K::T* a, const typename K::T* b,
               typename K::T* c) {
  if (g.k == 0) {
    if (!g.accumulate) {
      for (std::size_t i = 0; i < g.m; ++i) {
        for (std::size_t j = 0; j < g.n; ++j) c[i * g.ldc + j] = 0;
      }
    }
    return;
  }
  for (std::size_t p0 = 0; p0 < g.k; p0 += kKc) {
    const std::size_t p1 = p0 + kKc < g.k ? p0 + kKc : g.k;
    const bool acc = g.accumulate || p0 > 0;
    for (std::size_t j0 = 0; j0 < g.n; j0 += kNc) {
      const std::size_t j1 = j0 + kNc < g.n ? j0 + kNc : g.n;
      std::size_t i = 0;
      for (; i + 4 <= g.m; i += 4) row_block<K, kTransA, 4>(g, a, b, c, i, j0, j1, p0, p1, acc);
      for (; i < g.m; ++i) row_block<K, kTransA, 1>(g, a, b, c, i, j0, j1, p0, p1, acc);
    }
  }
}

// C(i, j) (+)= dot(A row i, B row j): A not transposed, B transposed.
// Tiles of 2 A rows x 4 B rows share their loads.
template <class K>
void gemm_nt(const GemmArgs& g, const typename K::T* a, const typename K::T* b,
             typename K::T* c) {
  using T = typename K::T;
  constexpr std::size_t W = K::kWidth;
  auto finish = [&](std::size_t i, std::size_t j, T r) {
    T* dst = c + i * g.ldc + j;
    *dst = g.accumulate ? *dst + r : r;
  };
  for (std::size_t jb = 0; jb < g.n; jb += kNtRows) {
    const std::size_t je = jb + kNtRows < g.n ? jb + kNtRows : g.n;
    std::size_t i = 0;
    for (; i + 2 <= g.m; i += 2) {
      const T* a0 = a + i * g.lda;
      const T* a1 = a0 + g.lda;
      std::size_t j = jb;
      for (; j + 4 <= je; j += 4) {
        const T* b0 = b + j * g.ldb;
        const T* b1 = b0 + g.ldb;
        const T* b2 = b1 + g.ldb;
        const T* b3 = b2 + g.ldb;
        auto s00 = K::zero(), s01 = K::zero(), s02 = K::zero(), s03 = K::zero();
        auto s10 = K::zero(), s11 = K::zero(), s12 = K::zero(), s13 = K::zero();
        std::size_t p = 0;
        for (; p + W <= g.k; p += W) {
          const auto x0 = K::load(a0 + p), x1 = K::load(a1 + p);
          auto bv = K::load(b0 + p);
          s00 = K::fma(x0, bv, s00);
          s10 = K::fma(x1, bv, s10);
          bv = K::load(b1 + p);
          s01 = K::fma(x0, bv, s01);
          s11 = K::fma(x1, bv, s11);
          bv = K::load(b2 + p);
          s02 = K::fma(x0, bv, s02);
          s12 = K::fma(x1, bv, s12);
          bv = K::load(b3 + p);
          s03 = K::fma(x0, bv, s03);
          s13 = K::fma(x1, bv, s13);
        }
        T r[2][4] = {{K::hsum(s00), K::hsum(s01), K::hsum(s02), K::hsum(s03)},
                     {K::hsum(s10), K::hsum(s11), K::hsum(s12), K::hsum(s13)}};
        for (; p < g.k; ++p) {
          for (int q = 0; q < 4; ++q) {
            r[0][q] += a0[p] * b[(j + q) * g.ldb + p];
            r[1][q] += a1[p] * b[(j + q) * g.ldb + p];
          }
        }
        for (int q = 0; q < 4; ++q) {
          finish(i, j + q, r[0][q]);
          finish(i + 1, j + q, r[1][q]);
        }
      }
      for (; j < je; ++j) {
        finish(i, j, dot<K>(a0, b + j * g.ldb, g.k));
        finish(i + 1, j, dot<K>(a1, b + j * g.ldb, g.k));
      }
    }
    for (; i < g.m; ++i) {
      for (std::size_t j = jb; j < je; ++j) finish(i, j, dot<K>(a + i * g.lda, b + j * g.ldb, g.k));
    }
  }
}

template <class K>
void gemm(const GemmArgs& g, const typename K::T* a, const typename K::T* b,
          typename K::T* c) {
  if (!g.trans_b) {
    if (g.trans_a) {
      gemm_rows<K, true>(g, a, b, c);
    } else {
      gemm_rows<K, false>(g, a, b, c);
    }
  } else if (!g.trans_a) {
    gemm_nt<K>(g, a, b, c);
  } else if constexpr (sizeof(typename K::T) == sizeof(float)) {
    scalar::kFloat.gemm(g, a, b, c);
  } else {
    scalar::kDouble.gemm(g, a, b, c);
  }
}

const KernelTable<float> kFloatTable{&dot<F32>, &axpy<F32>, &gemm<F32>};
const KernelTable<double> kDoubleTable{&dot<F64>, &axpy<F64>, &gemm<F64>};

}  // namespace

const KernelTable<float>* const kFloat = &kFloatTable;
const KernelTable<double>* const kDouble = &kDoubleTable;

}  // namespace rmx::simd::avx2

#else

namespace rmx::simd::avx2 {
const KernelTable<float>* const kFloat = nullptr;
const KernelTable<double>* const kDouble = nullptr;
}  // namespace rmx::simd::avx2

#endif
