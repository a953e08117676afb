#include "rmx/simd/kernels.hpp"

namespace rmx::simd::scalar {

namespace {

template <typename T>
T dot_ref(const T* a, const T* b, std::size_t n) {
  T acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

template <typename T>
void axpy_ref(std::size_t n, T alpha, const T* x, T* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <typename T>
void gemm_ref(const GemmArgs& g, const T* a, const T* b, T* c) {
  for (std::size_t i = 0; i < g.m; ++i) {
    for (std::size_t j = 0; j < g.n; ++j) {
      T acc = 0;
      for (std::size_t p = 0; p < g.k; ++p) {
        const T av = g.trans_a ? a[p * g.lda + i] : a[i * g.lda + p];
        const T bv = g.trans_b ? b[j * g.ldb + p] : b[p * g.ldb + j];
        acc += av * bv;
      }
      T& out = c[i * g.ldc + j];
      out = g.accumulate ? out + acc : acc;
    }
  }
}

}  // namespace

const KernelTable<float> kFloat{&dot_ref<float>, &axpy_ref<float>, &gemm_ref<float>};
const KernelTable<double> kDouble{&dot_ref<double>, &axpy_ref<double>,
                                  &gemm_ref<double>};

}  // namespace rmx::simd::scalar
