#pragma once

// Kept free of standard-library templates: the vectorized translation units
// include only this header and are compiled with ISA-specific flags.

#include <cstddef>

namespace rmx::simd {

// Layout of the gemm operands: row-major with explicit leading dimensions.
// op(A) is m x k, op(B) is k x n, C is m x n.
//   A(i, p) = trans_a ? a[p * lda + i] : a[i * lda + p]
//   B(p, j) = trans_b ? b[j * ldb + p] : b[p * ldb + j]
// C = op(A) op(B), or C += op(A) op(B) when accumulate is set.
struct GemmArgs {
  bool trans_a = false;
  bool trans_b = false;
  std::size_t m = 0, n = 0, k = 0;
  std::size_t lda = 0, ldb = 0, ldc = 0;
  bool accumulate = false;
};

template <typename T>
struct KernelTable {
  T (*dot)(const T* a, const T* b, std::size_t n);
  void (*axpy)(std::size_t n, T alpha, const T* x, T* y);
  void (*gemm)(const GemmArgs& args, const T* a, const T* b, T* c);
};

// Per-ISA tables; the vectorized ones are null when not compiled in.
namespace scalar {
extern const KernelTable<float> kFloat;
extern const KernelTable<double> kDouble;
}  // namespace scalar
namespace avx2 {
extern const KernelTable<float>* const kFloat;
extern const KernelTable<double>* const kDouble;
}  // namespace avx2
namespace neon {
extern const KernelTable<float>* const kFloat;
extern const KernelTable<double>* const kDouble;
}  // namespace neon

}  // namespace rmx::simd
