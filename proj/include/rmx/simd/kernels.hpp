#pragma once

// Dense inner-loop kernels used by the neural core. Every kernel has a
// scalar reference implementation plus vectorized variants; the variant is
// picked once at runtime from the CPU features, or forced with the RMX_SIMD
// environment variable (scalar | avx2 | neon | auto).

#include <cstddef>
#include <string_view>

#include "rmx/simd/kernel_types.hpp"

namespace rmx::simd {

enum class Isa { kScalar, kAvx2, kNeon };

std::string_view isa_name(Isa isa);
/// Best ISA this CPU and build support.
Isa detected_isa();
bool isa_supported(Isa isa);
/// ISA used by the dispatching entry points below.
Isa active_isa();
/// Throws std::invalid_argument when the CPU or build lacks `isa`.
void set_active_isa(Isa isa);

/// RAII override of the active ISA, restoring the previous one on exit.
class ScopedIsa {
 public:
  explicit ScopedIsa(Isa isa) : saved_(active_isa()) { set_active_isa(isa); }
  ~ScopedIsa() { set_active_isa(saved_); }
  ScopedIsa(const ScopedIsa&) = delete;
  ScopedIsa& operator=(const ScopedIsa&) = delete;

 private:
  Isa saved_;
};

template <typename T>
const KernelTable<T>& table_for(Isa isa);

template <typename T>
const KernelTable<T>& active_table();

template <typename T>
inline T dot(const T* a, const T* b, std::size_t n) {
  return active_table<T>().dot(a, b, n);
}

template <typename T>
inline void axpy(std::size_t n, T alpha, const T* x, T* y) {
  active_table<T>().axpy(n, alpha, x, y);
}

template <typename T>
inline void gemm(const GemmArgs& args, const T* a, const T* b, T* c) {
  active_table<T>().gemm(args, a, b, c);
}

}  // namespace rmx::simd
