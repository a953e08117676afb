#include "rmx/simd/cpu_features.hpp"

namespace rmx::simd {

CpuFeatures query_cpu_features() {
  CpuFeatures f;
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  f.avx2 = __builtin_cpu_supports("avx2");
  f.fma = __builtin_cpu_supports("fma");
#endif
#if defined(__aarch64__)
  f.neon = true;  // baseline on AArch64
#endif
  return f;
}

}  // namespace rmx::simd
