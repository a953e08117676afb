#pragma once

namespace rmx::simd {

struct CpuFeatures {
  bool avx2 = false;
  bool fma = false;
  bool neon = false;
};

CpuFeatures query_cpu_features();

}  // namespace rmx::simd
