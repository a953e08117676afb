#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <string_view>

#include "rmx/simd/cpu_features.hpp"
#include "rmx/simd/kernels.hpp"

namespace rmx::simd {

namespace {

Isa initial_isa() {
  const char* env = std::getenv("RMX_SIMD");
  const std::string_view want = env != nullptr ? env : "auto";
  if (want == "scalar") return Isa::kScalar;
  if (want == "avx2" && isa_supported(Isa::kAvx2)) return Isa::kAvx2;
  if (want == "neon" && isa_supported(Isa::kNeon)) return Isa::kNeon;
  return detected_isa();
}

std::atomic<Isa>& active_slot() {
  static std::atomic<Isa> slot{initial_isa()};
  return slot;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
    case Isa::kNeon:
      return "neon";
  }
  return "unknown";
}

bool isa_supported(Isa isa) {
  static const CpuFeatures cpu = query_cpu_features();
  switch (isa) {
    case Isa::kScalar:
      return true;
    case Isa::kAvx2:
      return avx2::kFloat != nullptr && cpu.avx2 && cpu.fma;
    case Isa::kNeon:
      return neon::kFloat != nullptr && cpu.neon;
  }
  return false;
}

Isa detected_isa() {
  if (isa_supported(Isa::kAvx2)) return Isa::kAvx2;
  if (isa_supported(Isa::kNeon)) return Isa::kNeon;
  return Isa::kScalar;
}

Isa active_isa() { return active_slot().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) {
  if (!isa_supported(isa)) {
    throw std::invalid_argument("SIMD variant '" + std::string(isa_name(isa)) +
                                "' is not available on this CPU/build");
  }
  active_slot().store(isa, std::memory_order_relaxed);
}

template <>
const KernelTable<float>& table_for<float>(Isa isa) {
  switch (isa) {
    case Isa::kAvx2:
      if (avx2::kFloat != nullptr) return *avx2::kFloat;
      break;
    case Isa::kNeon:
      if (neon::kFloat != nullptr) return *neon::kFloat;
      break;
    case Isa::kScalar:
      break;
  }
  return scalar::kFloat;
}

template <>
const KernelTable<double>& table_for<double>(Isa isa) {
  switch (isa) {
    case Isa::kAvx2:
      if (avx2::kDouble != nullptr) return *avx2::kDouble;
      break;
    case Isa::kNeon:
      if (neon::kDouble != nullptr) return *neon::kDouble;
      break;
    case Isa::kScalar:
      break;
  }
  return scalar::kDouble;
}

template <>
const KernelTable<float>& active_table<float>() {
  return table_for<float>(active_isa());
}

template <>
const KernelTable<double>& active_table<double>() {
  return table_for<double>(active_isa());
}

}  // namespace rmx::simd
