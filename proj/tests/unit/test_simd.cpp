#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "rmx/simd/cpu_features.hpp"
#include "rmx/simd/kernels.hpp"

using namespace rmx::simd;

namespace {

std::vector<Isa> available() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::kScalar, Isa::kAvx2, Isa::kNeon}) {
    if (isa_supported(isa)) out.push_back(isa);
  }
  return out;
}

template <typename T>
std::vector<T> random_values(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<T> v(n);
  for (T& x : v) x = static_cast<T>(u(rng));
  return v;
}

// Plain triple loop in double.
template <typename T>
std::vector<double> oracle_gemm(const GemmArgs& g, const std::vector<T>& a,
                                const std::vector<T>& b, const std::vector<T>& c0) {
  std::vector<double> c(c0.begin(), c0.end());
  for (std::size_t i = 0; i < g.m; ++i) {
    for (std::size_t j = 0; j < g.n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < g.k; ++p) {
        const double av = g.trans_a ? a[p * g.lda + i] : a[i * g.lda + p];
        const double bv = g.trans_b ? b[j * g.ldb + p] : b[p * g.ldb + j];
        s += av * bv;
      }
      double& out = c[i * g.ldc + j];
      out = g.accumulate ? out + s : s;
    }
  }
  return c;
}

template <typename T>
void check_gemm_case(std::size_t m, std::size_t n, std::size_t k, bool ta, bool tb,
                     bool acc, std::mt19937_64& rng) {
  GemmArgs g;
  g.trans_a = ta;
  g.trans_b = tb;
  g.m = m;
  g.n = n;
  g.k = k;
  // Padded leading dimensions exercise the strides.
  g.lda = (ta ? m : k) + 3;
  g.ldb = (tb ? k : n) + 1;
  g.ldc = n + 2;
  g.accumulate = acc;
  const auto a = random_values<T>((ta ? k : m) * g.lda + 1, rng);
  const auto b = random_values<T>((tb ? n : k) * g.ldb + 1, rng);
  const auto c0 = random_values<T>(m * g.ldc + 1, rng);
  const auto want = oracle_gemm(g, a, b, c0);
  const double tol = std::is_same_v<T, float> ? 2e-5 : 1e-12;
  for (Isa isa : available()) {
    auto c = c0;
    table_for<T>(isa).gemm(g, a.data(), b.data(), c.data());
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < g.ldc; ++j) {
        const std::size_t idx = i * g.ldc + j;
        if (j >= n) {
          REQUIRE(c[idx] == c0[idx]);  // padding untouched
        } else {
          const double scale = 1.0 + std::sqrt(static_cast<double>(k));
          INFO(isa_name(isa), " m=", m, " n=", n, " k=", k, " ta=", ta, " tb=", tb);
          REQUIRE(std::abs(c[idx] - want[idx]) <= tol * scale);
        }
      }
    }
  }
}

}  // namespace

TEST_SUITE("simd") {

TEST_CASE("scalar is always available and detection is consistent") {
  CHECK(isa_supported(Isa::kScalar));
  CHECK(isa_supported(detected_isa()));
  const auto f = query_cpu_features();
  if (isa_supported(Isa::kAvx2)) CHECK((f.avx2 && f.fma));
}

TEST_CASE("scoped override restores the previous isa") {
  const Isa before = active_isa();
  {
    ScopedIsa s(Isa::kScalar);
    CHECK(active_isa() == Isa::kScalar);
    CHECK(&active_table<float>() == &table_for<float>(Isa::kScalar));
  }
  CHECK(active_isa() == before);
  if (!isa_supported(Isa::kNeon)) CHECK_THROWS(set_active_isa(Isa::kNeon));
}

TEST_CASE("dot and axpy agree across isas") {
  std::mt19937_64 rng(3);
  for (std::size_t n : {0u, 1u, 3u, 7u, 8u, 9u, 15u, 16u, 17u, 31u, 64u, 100u, 1001u}) {
    const auto a = random_values<float>(n, rng), b = random_values<float>(n, rng);
    const auto ad = random_values<double>(n, rng), bd = random_values<double>(n, rng);
    double wf = 0.0, wd = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      wf += static_cast<double>(a[i]) * b[i];
      wd += ad[i] * bd[i];
    }
    for (Isa isa : available()) {
      CHECK(std::abs(table_for<float>(isa).dot(a.data(), b.data(), n) - wf) < 1e-4);
      CHECK(std::abs(table_for<double>(isa).dot(ad.data(), bd.data(), n) - wd) < 1e-12);
      auto y = b;
      table_for<float>(isa).axpy(n, 0.5f, a.data(), y.data());
      for (std::size_t i = 0; i < n; ++i) CHECK(y[i] == doctest::Approx(b[i] + 0.5f * a[i]).epsilon(1e-6));
    }
  }
}

TEST_CASE("gemm matches a double oracle for every transpose and edge size") {
  std::mt19937_64 rng(5);
  const std::size_t sizes[] = {1, 2, 3, 4, 5, 7, 8, 9, 16, 17, 33};
  for (bool ta : {false, true}) {
    for (bool tb : {false, true}) {
      for (bool acc : {false, true}) {
        for (std::size_t m : sizes) {
          for (std::size_t n : {1u, 8u, 15u, 17u}) {
            check_gemm_case<float>(m, n, (m * 7 + n) % 13 + 1, ta, tb, acc, rng);
            check_gemm_case<double>(m, n, (m * 5 + n) % 11 + 1, ta, tb, acc, rng);
          }
        }
      }
    }
  }
}

TEST_CASE("gemm on block-crossing sizes") {
  std::mt19937_64 rng(6);
  for (bool ta : {false, true}) {
    for (bool tb : {false, true}) {
      check_gemm_case<float>(70, 300, 260, ta, tb, false, rng);
      check_gemm_case<float>(65, 129, 513, ta, tb, true, rng);
    }
  }
}

TEST_CASE("gemm with k == 0") {
  GemmArgs g;
  g.m = 3;
  g.n = 5;
  g.k = 0;
  g.lda = 1;
  g.ldb = 5;
  g.ldc = 5;
  for (Isa isa : available()) {
    std::vector<float> c(15, 7.0f);
    table_for<float>(isa).gemm(g, nullptr, nullptr, c.data());
    for (float v : c) CHECK(v == 0.0f);
    g.accumulate = true;
    std::fill(c.begin(), c.end(), 7.0f);
    table_for<float>(isa).gemm(g, nullptr, nullptr, c.data());
    for (float v : c) CHECK(v == 7.0f);
    g.accumulate = false;
  }
}

}  // TEST_SUITE
