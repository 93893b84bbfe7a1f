#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "csisense/errors.hpp"
#include "csisense/kernel_bank.hpp"

using namespace csisense;

TEST_CASE("default config enumerates 84 distinct length-9 kernels") {
  const auto kernels = generate_kernels(KernelBankConfig{});
  CHECK(kernels.size() == 84);

  // exhaustive enumeration oracle: all 3-subsets of 9 positions
  std::set<std::vector<int>> expected;
  for (int a = 0; a < 9; ++a)
    for (int b = a + 1; b < 9; ++b)
      for (int c = b + 1; c < 9; ++c) {
        std::vector<int> w(9, -1);
        w[a] = w[b] = w[c] = 2;
        expected.insert(w);
      }
  CHECK(expected.size() == 84);

  std::set<std::vector<int>> got;
  for (const Kernel& k : kernels) {
    CHECK(k.weights.size() == 9);
    int sum = 0, twos = 0;
    for (int w : k.weights) {
      sum += w;
      if (w == 2) ++twos;
      CHECK((w == 2 || w == -1));
    }
    CHECK(sum == 0);
    CHECK(twos == 3);
    got.insert(k.weights);
  }
  CHECK(got == expected);
}

TEST_CASE("kernel enumeration is deterministic and seed-independent") {
  KernelBankConfig a, b;
  a.seed = 1;
  b.seed = 999;
  const auto ka = generate_kernels(a);
  const auto kb = generate_kernels(b);
  REQUIRE(ka.size() == kb.size());
  for (std::size_t i = 0; i < ka.size(); ++i) CHECK(ka[i].weights == kb[i].weights);
  // lexicographic order of 2-positions
  CHECK(ka.front().weights == std::vector<int>{2, 2, 2, -1, -1, -1, -1, -1, -1});
  CHECK(ka.back().weights == std::vector<int>{-1, -1, -1, -1, -1, -1, 2, 2, 2});
}

TEST_CASE("config validation") {
  KernelBankConfig cfg;
  cfg.kernel_length = 8;  // even
  CHECK_THROWS_AS(generate_kernels(cfg), ConfigError);
  cfg = KernelBankConfig{};
  cfg.num_kernels = 83;  // not C(9,3)
  CHECK_THROWS_AS(generate_kernels(cfg), ConfigError);
  cfg = KernelBankConfig{};
  cfg.total_features = 9995;  // not a multiple of 84
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg = KernelBankConfig{};
  cfg.max_dilations_per_kernel = 0;
  CHECK_THROWS_AS(validate(cfg), ConfigError);

  // lengths that cannot sum to zero are rejected
  cfg = KernelBankConfig{};
  cfg.kernel_length = 5;
  cfg.num_kernels = 5;
  cfg.total_features = 5 * 7;
  CHECK_THROWS_AS(validate(cfg), ConfigError);

  // length 3 works: C(3,1) = 3 kernels, each one 2 and two -1
  cfg = KernelBankConfig{};
  cfg.kernel_length = 3;
  cfg.num_kernels = 3;
  cfg.total_features = 3 * 7;
  CHECK_NOTHROW(validate(cfg));
  const auto k3 = generate_kernels(cfg);
  CHECK(k3.size() == 3);
  for (const Kernel& k : k3) {
    int sum = 0;
    for (int w : k.weights) sum += w;
    CHECK(sum == 0);
  }
}

TEST_CASE("max dilation exponent") {
  CHECK(max_dilation_exponent(9, 9) == doctest::Approx(0.0));
  CHECK(max_dilation_exponent(512, 9) == doctest::Approx(std::log2(511.0 / 8.0)).epsilon(1e-12));
  CHECK(max_dilation_exponent(512, 9) == doctest::Approx(5.99718).epsilon(1e-5));
  CHECK(max_dilation_exponent(257, 9) == 5.0);  // power-of-two ratio, exact
  CHECK_THROWS_AS(max_dilation_exponent(8, 9), ShapeError);
}

TEST_CASE("dilation plan at T = kernel_length collapses to dilation 1") {
  const KernelBankConfig cfg;
  const DilationPlan plan = build_dilation_plan(cfg, 9);
  CHECK(plan.input_length == 9);
  REQUIRE(plan.per_kernel.size() == 84);
  for (const auto& steps : plan.per_kernel) {
    REQUIRE(steps.size() == 1);
    CHECK(steps[0].dilation == 1);
    CHECK(steps[0].num_biases == 119);
  }
  CHECK(plan.total_biases() == 9996);
}

TEST_CASE("dilation plan budget and receptive field bound") {
  const KernelBankConfig cfg;
  for (int T : {64, 100, 256, 500, 512, 2048}) {
    const DilationPlan plan = build_dilation_plan(cfg, T);
    CHECK(plan.total_biases() == cfg.total_features);
    for (const auto& steps : plan.per_kernel) {
      CHECK(!steps.empty());
      CHECK(static_cast<int>(steps.size()) <= cfg.max_dilations_per_kernel);
      int prev = 0;
      int kernel_budget = 0;
      for (const DilationStep& s : steps) {
        CHECK(s.dilation >= 1);
        CHECK(s.dilation >= prev);  // nondecreasing
        CHECK(8 * s.dilation <= T - 1);
        CHECK(s.num_biases >= 0);
        kernel_budget += s.num_biases;
        prev = s.dilation;
      }
      CHECK(kernel_budget == cfg.features_per_kernel());
    }
  }
}

TEST_CASE("plans are bit-identical across calls") {
  const KernelBankConfig cfg;
  const DilationPlan a = build_dilation_plan(cfg, 256);
  const DilationPlan b = build_dilation_plan(cfg, 256);
  REQUIRE(a.per_kernel.size() == b.per_kernel.size());
  for (std::size_t k = 0; k < a.per_kernel.size(); ++k) {
    REQUIRE(a.per_kernel[k].size() == b.per_kernel[k].size());
    for (std::size_t i = 0; i < a.per_kernel[k].size(); ++i) {
      CHECK(a.per_kernel[k][i].dilation == b.per_kernel[k][i].dilation);
      CHECK(a.per_kernel[k][i].padded == b.per_kernel[k][i].padded);
      CHECK(a.per_kernel[k][i].num_biases == b.per_kernel[k][i].num_biases);
    }
  }
}

TEST_CASE("padding alternates over the global pair index") {
  const DilationPlan plan = build_dilation_plan(KernelBankConfig{}, 256);
  int pair = 0;
  for (const auto& steps : plan.per_kernel)
    for (const DilationStep& s : steps) {
      CHECK(s.padded == (pair % 2 == 0));
      ++pair;
    }
}

TEST_CASE("earlier dilations absorb the remainder") {
  // T=256 gives several dilations; 119 split over them leaves a remainder
  const DilationPlan plan = build_dilation_plan(KernelBankConfig{}, 256);
  const auto& steps = plan.per_kernel[0];
  const int L = static_cast<int>(steps.size());
  REQUIRE(L > 1);
  const int base = 119 / L, rem = 119 % L;
  for (int i = 0; i < L; ++i) CHECK(steps[static_cast<std::size_t>(i)].num_biases == base + (i < rem ? 1 : 0));
}

TEST_CASE("plan rejects inputs shorter than the kernel") {
  CHECK_THROWS_AS(build_dilation_plan(KernelBankConfig{}, 8), ShapeError);
}
