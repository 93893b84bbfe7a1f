#include "csisense/kernel_bank.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "csisense/errors.hpp"

namespace csisense {

namespace {

// C(n, k) in 64-bit; inputs here are tiny (n = kernel_length).
std::int64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  std::int64_t r = 1;
  for (int i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
  return r;
}

}  // namespace

int DilationPlan::total_biases() const {
  int total = 0;
  for (const auto& steps : per_kernel)
    for (const auto& s : steps) total += s.num_biases;
  return total;
}

int DilationPlan::num_pairs() const {
  int total = 0;
  for (const auto& steps : per_kernel) total += static_cast<int>(steps.size());
  return total;
}

void validate(const KernelBankConfig& config) {
  // Zero-sum needs twos = length/3 exactly, so the length must be an odd
  // multiple of 3.
  if (config.kernel_length < 3 || config.kernel_length % 2 == 0 ||
      config.kernel_length % 3 != 0)
    throw ConfigError("kernel_length must be an odd multiple of 3, got " +
                      std::to_string(config.kernel_length));
  const std::int64_t expected = binomial(config.kernel_length, config.kernel_length / 3);
  if (config.num_kernels != expected)
    throw ConfigError("num_kernels must be C(kernel_length, kernel_length/3) = " +
                      std::to_string(expected) + ", got " + std::to_string(config.num_kernels));
  if (config.total_features <= 0 || config.total_features % config.num_kernels != 0)
    throw ConfigError("total_features must be a positive multiple of num_kernels");
  if (config.max_dilations_per_kernel < 1)
    throw ConfigError("max_dilations_per_kernel must be >= 1");
}

std::vector<Kernel> generate_kernels(const KernelBankConfig& config) {
  validate(config);
  const int len = config.kernel_length;
  const int twos = len / 3;

  std::vector<Kernel> kernels;
  kernels.reserve(static_cast<std::size_t>(config.num_kernels));

  // Lexicographic enumeration of all `twos`-subsets of {0..len-1}.
  std::vector<int> pos(twos);
  for (int i = 0; i < twos; ++i) pos[i] = i;
  while (true) {
    Kernel k;
    k.weights.assign(len, -1);
    for (int p : pos) k.weights[p] = 2;
    kernels.push_back(std::move(k));

    int i = twos - 1;
    while (i >= 0 && pos[i] == len - twos + i) --i;
    if (i < 0) break;
    ++pos[i];
    for (int j = i + 1; j < twos; ++j) pos[j] = pos[j - 1] + 1;
  }
  return kernels;
}

double max_dilation_exponent(int input_length, int kernel_length) {
  if (input_length < kernel_length)
    throw ShapeError("input length " + std::to_string(input_length) +
                     " shorter than kernel length " + std::to_string(kernel_length));
  return std::log2(static_cast<double>(input_length - 1) /
                   static_cast<double>(kernel_length - 1));
}

DilationPlan build_dilation_plan(const KernelBankConfig& config, int input_length) {
  validate(config);
  const double lmax = max_dilation_exponent(input_length, config.kernel_length);
  const int lprime = config.max_dilations_per_kernel;

  std::vector<int> dilations;
  for (int i = 0; i <= lprime; ++i) {
    const int d = static_cast<int>(std::floor(std::exp2(lmax * i / lprime)));
    if (dilations.empty() || dilations.back() != d) dilations.push_back(d);
  }
  if (static_cast<int>(dilations.size()) > lprime) dilations.resize(lprime);

  // Spread each kernel's budget as evenly as possible; smaller dilations
  // absorb the remainder.
  const int per_kernel = config.features_per_kernel();
  const int num_dil = static_cast<int>(dilations.size());
  const int base = per_kernel / num_dil;
  const int rem = per_kernel % num_dil;

  DilationPlan plan;
  plan.input_length = input_length;
  plan.per_kernel.resize(static_cast<std::size_t>(config.num_kernels));
  int pair_index = 0;
  for (int k = 0; k < config.num_kernels; ++k) {
    auto& steps = plan.per_kernel[k];
    steps.reserve(static_cast<std::size_t>(num_dil));
    for (int i = 0; i < num_dil; ++i) {
      DilationStep s;
      s.dilation = dilations[i];
      s.padded = (pair_index % 2 == 0);
      s.num_biases = base + (i < rem ? 1 : 0);
      steps.push_back(s);
      ++pair_index;
    }
  }
  return plan;
}

}  // namespace csisense
