#pragma once

#include <cstdint>
#include <vector>

namespace csisense {

// Structural parameters of the random-kernel transform.
//
// The kernel set is the exhaustive enumeration of placements of
// kernel_length/3 weights of value 2 among weights of value -1, so
// num_kernels must equal C(kernel_length, kernel_length/3): 84 for the
// default length 9. total_features is split evenly across kernels and
// must be a multiple of num_kernels (9996 = 84 * 119).
struct KernelBankConfig {
  int kernel_length = 9;
  int num_kernels = 84;             // K
  int max_dilations_per_kernel = 32;  // L'
  int total_features = 9996;        // D
  std::uint64_t seed = 0;

  int features_per_kernel() const { return total_features / num_kernels; }
};

// One convolution kernel: kernel_length weights, each -1 or 2, summing to 0.
struct Kernel {
  std::vector<int> weights;
};

// One (dilation, padding, bias-count) step of a kernel's schedule.
struct DilationStep {
  int dilation = 1;
  bool padded = false;
  int num_biases = 0;  // J for this (kernel, dilation) pair
};

// Per-kernel dilation schedule for a fixed input length T. The total bias
// count over all steps of all kernels equals total_features exactly.
struct DilationPlan {
  int input_length = 0;  // T
  std::vector<std::vector<DilationStep>> per_kernel;

  int total_biases() const;
  int num_pairs() const;  // number of (kernel, dilation) pairs
};

// Throws ConfigError when the invariants above do not hold.
void validate(const KernelBankConfig& config);

// Enumerates all num_kernels distinct kernels in lexicographic order of the
// positions holding the value 2. Independent of config.seed.
std::vector<Kernel> generate_kernels(const KernelBankConfig& config);

// log2((T-1)/(kernel_length-1)); the largest dilation exponent for which the
// receptive field still fits the input. Throws ShapeError when T < kernel_length.
double max_dilation_exponent(int input_length, int kernel_length);

// Evaluates the dilation ladder floor(2^(i*Lmax/L')) for i = 0..L' inclusive,
// deduplicates, caps at L' distinct values, and distributes each kernel's
// feature budget across its dilations (earliest dilations take the remainder).
// Padding alternates on/off over the global (kernel, dilation) pair index.
DilationPlan build_dilation_plan(const KernelBankConfig& config, int input_length);

}  // namespace csisense
