#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "csisense/dataset.hpp"
#include "csisense/kernel_bank.hpp"
#include "csisense/matrix.hpp"

namespace csisense {

// Kernel bank with the bias terms fitted on a training set. Immutable after
// fit_biases; safe to share across threads.
struct FittedBank {
  KernelBankConfig config;
  DilationPlan plan;
  std::vector<Kernel> kernels;
  // One ascending-sorted bias list per (kernel, dilation) pair, in plan
  // order; lengths match the plan's per-step bias counts.
  std::vector<std::vector<double>> biases;
  int subcarriers = 0;  // S the bank was fitted for
};

struct FeatureVector {
  std::vector<double> values;  // length D, every entry in [0, 1]
  int ap_id = 0;
};

// Dilated 1-D convolution of x with w. Padded output has length T (symmetric
// zero padding of (len-1)*d/2 per side), unpadded T-(len-1)*d. Computed
// against the first in-bounds tap as reference so constant inputs produce
// exact zeros.
std::vector<double> convolve_dilated(std::span<const double> x, const Kernel& w, int dilation,
                                     bool padded);

// Sum over subcarriers of the per-subcarrier convolutions. Equal (by
// linearity) to convolving the column-summed series, which is how it is
// computed: one convolution instead of S.
std::vector<double> channel_sum(const Matrix& X, const Kernel& w, int dilation, bool padded);

// Collapses the subcarrier axis: out[t] = sum_s X[s][t].
std::vector<double> column_sums(const Matrix& X);

// Empirical quantile of `sorted` (ascending) at level q in [0,1], linearly
// interpolated between order statistics.
double quantile_sorted(std::span<const double> sorted, double q);

// Quantile levels for J biases: fractional parts of (j+1)*phi, the
// golden-ratio low-discrepancy sequence.
std::vector<double> bias_quantile_levels(int num_biases);

// Fits the per-(kernel, dilation) bias lists: each pair picks one training
// sample (independent seeded stream per pair), convolves it, and takes the
// quantiles of that output at the golden-ratio levels, sorted ascending.
FittedBank fit_biases(std::span<const CsiSample* const> train, const KernelBankConfig& config,
                      const DilationPlan& plan, std::vector<Kernel> kernels, std::uint64_t seed);

// PPV transform of one sample: for each (kernel, dilation, bias) in plan
// order, the fraction of strictly positive entries of channel_sum - bias.
// `out` must have length config.total_features.
void extract_into(const Matrix& amplitudes, const FittedBank& bank, std::span<double> out);

FeatureVector extract(const CsiSample& sample, const FittedBank& bank);

}  // namespace csisense
