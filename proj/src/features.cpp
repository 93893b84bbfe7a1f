#include "csisense/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "csisense/errors.hpp"
#include "csisense/rng.hpp"

namespace csisense {

std::vector<double> convolve_dilated(std::span<const double> x, const Kernel& w, int dilation,
                                     bool padded) {
  const int T = static_cast<int>(x.size());
  const int len = static_cast<int>(w.weights.size());
  const int span = (len - 1) * dilation;
  if (dilation < 1) throw ShapeError("dilation must be >= 1");
  if (!padded && span > T - 1)
    throw ShapeError("receptive field " + std::to_string(span + 1) + " exceeds input length " +
                     std::to_string(T));

  const int core_len = T - span;  // windows fully inside the input
  std::vector<double> out;

  // Core positions: accumulate w_m * (x[t + m*d] - x[t]). The kernels sum to
  // zero, so anchoring on the first tap makes constant inputs cancel exactly
  // instead of leaving rounding residue.
  auto core_at = [&](int t) {
    const double ref = x[t];
    double acc = 0.0;
    for (int m = 0; m < len; ++m) acc += w.weights[m] * (x[t + m * dilation] - ref);
    return acc;
  };

  if (!padded) {
    out.resize(static_cast<std::size_t>(core_len));
    for (int t = 0; t < core_len; ++t) out[t] = core_at(t);
    return out;
  }

  const int pad = span / 2;
  out.resize(static_cast<std::size_t>(T));
  // Border positions read zeros outside the input; sum valid taps directly.
  auto border_at = [&](int t) {
    double acc = 0.0;
    for (int m = 0; m < len; ++m) {
      const int i = t - pad + m * dilation;
      if (i >= 0 && i < T) acc += w.weights[m] * x[i];
    }
    return acc;
  };
  for (int t = 0; t < pad && t < T; ++t) out[t] = border_at(t);
  for (int t = 0; t < core_len; ++t) out[pad + t] = core_at(t);
  for (int t = pad + std::max(core_len, 0); t < T; ++t) out[t] = border_at(t);
  return out;
}

std::vector<double> column_sums(const Matrix& X) {
  if (X.rows < 1 || X.cols < 1) throw ShapeError("sample has an empty axis");
  std::vector<double> sums(static_cast<std::size_t>(X.cols), 0.0);
  for (int s = 0; s < X.rows; ++s) {
    const double* row = X.data.data() + static_cast<std::size_t>(s) * X.cols;
    for (int t = 0; t < X.cols; ++t) sums[t] += row[t];
  }
  return sums;
}

std::vector<double> channel_sum(const Matrix& X, const Kernel& w, int dilation, bool padded) {
  return convolve_dilated(column_sums(X), w, dilation, padded);
}

double quantile_sorted(std::span<const double> sorted, double q) {
  const std::size_t n = sorted.size();
  if (n == 0) throw DataError("quantile of empty data");
  if (n == 1) return sorted[0];
  const double h = q * static_cast<double>(n - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= n) return sorted[n - 1];
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

std::vector<double> bias_quantile_levels(int num_biases) {
  constexpr double phi = std::numbers::phi_v<double>;
  std::vector<double> levels(static_cast<std::size_t>(num_biases));
  for (int j = 0; j < num_biases; ++j) {
    const double v = (j + 1) * phi;
    levels[j] = v - std::floor(v);
  }
  return levels;
}

FittedBank fit_biases(std::span<const CsiSample* const> train, const KernelBankConfig& config,
                      const DilationPlan& plan, std::vector<Kernel> kernels,
                      std::uint64_t seed) {
  if (train.empty()) throw FitError("bias fitting needs a non-empty training set");
  const int S = train[0]->amplitudes.rows;
  const int T = train[0]->amplitudes.cols;
  if (T != plan.input_length)
    throw ShapeError("plan built for T=" + std::to_string(plan.input_length) +
                     " but training samples have T=" + std::to_string(T));
  for (const CsiSample* s : train)
    if (s->amplitudes.rows != S || s->amplitudes.cols != T)
      throw ShapeError("training samples disagree on S x T");

  // Column sums are reused across every (kernel, dilation) pair that picks
  // the same sample; compute lazily.
  std::vector<std::vector<double>> sums(train.size());
  auto summed = [&](std::size_t i) -> const std::vector<double>& {
    if (sums[i].empty()) sums[i] = column_sums(train[i]->amplitudes);
    return sums[i];
  };

  FittedBank bank;
  bank.config = config;
  bank.plan = plan;
  bank.kernels = std::move(kernels);
  bank.subcarriers = S;
  bank.biases.reserve(static_cast<std::size_t>(plan.num_pairs()));

  int pair_index = 0;
  for (std::size_t k = 0; k < plan.per_kernel.size(); ++k) {
    for (const DilationStep& step : plan.per_kernel[k]) {
      // Independent stream per pair: a parallel fit would draw identically.
      Rng rng(mix_seed(seed, 0xb1a5, static_cast<std::uint64_t>(pair_index)));
      const std::size_t pick = rng.next_below(train.size());
      std::vector<double> u =
          convolve_dilated(summed(pick), bank.kernels[k], step.dilation, step.padded);
      std::sort(u.begin(), u.end());

      std::vector<double> b(static_cast<std::size_t>(step.num_biases));
      const std::vector<double> levels = bias_quantile_levels(step.num_biases);
      for (int j = 0; j < step.num_biases; ++j) b[j] = quantile_sorted(u, levels[j]);
      std::sort(b.begin(), b.end());
      bank.biases.push_back(std::move(b));
      ++pair_index;
    }
  }
  return bank;
}

void extract_into(const Matrix& amplitudes, const FittedBank& bank, std::span<double> out) {
  if (amplitudes.rows != bank.subcarriers || amplitudes.cols != bank.plan.input_length)
    throw ShapeError("sample is " + std::to_string(amplitudes.rows) + "x" +
                     std::to_string(amplitudes.cols) + " but bank expects " +
                     std::to_string(bank.subcarriers) + "x" +
                     std::to_string(bank.plan.input_length));
  if (static_cast<int>(out.size()) != bank.config.total_features)
    throw ShapeError("output span length != total_features");

  const std::vector<double> sums = column_sums(amplitudes);

  std::size_t offset = 0;
  int pair_index = 0;
  for (std::size_t k = 0; k < bank.plan.per_kernel.size(); ++k) {
    for (const DilationStep& step : bank.plan.per_kernel[k]) {
      const std::vector<double> v =
          convolve_dilated(sums, bank.kernels[k], step.dilation, step.padded);
      const std::vector<double>& b = bank.biases[pair_index];
      const int J = step.num_biases;

      // counts[j] = #{i : v[i] > b[j]}. Biases are sorted, so bucket each
      // element by how many biases it exceeds, then suffix-sum.
      std::vector<int> bucket(static_cast<std::size_t>(J) + 1, 0);
      for (double vi : v) {
        // strictly-greater count: first index with b[idx] >= vi
        const auto it = std::lower_bound(b.begin(), b.end(), vi);
        ++bucket[static_cast<std::size_t>(it - b.begin())];
      }
      const double inv = 1.0 / static_cast<double>(v.size());
      int above = 0;
      for (int j = J; j >= 1; --j) {
        above += bucket[static_cast<std::size_t>(j)];
        out[offset + static_cast<std::size_t>(j) - 1] = above * inv;
      }
      offset += static_cast<std::size_t>(J);
      ++pair_index;
    }
  }
}

FeatureVector extract(const CsiSample& sample, const FittedBank& bank) {
  FeatureVector f;
  f.ap_id = sample.ap_id;
  f.values.resize(static_cast<std::size_t>(bank.config.total_features));
  extract_into(sample.amplitudes, bank, f.values);
  return f;
}

}  // namespace csisense
