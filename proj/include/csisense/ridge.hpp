#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "csisense/matrix.hpp"

namespace csisense {

struct RidgeConfig {
  std::vector<double> alphas = {0.001, 0.01, 0.1, 1.0};
  int folds = 5;
  std::uint64_t seed = 0;
  int threads = 1;  // parallelism over (fold, alpha) solves; results identical
};

// One-vs-rest ridge classifier: per-class linear weights over standardized
// features, intercepts, and the standardization statistics baked in at fit
// time. Immutable after fit.
struct RidgeModel {
  std::vector<int> class_labels;      // ascending
  Matrix weights;                     // num_classes x dim
  std::vector<double> intercepts;     // per class
  std::vector<double> feature_means;  // dim
  std::vector<double> feature_scales; // dim, all > 0 (constant columns get 1)
  double alpha = 0.0;                 // winner of the cross-validated grid
};

// Fits OVR ridge with +-1 targets. Features are standardized by training
// mean/std; alpha is chosen by stratified k-fold accuracy (ties go to the
// largest alpha) and the model refit on all rows with the winner.
// Preconditions: rows >= folds >= 2, >= 2 classes, every class has >= folds
// members, all features finite.
RidgeModel fit_ridge(const Matrix& features, const std::vector<int>& labels,
                     const RidgeConfig& config);

std::vector<double> decision_scores(const RidgeModel& model, std::span<const double> features);

// argmax of decision_scores; ties break toward the earliest class label.
int predict(const RidgeModel& model, std::span<const double> features);

// The two algebraic routes to the same minimizer of |ZW - Y|^2 + alpha|W|^2.
// Exposed so equivalence can be checked directly; fit_ridge picks the dual
// route when dim > rows and the primal route otherwise.
Matrix solve_ridge_primal(const Matrix& Z, const Matrix& Y, double alpha);
Matrix solve_ridge_dual(const Matrix& Z, const Matrix& Y, double alpha);

// Deterministic stratified fold assignment; entry i is the fold of row i.
std::vector<int> stratified_folds(const std::vector<int>& labels, int folds, std::uint64_t seed);

}  // namespace csisense
