#pragma once

#include <cstdint>
#include <vector>

#include "csisense/matrix.hpp"

namespace csisense {

// Square count matrix, rows = true class, columns = predicted class, both in
// class_order.
struct ConfusionMatrix {
  std::vector<int> class_order;
  std::vector<std::int64_t> counts;  // row-major, size C*C

  explicit ConfusionMatrix(std::vector<int> classes);
  void add(int true_class, int predicted_class);

  int num_classes() const { return static_cast<int>(class_order.size()); }
  std::int64_t at(int true_idx, int pred_idx) const {
    return counts[static_cast<std::size_t>(true_idx) * class_order.size() + pred_idx];
  }
  std::int64_t total() const;
};

double accuracy(const ConfusionMatrix& cm);
// Mean per-class recall; every true class must have at least one sample.
double balanced_accuracy(const ConfusionMatrix& cm);
// Unweighted mean of per-class F1. Classes absent from both axes are
// excluded; present classes with no true positives contribute 0.
double f1_macro(const ConfusionMatrix& cm);
// Multiclass Matthews correlation (covariance form). Degenerate
// denominators (constant truth or constant predictions) give 0.
double mcc(const ConfusionMatrix& cm);
// Recall per class: diagonal over row sum.
std::vector<double> per_class_accuracy(const ConfusionMatrix& cm);

struct TaskMetrics {
  double acc = 0.0;
  double bacc = 0.0;
  double f1 = 0.0;
  double mcc = 0.0;
  std::vector<double> per_class;
};

TaskMetrics task_metrics(const ConfusionMatrix& cm);

struct RunReport {
  std::uint64_t run_seed = 0;
  TaskMetrics activity;
  TaskMetrics orientation;
};

// Arithmetic mean and population (n-divisor) standard deviation.
struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

MeanStd aggregate(const std::vector<double>& values);

struct AggregateReport {
  MeanStd acc, bacc, f1, mcc;
  std::vector<MeanStd> per_class;
};

AggregateReport aggregate_task(const std::vector<TaskMetrics>& runs);

}  // namespace csisense
