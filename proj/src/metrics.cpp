#include "csisense/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "csisense/errors.hpp"

namespace csisense {

ConfusionMatrix::ConfusionMatrix(std::vector<int> classes)
    : class_order(std::move(classes)),
      counts(class_order.size() * class_order.size(), 0) {
  if (class_order.empty()) throw MetricError("confusion matrix needs at least one class");
}

void ConfusionMatrix::add(int true_class, int predicted_class) {
  const auto t = std::find(class_order.begin(), class_order.end(), true_class);
  const auto p = std::find(class_order.begin(), class_order.end(), predicted_class);
  if (t == class_order.end() || p == class_order.end())
    throw MetricError("label outside the class order");
  counts[static_cast<std::size_t>(t - class_order.begin()) * class_order.size() +
         static_cast<std::size_t>(p - class_order.begin())]++;
}

std::int64_t ConfusionMatrix::total() const {
  std::int64_t n = 0;
  for (auto c : counts) n += c;
  return n;
}

namespace {

void check_nonempty(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw MetricError("empty confusion matrix");
}

std::vector<std::int64_t> row_sums(const ConfusionMatrix& cm) {
  std::vector<std::int64_t> r(static_cast<std::size_t>(cm.num_classes()), 0);
  for (int i = 0; i < cm.num_classes(); ++i)
    for (int j = 0; j < cm.num_classes(); ++j) r[static_cast<std::size_t>(i)] += cm.at(i, j);
  return r;
}

std::vector<std::int64_t> col_sums(const ConfusionMatrix& cm) {
  std::vector<std::int64_t> c(static_cast<std::size_t>(cm.num_classes()), 0);
  for (int i = 0; i < cm.num_classes(); ++i)
    for (int j = 0; j < cm.num_classes(); ++j) c[static_cast<std::size_t>(j)] += cm.at(i, j);
  return c;
}

}  // namespace

double accuracy(const ConfusionMatrix& cm) {
  check_nonempty(cm);
  std::int64_t diag = 0;
  for (int i = 0; i < cm.num_classes(); ++i) diag += cm.at(i, i);
  return static_cast<double>(diag) / static_cast<double>(cm.total());
}

double balanced_accuracy(const ConfusionMatrix& cm) {
  check_nonempty(cm);
  const auto rows = row_sums(cm);
  double sum = 0.0;
  for (int i = 0; i < cm.num_classes(); ++i) {
    if (rows[static_cast<std::size_t>(i)] == 0)
      throw MetricError("balanced accuracy needs every true class populated");
    sum += static_cast<double>(cm.at(i, i)) /
           static_cast<double>(rows[static_cast<std::size_t>(i)]);
  }
  return sum / cm.num_classes();
}

double f1_macro(const ConfusionMatrix& cm) {
  check_nonempty(cm);
  const auto rows = row_sums(cm);
  const auto cols = col_sums(cm);
  double sum = 0.0;
  int considered = 0;
  for (int i = 0; i < cm.num_classes(); ++i) {
    const std::int64_t support = rows[static_cast<std::size_t>(i)];
    const std::int64_t predicted = cols[static_cast<std::size_t>(i)];
    if (support == 0 && predicted == 0) continue;  // class absent entirely
    ++considered;
    const std::int64_t tp = cm.at(i, i);
    const std::int64_t denom = support + predicted;  // 2tp + fp + fn
    if (denom > 0 && tp > 0) sum += 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
  }
  return considered > 0 ? sum / considered : 0.0;
}

double mcc(const ConfusionMatrix& cm) {
  check_nonempty(cm);
  const auto rows = row_sums(cm);
  const auto cols = col_sums(cm);
  const double s = static_cast<double>(cm.total());
  double trace = 0.0, pt = 0.0, pp = 0.0, tt = 0.0;
  for (int i = 0; i < cm.num_classes(); ++i) {
    trace += static_cast<double>(cm.at(i, i));
    const double p = static_cast<double>(cols[static_cast<std::size_t>(i)]);
    const double t = static_cast<double>(rows[static_cast<std::size_t>(i)]);
    pt += p * t;
    pp += p * p;
    tt += t * t;
  }
  const double num = trace * s - pt;
  const double den = std::sqrt((s * s - pp) * (s * s - tt));
  return den > 0.0 ? num / den : 0.0;
}

std::vector<double> per_class_accuracy(const ConfusionMatrix& cm) {
  check_nonempty(cm);
  const auto rows = row_sums(cm);
  std::vector<double> out(static_cast<std::size_t>(cm.num_classes()), 0.0);
  for (int i = 0; i < cm.num_classes(); ++i) {
    const std::int64_t support = rows[static_cast<std::size_t>(i)];
    out[static_cast<std::size_t>(i)] =
        support > 0 ? static_cast<double>(cm.at(i, i)) / static_cast<double>(support) : 0.0;
  }
  return out;
}

TaskMetrics task_metrics(const ConfusionMatrix& cm) {
  TaskMetrics m;
  m.acc = accuracy(cm);
  m.bacc = balanced_accuracy(cm);
  m.f1 = f1_macro(cm);
  m.mcc = mcc(cm);
  m.per_class = per_class_accuracy(cm);
  return m;
}

MeanStd aggregate(const std::vector<double>& values) {
  if (values.empty()) throw MetricError("aggregate of no values");
  MeanStd ms;
  for (double v : values) ms.mean += v;
  ms.mean /= static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - ms.mean) * (v - ms.mean);
  ms.std = std::sqrt(sq / static_cast<double>(values.size()));
  return ms;
}

AggregateReport aggregate_task(const std::vector<TaskMetrics>& runs) {
  if (runs.empty()) throw MetricError("aggregate of no runs");
  auto collect = [&](auto getter) {
    std::vector<double> v;
    v.reserve(runs.size());
    for (const TaskMetrics& r : runs) v.push_back(getter(r));
    return aggregate(v);
  };
  AggregateReport agg;
  agg.acc = collect([](const TaskMetrics& r) { return r.acc; });
  agg.bacc = collect([](const TaskMetrics& r) { return r.bacc; });
  agg.f1 = collect([](const TaskMetrics& r) { return r.f1; });
  agg.mcc = collect([](const TaskMetrics& r) { return r.mcc; });
  const std::size_t classes = runs[0].per_class.size();
  for (std::size_t c = 0; c < classes; ++c) {
    std::vector<double> v;
    v.reserve(runs.size());
    for (const TaskMetrics& r : runs) v.push_back(r.per_class.at(c));
    agg.per_class.push_back(aggregate(v));
  }
  return agg;
}

}  // namespace csisense
