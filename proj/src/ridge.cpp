#include "csisense/ridge.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>
#include <thread>
#include <utility>

#include "csisense/errors.hpp"
#include "csisense/rng.hpp"

namespace csisense {

namespace {

using EMatrix = Eigen::MatrixXd;
using RowMajorMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

EMatrix to_eigen(const Matrix& m) {
  return RowMajorMap(m.data.data(), m.rows, m.cols);
}

Matrix from_eigen(const EMatrix& m) {
  Matrix out(static_cast<int>(m.rows()), static_cast<int>(m.cols()));
  for (int r = 0; r < out.rows; ++r)
    for (int c = 0; c < out.cols; ++c) out.at(r, c) = m(r, c);
  return out;
}

struct Standardization {
  std::vector<double> means;
  std::vector<double> scales;
};

// Column means and population stds. Constant columns are detected by exact
// min == max so they standardize to exact zeros (scale 1) instead of
// amplified rounding residue.
Standardization compute_standardization(const Matrix& F) {
  const int n = F.rows, d = F.cols;
  Standardization st;
  st.means.assign(static_cast<std::size_t>(d), 0.0);
  st.scales.assign(static_cast<std::size_t>(d), 1.0);
  std::vector<double> mins(F.row(0).begin(), F.row(0).end());
  std::vector<double> maxs = mins;
  std::vector<double> sums(static_cast<std::size_t>(d), 0.0);
  for (int r = 0; r < n; ++r) {
    auto row = F.row(r);
    for (int c = 0; c < d; ++c) {
      const double v = row[c];
      mins[c] = std::min(mins[c], v);
      maxs[c] = std::max(maxs[c], v);
      sums[c] += v;
    }
  }
  std::vector<double> sq(static_cast<std::size_t>(d), 0.0);
  for (int c = 0; c < d; ++c) st.means[c] = sums[c] / n;
  for (int r = 0; r < n; ++r) {
    auto row = F.row(r);
    for (int c = 0; c < d; ++c) {
      const double dv = row[c] - st.means[c];
      sq[c] += dv * dv;
    }
  }
  for (int c = 0; c < d; ++c) {
    if (mins[c] == maxs[c]) {
      st.means[c] = mins[c];
      st.scales[c] = 1.0;
    } else {
      const double sd = std::sqrt(sq[c] / n);
      st.scales[c] = sd > 0.0 ? sd : 1.0;
    }
  }
  return st;
}

EMatrix standardized(const Matrix& F, const Standardization& st) {
  EMatrix Z(F.rows, F.cols);
  for (int r = 0; r < F.rows; ++r) {
    auto row = F.row(r);
    for (int c = 0; c < F.cols; ++c) Z(r, c) = (row[c] - st.means[c]) / st.scales[c];
  }
  return Z;
}

// +-1 one-vs-rest target matrix in class_labels order.
EMatrix ovr_targets(const std::vector<int>& labels, const std::vector<int>& class_labels) {
  EMatrix Y(static_cast<Eigen::Index>(labels.size()),
            static_cast<Eigen::Index>(class_labels.size()));
  Y.setConstant(-1.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto it = std::lower_bound(class_labels.begin(), class_labels.end(), labels[i]);
    Y(static_cast<Eigen::Index>(i), it - class_labels.begin()) = 1.0;
  }
  return Y;
}

int argmax_earliest(const Eigen::Ref<const Eigen::RowVectorXd>& scores) {
  int best = 0;
  for (int c = 1; c < scores.size(); ++c)
    if (scores(c) > scores(best)) best = c;
  return best;
}

}  // namespace

Matrix solve_ridge_primal(const Matrix& Z, const Matrix& Y, double alpha) {
  const EMatrix Ze = to_eigen(Z), Ye = to_eigen(Y);
  EMatrix A = Ze.transpose() * Ze;
  A.diagonal().array() += alpha;
  const EMatrix W = Eigen::LLT<EMatrix>(A).solve(Ze.transpose() * Ye);
  return from_eigen(W);
}

Matrix solve_ridge_dual(const Matrix& Z, const Matrix& Y, double alpha) {
  const EMatrix Ze = to_eigen(Z), Ye = to_eigen(Y);
  EMatrix G = Ze * Ze.transpose();
  G.diagonal().array() += alpha;
  const EMatrix W = Ze.transpose() * Eigen::LLT<EMatrix>(G).solve(Ye);
  return from_eigen(W);
}

std::vector<int> stratified_folds(const std::vector<int>& labels, int folds, std::uint64_t seed) {
  std::vector<int> classes(labels);
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());

  std::vector<int> fold_of(labels.size(), 0);
  for (std::size_t ci = 0; ci < classes.size(); ++ci) {
    std::vector<int> rows;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == classes[ci]) rows.push_back(static_cast<int>(i));
    Rng rng(mix_seed(seed, 0xf01d, ci));
    for (std::size_t i = rows.size(); i > 1; --i)
      std::swap(rows[i - 1], rows[rng.next_below(i)]);
    for (std::size_t i = 0; i < rows.size(); ++i)
      fold_of[static_cast<std::size_t>(rows[i])] = static_cast<int>(i % folds);
  }
  return fold_of;
}

RidgeModel fit_ridge(const Matrix& features, const std::vector<int>& labels,
                     const RidgeConfig& config) {
  const int n = features.rows, dim = features.cols;
  if (n != static_cast<int>(labels.size()))
    throw ShapeError("feature rows != label count");
  if (config.folds < 2 || n < config.folds)
    throw FitError("need rows >= folds >= 2, got rows=" + std::to_string(n) +
                   " folds=" + std::to_string(config.folds));
  if (config.alphas.empty()) throw ConfigError("alpha grid is empty");
  for (double a : config.alphas)
    if (!(a > 0.0) || !std::isfinite(a)) throw ConfigError("alphas must be positive and finite");
  for (double v : features.data)
    if (!std::isfinite(v)) throw DataError("non-finite feature value");

  std::vector<int> class_labels(labels);
  std::sort(class_labels.begin(), class_labels.end());
  class_labels.erase(std::unique(class_labels.begin(), class_labels.end()), class_labels.end());
  if (class_labels.size() < 2) throw FitError("need at least 2 distinct classes");
  for (int cl : class_labels) {
    const auto cnt = std::count(labels.begin(), labels.end(), cl);
    if (cnt < config.folds)
      throw FitError("class " + std::to_string(cl) + " has " + std::to_string(cnt) +
                     " samples but cross-validation needs >= " + std::to_string(config.folds));
  }

  const int num_classes = static_cast<int>(class_labels.size());
  const Standardization st = compute_standardization(features);
  const EMatrix Z = standardized(features, st);
  const EMatrix Y = ovr_targets(labels, class_labels);
  const bool dual = dim > n;

  // Gram is reused by every (fold, alpha) solve in the dual path: submatrix
  // of Z Z^T equals the Gram of the row subset.
  EMatrix G;
  if (dual) {
    G.resize(n, n);
    G.setZero();
    G.selfadjointView<Eigen::Lower>().rankUpdate(Z);
    G = G.selfadjointView<Eigen::Lower>();
  }

  std::vector<double> alphas(config.alphas);
  std::sort(alphas.begin(), alphas.end());
  const std::vector<int> fold_of = stratified_folds(labels, config.folds, config.seed);

  // mean CV accuracy per alpha; (fold, alpha) cells are independent solves
  Matrix fold_acc(config.folds, static_cast<int>(alphas.size()));

  auto eval_cell = [&](int fold, int ai) {
    std::vector<int> train_rows, val_rows;
    for (int i = 0; i < n; ++i)
      (fold_of[static_cast<std::size_t>(i)] == fold ? val_rows : train_rows).push_back(i);

    const auto nt = static_cast<Eigen::Index>(train_rows.size());
    const auto nv = static_cast<Eigen::Index>(val_rows.size());
    EMatrix Yt(nt, num_classes);
    for (Eigen::Index i = 0; i < nt; ++i) Yt.row(i) = Y.row(train_rows[i]);
    const Eigen::RowVectorXd ybar = Yt.colwise().mean();
    Yt.rowwise() -= ybar;

    EMatrix scores(nv, num_classes);
    if (dual) {
      EMatrix Gt(nt, nt);
      for (Eigen::Index r = 0; r < nt; ++r)
        for (Eigen::Index c = 0; c < nt; ++c) Gt(r, c) = G(train_rows[r], train_rows[c]);
      Gt.diagonal().array() += alphas[static_cast<std::size_t>(ai)];
      const EMatrix C = Eigen::LLT<EMatrix>(Gt).solve(Yt);
      EMatrix Gv(nv, nt);
      for (Eigen::Index r = 0; r < nv; ++r)
        for (Eigen::Index c = 0; c < nt; ++c) Gv(r, c) = G(val_rows[r], train_rows[c]);
      scores = Gv * C;
    } else {
      EMatrix Zt(nt, dim);
      for (Eigen::Index i = 0; i < nt; ++i) Zt.row(i) = Z.row(train_rows[i]);
      EMatrix A = Zt.transpose() * Zt;
      A.diagonal().array() += alphas[static_cast<std::size_t>(ai)];
      const EMatrix W = Eigen::LLT<EMatrix>(A).solve(Zt.transpose() * Yt);
      EMatrix Zv(nv, dim);
      for (Eigen::Index i = 0; i < nv; ++i) Zv.row(i) = Z.row(val_rows[i]);
      scores = Zv * W;
    }
    scores.rowwise() += ybar;

    int correct = 0;
    for (Eigen::Index i = 0; i < nv; ++i) {
      const int pred = class_labels[static_cast<std::size_t>(argmax_earliest(scores.row(i)))];
      if (pred == labels[static_cast<std::size_t>(val_rows[i])]) ++correct;
    }
    fold_acc.at(fold, ai) = static_cast<double>(correct) / static_cast<double>(nv);
  };

  std::vector<std::pair<int, int>> cells;
  for (int f = 0; f < config.folds; ++f)
    for (int ai = 0; ai < static_cast<int>(alphas.size()); ++ai) cells.emplace_back(f, ai);
  const int workers = std::max(1, std::min<int>(config.threads, static_cast<int>(cells.size())));
  if (workers == 1) {
    for (auto [f, ai] : cells) eval_cell(f, ai);
  } else {
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < cells.size(); i = next.fetch_add(1))
          eval_cell(cells[i].first, cells[i].second);
      });
    for (auto& t : pool) t.join();
  }

  int best_ai = 0;
  double best_acc = -1.0;
  for (int ai = 0; ai < static_cast<int>(alphas.size()); ++ai) {
    double mean = 0.0;
    for (int f = 0; f < config.folds; ++f) mean += fold_acc.at(f, ai);
    mean /= config.folds;
    if (mean >= best_acc) {  // ascending grid, so ties go to the largest alpha
      best_acc = mean;
      best_ai = ai;
    }
  }
  const double alpha = alphas[static_cast<std::size_t>(best_ai)];

  // Refit on everything with the winning alpha.
  const Eigen::RowVectorXd ybar = Y.colwise().mean();
  EMatrix Yc = Y.rowwise() - ybar;
  EMatrix W;
  if (dual) {
    EMatrix Ga = G;
    Ga.diagonal().array() += alpha;
    W = Z.transpose() * Eigen::LLT<EMatrix>(Ga).solve(Yc);
  } else {
    EMatrix A = Z.transpose() * Z;
    A.diagonal().array() += alpha;
    W = Eigen::LLT<EMatrix>(A).solve(Z.transpose() * Yc);
  }

  RidgeModel model;
  model.class_labels = class_labels;
  model.weights = Matrix(num_classes, dim);
  for (int c = 0; c < num_classes; ++c)
    for (int d = 0; d < dim; ++d) model.weights.at(c, d) = W(d, c);
  model.intercepts.assign(num_classes, 0.0);
  for (int c = 0; c < num_classes; ++c) model.intercepts[static_cast<std::size_t>(c)] = ybar(c);
  model.feature_means = st.means;
  model.feature_scales = st.scales;
  model.alpha = alpha;
  return model;
}

std::vector<double> decision_scores(const RidgeModel& model, std::span<const double> features) {
  const int dim = model.weights.cols;
  if (static_cast<int>(features.size()) != dim)
    throw ShapeError("feature vector has length " + std::to_string(features.size()) +
                     " but model expects " + std::to_string(dim));
  std::vector<double> z(static_cast<std::size_t>(dim));
  for (int d = 0; d < dim; ++d)
    z[d] = (features[d] - model.feature_means[d]) / model.feature_scales[d];

  std::vector<double> scores(model.class_labels.size());
  for (std::size_t c = 0; c < model.class_labels.size(); ++c) {
    auto w = model.weights.row(static_cast<int>(c));
    double acc = 0.0;
    for (int d = 0; d < dim; ++d) acc += w[d] * z[d];
    scores[c] = acc + model.intercepts[c];
  }
  return scores;
}

int predict(const RidgeModel& model, std::span<const double> features) {
  const std::vector<double> scores = decision_scores(model, features);
  std::size_t best = 0;
  for (std::size_t c = 1; c < scores.size(); ++c)
    if (scores[c] > scores[best]) best = c;
  return model.class_labels[best];
}

}  // namespace csisense
