#include "csisense/fusion.hpp"

#include <algorithm>
#include <string>

#include "csisense/errors.hpp"
#include "csisense/parallel.hpp"
#include "csisense/rng.hpp"

namespace csisense {

namespace {

constexpr std::uint64_t kBankStream = 0xba26;
constexpr std::uint64_t kCvStream = 0xc0de;

// Head CV seeds key on (task, anchor ap). SAP and AMAP anchor each head on
// its own AP; CMAP anchors on the first AP, so a one-AP CMAP or AMAP trains
// bit-identically to SAP on the same data.
std::uint64_t head_seed(std::uint64_t seed, int task, int anchor_ap) {
  return mix_seed(seed, kCvStream, static_cast<std::uint64_t>(task),
                  static_cast<std::uint64_t>(anchor_ap));
}

FittedBank fit_bank(std::span<const CsiSample* const> train, const FusionConfig& cfg, int ap_id) {
  if (train.empty()) throw FitError("no training samples");
  const int T = train[0]->amplitudes.cols;
  const DilationPlan plan = build_dilation_plan(cfg.bank, T);
  return fit_biases(train, cfg.bank, plan, generate_kernels(cfg.bank),
                    mix_seed(cfg.seed, kBankStream, static_cast<std::uint64_t>(ap_id)));
}

// Features of `samples` into columns [col0, col0 + D) of F, parallel over rows.
void extract_block(std::span<const CsiSample* const> samples, const FittedBank& bank, Matrix& F,
                   int col0, int threads) {
  const int D = bank.config.total_features;
  parallel_for(static_cast<int>(samples.size()), threads, [&](int i) {
    extract_into(samples[static_cast<std::size_t>(i)]->amplitudes, bank,
                 F.row(i).subspan(static_cast<std::size_t>(col0), static_cast<std::size_t>(D)));
  });
}

std::vector<int> checked_ap_ids(const Dataset& ds, std::vector<int> ap_ids) {
  if (ap_ids.empty()) throw ConfigError("no access points selected");
  std::sort(ap_ids.begin(), ap_ids.end());
  if (std::adjacent_find(ap_ids.begin(), ap_ids.end()) != ap_ids.end())
    throw ConfigError("duplicate ap id in selection");
  for (int ap : ap_ids)
    if (std::find(ds.ap_ids.begin(), ds.ap_ids.end(), ap) == ds.ap_ids.end())
      throw DataError("ap " + std::to_string(ap) + " not present in dataset");
  return ap_ids;
}

// Pointers to one AP's samples, in group order.
std::vector<const CsiSample*> ap_slice(const Dataset& ds, std::span<const SampleGroup> groups,
                                       int ap_id) {
  const auto pos = std::find(ds.ap_ids.begin(), ds.ap_ids.end(), ap_id) - ds.ap_ids.begin();
  std::vector<const CsiSample*> out;
  out.reserve(groups.size());
  for (const SampleGroup& g : groups)
    out.push_back(&ds.samples[static_cast<std::size_t>(
        g.sample_index[static_cast<std::size_t>(pos)])]);
  return out;
}

RidgeModel fit_head(const Matrix& F, const std::vector<int>& labels, const FusionConfig& cfg,
                    int task, int anchor_ap) {
  RidgeConfig rc;
  rc.alphas = cfg.alphas;
  rc.folds = cfg.folds;
  rc.seed = head_seed(cfg.seed, task, anchor_ap);
  rc.threads = cfg.threads;
  return fit_ridge(F, labels, rc);
}

}  // namespace

const char* topology_name(Topology t) {
  switch (t) {
    case Topology::Sap: return "sap";
    case Topology::Cmap: return "cmap";
    default: return "amap";
  }
}

Topology topology_from_name(const std::string& name) {
  if (name == "sap") return Topology::Sap;
  if (name == "cmap") return Topology::Cmap;
  if (name == "amap") return Topology::Amap;
  throw ConfigError("unknown topology '" + name + "' (expected sap|cmap|amap)");
}

FusionModel train_sap(std::span<const CsiSample* const> train, const FusionConfig& cfg) {
  if (train.empty()) throw FitError("no training samples");
  const int ap = train[0]->ap_id;
  for (const CsiSample* s : train)
    if (s->ap_id != ap)
      throw DataError("SAP training set mixes ap " + std::to_string(ap) + " and ap " +
                      std::to_string(s->ap_id));

  FusionModel model;
  model.topology = Topology::Sap;
  model.ap_ids = {ap};
  model.banks.push_back(fit_bank(train, cfg, ap));

  Matrix F(static_cast<int>(train.size()), cfg.bank.total_features);
  extract_block(train, model.banks[0], F, 0, cfg.threads);

  std::vector<int> act(train.size()), ori(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    act[i] = train[i]->activity;
    ori[i] = train[i]->orientation;
  }
  model.activity_heads.push_back(fit_head(F, act, cfg, 0, ap));
  model.orientation_heads.push_back(fit_head(F, ori, cfg, 1, ap));
  return model;
}

FusionModel train_cmap(const Dataset& ds, std::span<const SampleGroup> train,
                       const std::vector<int>& ap_ids, const FusionConfig& cfg) {
  const std::vector<int> aps = checked_ap_ids(ds, ap_ids);
  if (train.empty()) throw FitError("no training samples");
  const int A = static_cast<int>(aps.size());
  const int D = cfg.bank.total_features;

  FusionModel model;
  model.topology = Topology::Cmap;
  model.ap_ids = aps;
  model.activity_names = ds.activity_names;
  model.orientation_names = ds.orientation_names;

  Matrix F(static_cast<int>(train.size()), A * D);
  for (int ai = 0; ai < A; ++ai) {
    const std::vector<const CsiSample*> slice = ap_slice(ds, train, aps[ai]);
    model.banks.push_back(fit_bank(slice, cfg, aps[ai]));
    extract_block(slice, model.banks.back(), F, ai * D, cfg.threads);
  }

  std::vector<int> act(train.size()), ori(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    act[i] = train[i].activity;
    ori[i] = train[i].orientation;
  }
  model.activity_heads.push_back(fit_head(F, act, cfg, 0, aps[0]));
  model.orientation_heads.push_back(fit_head(F, ori, cfg, 1, aps[0]));
  return model;
}

FusionModel train_amap(const Dataset& ds, std::span<const SampleGroup> train,
                       const std::vector<int>& ap_ids, const FusionConfig& cfg) {
  const std::vector<int> aps = checked_ap_ids(ds, ap_ids);
  if (train.empty()) throw FitError("no training samples");

  FusionModel model;
  model.topology = Topology::Amap;
  model.ap_ids = aps;
  model.activity_names = ds.activity_names;
  model.orientation_names = ds.orientation_names;

  std::vector<int> act(train.size()), ori(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    act[i] = train[i].activity;
    ori[i] = train[i].orientation;
  }

  for (int ap : aps) {
    const std::vector<const CsiSample*> slice = ap_slice(ds, train, ap);
    model.banks.push_back(fit_bank(slice, cfg, ap));
    Matrix F(static_cast<int>(train.size()), cfg.bank.total_features);
    extract_block(slice, model.banks.back(), F, 0, cfg.threads);
    model.activity_heads.push_back(fit_head(F, act, cfg, 0, ap));
    model.orientation_heads.push_back(fit_head(F, ori, cfg, 1, ap));
  }
  return model;
}

int vote(std::span<const int> predictions, std::span<const int> class_order) {
  if (predictions.empty()) throw DataError("vote over no predictions");
  std::vector<int> counts(class_order.size(), 0);
  for (int p : predictions) {
    const auto it = std::find(class_order.begin(), class_order.end(), p);
    if (it == class_order.end())
      throw DataError("prediction " + std::to_string(p) + " not in class order");
    ++counts[static_cast<std::size_t>(it - class_order.begin())];
  }
  std::size_t best = 0;
  for (std::size_t c = 1; c < counts.size(); ++c)
    if (counts[c] > counts[best]) best = c;  // strict: ties keep the earliest
  return class_order[best];
}

namespace {

// Validates arity and ap coverage; returns inputs reordered to model.ap_ids.
std::vector<const Matrix*> ordered_inputs(const FusionModel& model,
                                          std::span<const ApInput> inputs) {
  if (inputs.size() != model.ap_ids.size())
    throw ShapeError("expected " + std::to_string(model.ap_ids.size()) + " ap inputs, got " +
                     std::to_string(inputs.size()));
  std::vector<const Matrix*> ordered(model.ap_ids.size(), nullptr);
  for (const ApInput& in : inputs) {
    const auto it = std::find(model.ap_ids.begin(), model.ap_ids.end(), in.ap_id);
    if (it == model.ap_ids.end())
      throw UsageError("model has no ap " + std::to_string(in.ap_id));
    const auto pos = static_cast<std::size_t>(it - model.ap_ids.begin());
    if (ordered[pos]) throw UsageError("duplicate input for ap " + std::to_string(in.ap_id));
    ordered[pos] = in.amplitudes;
  }
  return ordered;
}

std::vector<std::vector<double>> per_ap_features(const FusionModel& model,
                                                 std::span<const ApInput> inputs) {
  const std::vector<const Matrix*> ordered = ordered_inputs(model, inputs);
  std::vector<std::vector<double>> feats(ordered.size());
  for (std::size_t a = 0; a < ordered.size(); ++a) {
    feats[a].resize(static_cast<std::size_t>(model.banks[a].config.total_features));
    extract_into(*ordered[a], model.banks[a], feats[a]);
  }
  return feats;
}

std::vector<double> concatenated(const std::vector<std::vector<double>>& feats) {
  std::vector<double> all;
  for (const auto& f : feats) all.insert(all.end(), f.begin(), f.end());
  return all;
}

}  // namespace

std::pair<int, int> predict(const FusionModel& model, std::span<const ApInput> inputs) {
  const std::vector<std::vector<double>> feats = per_ap_features(model, inputs);
  if (model.topology != Topology::Amap) {
    const std::vector<double> f =
        model.topology == Topology::Cmap ? concatenated(feats) : feats[0];
    return {predict(model.activity_heads[0], f), predict(model.orientation_heads[0], f)};
  }
  std::vector<int> act_votes(feats.size()), ori_votes(feats.size());
  for (std::size_t a = 0; a < feats.size(); ++a) {
    act_votes[a] = predict(model.activity_heads[a], feats[a]);
    ori_votes[a] = predict(model.orientation_heads[a], feats[a]);
  }
  return {vote(act_votes, model.activity_heads[0].class_labels),
          vote(ori_votes, model.orientation_heads[0].class_labels)};
}

FusionScores decision_scores(const FusionModel& model, std::span<const ApInput> inputs) {
  const std::vector<std::vector<double>> feats = per_ap_features(model, inputs);
  FusionScores scores;
  if (model.topology != Topology::Amap) {
    const std::vector<double> f =
        model.topology == Topology::Cmap ? concatenated(feats) : feats[0];
    scores.activity.push_back(decision_scores(model.activity_heads[0], f));
    scores.orientation.push_back(decision_scores(model.orientation_heads[0], f));
    return scores;
  }
  for (std::size_t a = 0; a < feats.size(); ++a) {
    scores.activity.push_back(decision_scores(model.activity_heads[a], feats[a]));
    scores.orientation.push_back(decision_scores(model.orientation_heads[a], feats[a]));
  }
  return scores;
}

}  // namespace csisense
