#include <doctest.h>

#include <cstring>
#include <vector>

#include "csisense/dataset.hpp"
#include "csisense/errors.hpp"
#include "csisense/evaluate.hpp"
#include "csisense/fusion.hpp"
#include "oracles.hpp"

using namespace csisense;

namespace {

// small but separable synthetic set: 4x4 cells, 2 users, 4 per cell
Dataset small_dataset(int num_aps, std::uint64_t seed = 11, double noise = 0.3) {
  SynthConfig cfg;
  cfg.subcarriers = 8;
  cfg.length = 64;
  cfg.num_aps = num_aps;
  cfg.users = 2;
  cfg.samples_per_cell = 4;
  cfg.noise_std = noise;
  cfg.seed = seed;
  return synth_generate(cfg);
}

FusionConfig small_config(std::uint64_t seed = 5) {
  FusionConfig cfg;
  cfg.seed = seed;
  cfg.folds = 5;
  cfg.threads = 2;
  return cfg;
}

std::vector<const CsiSample*> ap_samples(const Dataset& ds, const std::vector<SampleGroup>& groups,
                                         const std::vector<int>& idx, int ap) {
  const auto pos = std::find(ds.ap_ids.begin(), ds.ap_ids.end(), ap) - ds.ap_ids.begin();
  std::vector<const CsiSample*> out;
  for (int i : idx)
    out.push_back(&ds.samples[static_cast<std::size_t>(
        groups[static_cast<std::size_t>(i)].sample_index[static_cast<std::size_t>(pos)])]);
  return out;
}

std::vector<SampleGroup> subset(const std::vector<SampleGroup>& groups,
                                const std::vector<int>& idx) {
  std::vector<SampleGroup> out;
  for (int i : idx) out.push_back(groups[static_cast<std::size_t>(i)]);
  return out;
}

}  // namespace

TEST_CASE("vote") {
  const std::vector<int> order{1, 2, 3, 4};
  CHECK(vote(std::vector<int>{1, 1, 2, 3, 1}, order) == 1);
  CHECK(vote(std::vector<int>{3}, order) == 3);
  // 2 and 3 tie with two votes each; earliest in class order wins
  CHECK(vote(std::vector<int>{2, 2, 3, 3, 1}, order) == 2);
  CHECK_THROWS_AS(vote(std::vector<int>{9}, order), DataError);
  CHECK_THROWS_AS(vote(std::vector<int>{}, order), DataError);
}

TEST_CASE("vote equals exhaustive count-argmax on all 3^4 tuples") {
  const std::vector<int> order{0, 1, 2};
  std::vector<int> preds(4);
  for (int code = 0; code < 81; ++code) {
    int c = code;
    for (int i = 0; i < 4; ++i) {
      preds[static_cast<std::size_t>(i)] = c % 3;
      c /= 3;
    }
    CHECK(vote(preds, order) == oracles::brute_vote(preds, order));
  }
}

TEST_CASE("sap training and prediction on separable data") {
  const Dataset ds = small_dataset(1);
  const auto groups = group_samples(ds);
  const auto [train_idx, test_idx] = split_groups(groups, SplitSpec{0.8, 2});
  const auto train = ap_samples(ds, groups, train_idx, 1);

  const FusionModel model = train_sap(train, small_config());
  CHECK(model.topology == Topology::Sap);
  CHECK(model.ap_ids == std::vector<int>{1});
  CHECK(model.banks.size() == 1);
  CHECK(model.activity_heads.size() == 1);
  CHECK(model.orientation_heads.size() == 1);

  int act_ok = 0, ori_ok = 0;
  for (int ti : test_idx) {
    const SampleGroup& g = groups[static_cast<std::size_t>(ti)];
    const CsiSample& s = ds.samples[static_cast<std::size_t>(g.sample_index[0])];
    const ApInput in{1, &s.amplitudes};
    const auto [a, o] = predict(model, std::vector<ApInput>{in});
    act_ok += a == g.activity;
    ori_ok += o == g.orientation;
  }
  CHECK(static_cast<double>(act_ok) / test_idx.size() >= 0.90);
  CHECK(static_cast<double>(ori_ok) / test_idx.size() >= 0.90);
}

TEST_CASE("sap rejects mixed ap ids and undersized training sets") {
  const Dataset ds = small_dataset(2);
  const auto groups = group_samples(ds);
  std::vector<int> all_idx(groups.size());
  for (std::size_t i = 0; i < groups.size(); ++i) all_idx[i] = static_cast<int>(i);

  SUBCASE("mixed aps") {
    auto train = ap_samples(ds, groups, all_idx, 1);
    const auto other = ap_samples(ds, groups, all_idx, 2);
    train.push_back(other[0]);
    CHECK_THROWS_AS(train_sap(train, small_config()), DataError);
  }
  SUBCASE("one sample per class fails cross-validation preconditions") {
    // one group per (activity, orientation) combo -> 4 per activity class,
    // below the 5 folds
    std::vector<int> tiny;
    for (int c = 0; c < 4; ++c)
      for (int o = 0; o < 4; ++o)
        for (std::size_t i = 0; i < groups.size(); ++i)
          if (groups[i].activity == c && groups[i].orientation == o) {
            tiny.push_back(static_cast<int>(i));
            break;
          }
    const auto train = ap_samples(ds, groups, tiny, 1);
    CHECK_THROWS_AS(train_sap(train, small_config()), FitError);
  }
  SUBCASE("mismatched subcarrier count at predict time") {
    const auto train = ap_samples(ds, groups, all_idx, 1);
    const FusionModel model = train_sap(train, small_config());
    Rng rng(4);
    const Matrix wrong = oracles::random_matrix(rng, 9, 64);
    const ApInput in{1, &wrong};
    CHECK_THROWS_AS(predict(model, std::vector<ApInput>{in}), ShapeError);
  }
}

TEST_CASE("cmap dimensions and ordering") {
  const Dataset ds = small_dataset(2);
  const auto groups = group_samples(ds);
  const auto [train_idx, test_idx] = split_groups(groups, SplitSpec{0.8, 3});
  const auto train = subset(groups, train_idx);

  const FusionModel model = train_cmap(ds, train, {2, 1}, small_config());
  CHECK(model.ap_ids == std::vector<int>{1, 2});  // canonical ascending order
  CHECK(model.banks.size() == 2);
  CHECK(model.activity_heads.size() == 1);
  CHECK(model.activity_heads[0].weights.cols == 2 * 9996);

  SUBCASE("input order does not matter, slot content does") {
    const SampleGroup& g = groups[static_cast<std::size_t>(test_idx[0])];
    const Matrix& m1 = ds.samples[static_cast<std::size_t>(g.sample_index[0])].amplitudes;
    const Matrix& m2 = ds.samples[static_cast<std::size_t>(g.sample_index[1])].amplitudes;
    const auto pred_a =
        predict(model, std::vector<ApInput>{{1, &m1}, {2, &m2}});
    const auto pred_b =
        predict(model, std::vector<ApInput>{{2, &m2}, {1, &m1}});
    CHECK(pred_a == pred_b);
  }

  SUBCASE("swapping slots changes predictions on some test sample") {
    bool changed = false;
    for (int ti : test_idx) {
      const SampleGroup& g = groups[static_cast<std::size_t>(ti)];
      const Matrix& m1 = ds.samples[static_cast<std::size_t>(g.sample_index[0])].amplitudes;
      const Matrix& m2 = ds.samples[static_cast<std::size_t>(g.sample_index[1])].amplitudes;
      const auto straight = predict(model, std::vector<ApInput>{{1, &m1}, {2, &m2}});
      const auto crossed = predict(model, std::vector<ApInput>{{1, &m2}, {2, &m1}});
      changed |= straight != crossed;
    }
    CHECK(changed);
  }

  SUBCASE("missing and duplicate aps are rejected") {
    const SampleGroup& g = groups[static_cast<std::size_t>(test_idx[0])];
    const Matrix& m1 = ds.samples[static_cast<std::size_t>(g.sample_index[0])].amplitudes;
    CHECK_THROWS_AS(predict(model, std::vector<ApInput>{{1, &m1}}), ShapeError);
    CHECK_THROWS_AS(predict(model, std::vector<ApInput>{{1, &m1}, {1, &m1}}), UsageError);
    CHECK_THROWS_AS(predict(model, std::vector<ApInput>{{1, &m1}, {7, &m1}}), UsageError);
  }
}

TEST_CASE("amap trains independent per-ap heads") {
  const Dataset ds = small_dataset(2, 13);
  const auto groups = group_samples(ds);
  const auto [train_idx, test_idx] = split_groups(groups, SplitSpec{0.8, 5});
  const auto train = subset(groups, train_idx);

  const FusionModel model = train_amap(ds, train, {1, 2}, small_config());
  CHECK(model.activity_heads.size() == 2);
  CHECK(model.orientation_heads.size() == 2);

  // rewriting AP 2's amplitudes must not move AP 1's heads
  Dataset mutated = ds;
  for (auto& s : mutated.samples)
    if (s.ap_id == 2)
      for (auto& v : s.amplitudes.data) v = 0.0;
  const auto groups2 = group_samples(mutated);
  const FusionModel model2 = train_amap(mutated, subset(groups2, train_idx), {1, 2},
                                        small_config());
  CHECK(std::memcmp(model.activity_heads[0].weights.data.data(),
                    model2.activity_heads[0].weights.data.data(),
                    model.activity_heads[0].weights.data.size() * sizeof(double)) == 0);
  CHECK(model.activity_heads[0].alpha == model2.activity_heads[0].alpha);
  CHECK(std::memcmp(model.banks[0].biases[0].data(), model2.banks[0].biases[0].data(),
                    model.banks[0].biases[0].size() * sizeof(double)) == 0);
}

TEST_CASE("amap predictions follow the vote of per-ap heads") {
  const Dataset ds = small_dataset(3, 17);
  const auto groups = group_samples(ds);
  const auto [train_idx, test_idx] = split_groups(groups, SplitSpec{0.8, 6});
  const FusionModel model =
      train_amap(ds, subset(groups, train_idx), {1, 2, 3}, small_config());

  for (int ti : test_idx) {
    const SampleGroup& g = groups[static_cast<std::size_t>(ti)];
    std::vector<ApInput> inputs;
    for (std::size_t a = 0; a < 3; ++a)
      inputs.push_back({ds.ap_ids[a],
                        &ds.samples[static_cast<std::size_t>(g.sample_index[a])].amplitudes});

    // recompute the vote externally from per-head decision scores
    const FusionScores scores = decision_scores(model, inputs);
    std::vector<int> act_preds, ori_preds;
    for (std::size_t a = 0; a < 3; ++a) {
      const auto& sa = scores.activity[a];
      const auto& so = scores.orientation[a];
      int ba = 0, bo = 0;
      for (int c = 1; c < static_cast<int>(sa.size()); ++c)
        if (sa[static_cast<std::size_t>(c)] > sa[static_cast<std::size_t>(ba)]) ba = c;
      for (int c = 1; c < static_cast<int>(so.size()); ++c)
        if (so[static_cast<std::size_t>(c)] > so[static_cast<std::size_t>(bo)]) bo = c;
      act_preds.push_back(model.activity_heads[a].class_labels[static_cast<std::size_t>(ba)]);
      ori_preds.push_back(model.orientation_heads[a].class_labels[static_cast<std::size_t>(bo)]);
    }
    const auto [act, ori] = predict(model, inputs);
    CHECK(act == oracles::brute_vote(act_preds, model.activity_heads[0].class_labels));
    CHECK(ori == oracles::brute_vote(ori_preds, model.orientation_heads[0].class_labels));
  }
}

TEST_CASE("all three topologies coincide at a single access point") {
  const Dataset ds = small_dataset(1, 23);
  RunConfig cfg;
  cfg.ap_ids = {1};
  cfg.seed = 9;
  cfg.runs = 1;
  cfg.threads = 2;

  std::vector<std::vector<PredictionRecord>> all;
  for (Topology t : {Topology::Sap, Topology::Cmap, Topology::Amap}) {
    cfg.topology = t;
    const EvalResult r = evaluate(ds, cfg);
    all.push_back(r.predictions);
  }
  REQUIRE(all[0].size() == all[1].size());
  REQUIRE(all[0].size() == all[2].size());
  for (std::size_t i = 0; i < all[0].size(); ++i) {
    CHECK(all[0][i].sample_id == all[1][i].sample_id);
    CHECK(all[0][i].predicted_activity == all[1][i].predicted_activity);
    CHECK(all[0][i].predicted_activity == all[2][i].predicted_activity);
    CHECK(all[0][i].predicted_orientation == all[1][i].predicted_orientation);
    CHECK(all[0][i].predicted_orientation == all[2][i].predicted_orientation);
  }
}

TEST_CASE("training is reproducible across thread counts") {
  const Dataset ds = small_dataset(2, 29);
  const auto groups = group_samples(ds);
  const auto [train_idx, test_idx] = split_groups(groups, SplitSpec{0.8, 4});

  FusionConfig one = small_config(3);
  one.threads = 1;
  FusionConfig four = small_config(3);
  four.threads = 4;
  const FusionModel a = train_cmap(ds, subset(groups, train_idx), {1, 2}, one);
  const FusionModel b = train_cmap(ds, subset(groups, train_idx), {1, 2}, four);
  CHECK(a.activity_heads[0].alpha == b.activity_heads[0].alpha);
  CHECK(std::memcmp(a.activity_heads[0].weights.data.data(),
                    b.activity_heads[0].weights.data.data(),
                    a.activity_heads[0].weights.data.size() * sizeof(double)) == 0);
  CHECK(std::memcmp(a.orientation_heads[0].weights.data.data(),
                    b.orientation_heads[0].weights.data.data(),
                    a.orientation_heads[0].weights.data.size() * sizeof(double)) == 0);
}

TEST_CASE("parallel runs reproduce the sequential evaluation exactly") {
  const Dataset ds = small_dataset(2, 37);
  RunConfig cfg;
  cfg.topology = Topology::Amap;
  cfg.ap_ids = {1, 2};
  cfg.seed = 14;
  cfg.runs = 3;
  cfg.threads = 2;

  const EvalResult seq = evaluate(ds, cfg);
  cfg.parallel_runs = 3;
  const EvalResult par = evaluate(ds, cfg);

  REQUIRE(seq.runs.size() == par.runs.size());
  for (std::size_t r = 0; r < seq.runs.size(); ++r) {
    CHECK(seq.runs[r].report.activity.acc == par.runs[r].report.activity.acc);
    CHECK(seq.runs[r].report.orientation.mcc == par.runs[r].report.orientation.mcc);
    CHECK(seq.runs[r].activity_alphas == par.runs[r].activity_alphas);
  }
  REQUIRE(seq.predictions.size() == par.predictions.size());
  for (std::size_t i = 0; i < seq.predictions.size(); ++i) {
    CHECK(seq.predictions[i].run == par.predictions[i].run);
    CHECK(seq.predictions[i].sample_id == par.predictions[i].sample_id);
    CHECK(seq.predictions[i].predicted_activity == par.predictions[i].predicted_activity);
    CHECK(seq.predictions[i].predicted_orientation == par.predictions[i].predicted_orientation);
  }
}

TEST_CASE("unknown ap selections are rejected") {
  const Dataset ds = small_dataset(2);
  const auto groups = group_samples(ds);
  std::vector<int> all_idx(groups.size());
  for (std::size_t i = 0; i < groups.size(); ++i) all_idx[i] = static_cast<int>(i);
  const auto train = subset(groups, all_idx);
  CHECK_THROWS_AS(train_cmap(ds, train, {1, 9}, small_config()), DataError);
  CHECK_THROWS_AS(train_cmap(ds, train, {1, 1}, small_config()), ConfigError);
  CHECK_THROWS_AS(train_cmap(ds, train, {}, small_config()), ConfigError);
}
