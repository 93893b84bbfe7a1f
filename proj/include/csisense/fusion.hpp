#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "csisense/dataset.hpp"
#include "csisense/features.hpp"
#include "csisense/kernel_bank.hpp"
#include "csisense/ridge.hpp"

namespace csisense {

enum class Topology { Sap, Cmap, Amap };

const char* topology_name(Topology t);
Topology topology_from_name(const std::string& name);

struct FusionConfig {
  KernelBankConfig bank;
  std::vector<double> alphas = {0.001, 0.01, 0.1, 1.0};
  int folds = 5;
  std::uint64_t seed = 0;
  int threads = 1;
};

// A trained SAP / CMAP / AMAP assembly: per-AP fitted banks plus one
// (SAP/CMAP) or A (AMAP) ridge heads per task.
struct FusionModel {
  Topology topology = Topology::Sap;
  std::vector<int> ap_ids;                 // ascending
  std::vector<FittedBank> banks;           // one per AP, same order
  std::vector<RidgeModel> activity_heads;  // 1 or A
  std::vector<RidgeModel> orientation_heads;
  std::vector<std::string> activity_names;
  std::vector<std::string> orientation_names;
};

// One AP's view of a prediction input.
struct ApInput {
  int ap_id = 0;
  const Matrix* amplitudes = nullptr;
};

// Single access point: one bank, one ridge head per task.
FusionModel train_sap(std::span<const CsiSample* const> train, const FusionConfig& cfg);

// Concatenation: per-AP banks, features joined in ascending ap_id order,
// one head per task over the A*D-dimensional concatenation.
FusionModel train_cmap(const Dataset& ds, std::span<const SampleGroup> train,
                       const std::vector<int>& ap_ids, const FusionConfig& cfg);

// Aggregation: per-AP banks and per-AP heads; prediction by majority vote.
FusionModel train_amap(const Dataset& ds, std::span<const SampleGroup> train,
                       const std::vector<int>& ap_ids, const FusionConfig& cfg);

// Majority vote with ties broken toward the earliest class in class_order.
int vote(std::span<const int> predictions, std::span<const int> class_order);

// (activity id, orientation id). Input arity must match the topology: one
// entry for SAP, one per AP otherwise (any order; matched by ap_id).
std::pair<int, int> predict(const FusionModel& model, std::span<const ApInput> inputs);

// Per-task raw head scores for diagnostics; AMAP returns one row per AP.
struct FusionScores {
  std::vector<std::vector<double>> activity;
  std::vector<std::vector<double>> orientation;
};
FusionScores decision_scores(const FusionModel& model, std::span<const ApInput> inputs);

}  // namespace csisense
