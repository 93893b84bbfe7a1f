#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "csisense/dataset.hpp"
#include "csisense/fusion.hpp"
#include "csisense/metrics.hpp"

namespace csisense {

// Everything a run needs; serialized into reports and model archives so any
// result is reproducible from its config alone.
struct RunConfig {
  Topology topology = Topology::Sap;
  std::vector<int> ap_ids;
  std::string data_dir;
  std::uint64_t seed = 0;
  int runs = 10;
  double train_fraction = 0.8;
  bool split_by_user = false;  // user-disjoint splits instead of within-pool
  KernelBankConfig bank;
  std::vector<double> alphas = {0.001, 0.01, 0.1, 1.0};
  int folds = 5;
  int threads = 0;        // 0 = hardware concurrency
  int parallel_runs = 1;  // runs execute sequentially unless raised
};

std::string run_config_to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const std::string& json);

struct PredictionRecord {
  int run = 0;
  int sample_id = 0;
  int true_activity = 0, predicted_activity = 0;
  int true_orientation = 0, predicted_orientation = 0;
};

struct EvalRun {
  std::uint64_t run_seed = 0;
  RunReport report;
  std::vector<double> activity_alphas;     // one per head
  std::vector<double> orientation_alphas;
};

struct EvalResult {
  std::vector<EvalRun> runs;
  AggregateReport activity;
  AggregateReport orientation;
  std::vector<PredictionRecord> predictions;  // test split, every run
};

// Trains one model: stratified split at `run_seed`, per-topology training on
// the train side. Exposed for cmd_train; evaluate() calls it per run with
// run_seed = cfg.seed + r.
FusionModel train_run(const Dataset& ds, const std::vector<SampleGroup>& groups,
                      const std::vector<int>& train_idx, const RunConfig& cfg,
                      std::uint64_t run_seed);

// The full protocol: cfg.runs independent runs, each with a fresh split and
// seed stream, metrics per run plus mean/population-std aggregation.
EvalResult evaluate(const Dataset& ds, const RunConfig& cfg);

// Row label in the reports: "SAP - AP 3", "CMAP", "AMAP".
std::string model_row_label(const RunConfig& cfg);

// report.txt (summary + per-class tables), report.json (full-precision
// records), predictions.csv. Files are written atomically and contain no
// timestamps, so identical inputs give byte-identical reports.
void write_reports(const EvalResult& result, const RunConfig& cfg, const Dataset& ds,
                   const std::filesystem::path& out_dir);

}  // namespace csisense
