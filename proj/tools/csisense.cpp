#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "csisense/archive.hpp"
#include "csisense/dataset.hpp"
#include "csisense/errors.hpp"
#include "csisense/evaluate.hpp"
#include "csisense/fusion.hpp"
#include "csisense/parallel.hpp"

namespace fs = std::filesystem;
using namespace csisense;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fs::path manifest_path(const std::string& data) {
  fs::path p(data);
  if (fs::is_directory(p)) return p / "manifest.txt";
  return p;
}

void add_run_options(CLI::App* cmd, RunConfig& cfg, std::string& data, std::string& topology) {
  cmd->add_option("--data", data, "dataset directory (or manifest path)")->required();
  cmd->add_option("--topology", topology, "sap | cmap | amap")->required();
  cmd->add_option("--ap", cfg.ap_ids, "access point ids (e.g. --ap 1,2,3)")
      ->required()
      ->delimiter(',');
  cmd->add_option("--seed", cfg.seed, "base seed");
  cmd->add_option("--train-fraction", cfg.train_fraction, "training fraction (default 0.8)");
  cmd->add_flag("--split-by-user", cfg.split_by_user,
                "hold out whole users instead of a within-pool split");
  cmd->add_option("--folds", cfg.folds, "cross-validation folds (default 5)");
  cmd->add_option("--alphas", cfg.alphas, "ridge regularization grid")->delimiter(',');
  cmd->add_option("--kernel-length", cfg.bank.kernel_length, "kernel length (default 9)");
  cmd->add_option("--num-kernels", cfg.bank.num_kernels, "kernel count (default 84)");
  cmd->add_option("--max-dilations", cfg.bank.max_dilations_per_kernel,
                  "max dilations per kernel (default 32)");
  cmd->add_option("--features", cfg.bank.total_features, "total feature count (default 9996)");
  cmd->add_option("--threads", cfg.threads, "worker threads (default: hardware)");
}

int run_synth(const std::string& out, const SynthConfig& cfg, bool paper_shape,
              const CLI::App* cmd) {
  SynthConfig effective = cfg;
  if (paper_shape) {
    // protocol shape as defaults; explicitly given flags still win
    const SynthConfig paper = paper_shape_synth(cfg.seed, cfg.noise_std);
    if (!cmd->count("--subcarriers")) effective.subcarriers = paper.subcarriers;
    if (!cmd->count("--length")) effective.length = paper.length;
    if (!cmd->count("--aps")) effective.num_aps = paper.num_aps;
    if (!cmd->count("--users")) effective.users = paper.users;
    if (!cmd->count("--samples-per-cell")) effective.samples_per_cell = paper.samples_per_cell;
  }
  const auto t0 = std::chrono::steady_clock::now();
  synth_generate_to(effective, out);
  const int per_ap = effective.num_activities * effective.num_orientations * effective.users *
                     effective.samples_per_cell;
  std::printf("wrote %d samples per AP across %d APs (S=%d T=%d) to %s [%.1fs]\n", per_ap,
              effective.num_aps, effective.subcarriers, effective.length, out.c_str(),
              seconds_since(t0));
  return 0;
}

int run_train(const RunConfig& cfg, const std::string& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const Dataset ds = load_dataset(manifest_path(cfg.data_dir), cfg.ap_ids);
  std::printf("loaded %zu samples over %zu APs [%.1fs]\n", ds.samples.size(), ds.ap_ids.size(),
              seconds_since(t0));

  const std::vector<SampleGroup> groups = group_samples(ds);
  const auto [train_idx, test_idx] =
      split_groups(groups, SplitSpec{cfg.train_fraction, cfg.seed, cfg.split_by_user});
  const FusionModel model = train_run(ds, groups, train_idx, cfg, cfg.seed);

  save_model(out, model, cfg);
  std::printf("trained %s on %zu samples (%zu held out)\n", model_row_label(cfg).c_str(),
              train_idx.size(), test_idx.size());
  for (std::size_t h = 0; h < model.activity_heads.size(); ++h)
    std::printf("  head %zu: activity alpha=%g, orientation alpha=%g\n", h,
                model.activity_heads[h].alpha, model.orientation_heads[h].alpha);
  std::printf("saved %s [%.1fs total]\n", out.c_str(), seconds_since(t0));
  return 0;
}

int run_eval(const RunConfig& cfg, const std::string& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  const Dataset ds = load_dataset(manifest_path(cfg.data_dir), cfg.ap_ids);
  std::printf("loaded %zu samples over %zu APs [%.1fs]\n", ds.samples.size(), ds.ap_ids.size(),
              seconds_since(t0));

  const EvalResult result = evaluate(ds, cfg);
  write_reports(result, cfg, ds, out_dir);

  auto pct = [](const MeanStd& ms) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.1f±%.1f", 100.0 * ms.mean, 100.0 * ms.std);
    return std::string(buf);
  };
  std::printf("%s over %d runs:\n", model_row_label(cfg).c_str(), cfg.runs);
  std::printf("  activity:    Acc %s  BAcc %s  F1 %s  MCC %s\n", pct(result.activity.acc).c_str(),
              pct(result.activity.bacc).c_str(), pct(result.activity.f1).c_str(),
              pct(result.activity.mcc).c_str());
  std::printf("  orientation: Acc %s  BAcc %s  F1 %s  MCC %s\n",
              pct(result.orientation.acc).c_str(), pct(result.orientation.bacc).c_str(),
              pct(result.orientation.f1).c_str(), pct(result.orientation.mcc).c_str());
  std::printf("reports in %s [%.1fs total]\n", out_dir.c_str(), seconds_since(t0));
  return 0;
}

int run_predict(const std::string& model_path, const std::vector<std::string>& inputs,
                bool show_config) {
  const LoadedModel loaded = load_model(model_path);
  if (show_config) {
    std::printf("%s\n", loaded.config_json.c_str());
    if (inputs.empty()) return 0;
  }
  if (inputs.empty()) throw UsageError("no --input given (use --input ap=path)");

  // Accept "ap=path" pairs; a bare path is allowed for single-AP models.
  std::vector<std::pair<int, std::string>> parsed;
  for (const std::string& in : inputs) {
    const auto eq = in.find('=');
    if (eq == std::string::npos) {
      if (loaded.model.ap_ids.size() != 1)
        throw UsageError("input '" + in + "' needs the ap=path form for multi-AP models");
      parsed.emplace_back(loaded.model.ap_ids[0], in);
    } else {
      parsed.emplace_back(std::stoi(in.substr(0, eq)), in.substr(eq + 1));
    }
  }
  for (int ap : loaded.model.ap_ids) {
    bool found = false;
    for (const auto& [pap, _] : parsed) found = found || pap == ap;
    if (!found) throw UsageError("missing --input for ap " + std::to_string(ap));
  }

  std::vector<Matrix> mats;
  mats.reserve(parsed.size());
  std::vector<ApInput> api;
  for (const auto& [ap, path] : parsed) {
    const auto it = std::find(loaded.model.ap_ids.begin(), loaded.model.ap_ids.end(), ap);
    if (it == loaded.model.ap_ids.end())
      throw UsageError("model has no ap " + std::to_string(ap));
    const FittedBank& bank =
        loaded.model.banks[static_cast<std::size_t>(it - loaded.model.ap_ids.begin())];
    mats.push_back(load_amplitude_file(path, bank.subcarriers, bank.plan.input_length));
  }
  for (std::size_t i = 0; i < parsed.size(); ++i) api.push_back({parsed[i].first, &mats[i]});

  const auto [act, ori] = predict(loaded.model, api);
  const FusionScores scores = decision_scores(loaded.model, api);

  auto name_of = [](const std::vector<std::string>& names, int id) {
    return id >= 0 && id < static_cast<int>(names.size()) ? names[static_cast<std::size_t>(id)]
                                                          : std::to_string(id);
  };
  std::printf("activity: %s\norientation: %s\n",
              name_of(loaded.model.activity_names, act).c_str(),
              name_of(loaded.model.orientation_names, ori).c_str());
  for (std::size_t h = 0; h < scores.activity.size(); ++h) {
    std::printf("scores[%zu] activity:", h);
    for (double s : scores.activity[h]) std::printf(" %.6f", s);
    std::printf("  orientation:");
    for (double s : scores.orientation[h]) std::printf(" %.6f", s);
    std::printf("\n");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"joint orientation-activity recognition from WiFi CSI amplitudes"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic CSI dataset");
  SynthConfig scfg;
  std::string synth_out;
  bool paper_shape = false;
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--seed", scfg.seed, "generator seed");
  synth->add_flag("--paper-shape", paper_shape,
                  "use the measurement-protocol shape (1920 samples/AP, 5 APs)");
  synth->add_option("--subcarriers", scfg.subcarriers, "S (default 52)");
  synth->add_option("--length", scfg.length, "T (default 256)");
  synth->add_option("--aps", scfg.num_aps, "number of APs (default 5)");
  synth->add_option("--users", scfg.users, "number of users (default 6)");
  synth->add_option("--samples-per-cell", scfg.samples_per_cell,
                    "samples per (activity, orientation, user) cell (default 20)");
  synth->add_option("--noise-std", scfg.noise_std, "additive noise std (default 0.5)");

  // train
  auto* train = app.add_subcommand("train", "train a model and save the archive");
  RunConfig tcfg;
  std::string train_data, train_topology, train_out;
  add_run_options(train, tcfg, train_data, train_topology);
  train->add_option("--out", train_out, "output model archive path")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "multi-run evaluation with reports");
  RunConfig ecfg;
  std::string eval_data, eval_topology, eval_out;
  add_run_options(eval, ecfg, eval_data, eval_topology);
  eval->add_option("--runs", ecfg.runs, "independent runs (default 10)");
  eval->add_option("--parallel-runs", ecfg.parallel_runs,
                   "runs to execute concurrently (default 1: sequential)");
  eval->add_option("--out", eval_out, "report output directory")->required();

  // predict
  auto* pred = app.add_subcommand("predict", "predict labels for sample files");
  std::string model_path;
  std::vector<std::string> pred_inputs;
  bool show_config = false;
  pred->add_option("--model", model_path, "model archive")->required();
  pred->add_option("--input", pred_inputs, "amplitude file, as ap=path (repeatable)");
  pred->add_flag("--show-config", show_config, "print the archived run config");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return run_synth(synth_out, scfg, paper_shape, synth);
    if (train->parsed()) {
      tcfg.topology = topology_from_name(train_topology);
      tcfg.data_dir = train_data;
      tcfg.runs = 1;
      return run_train(tcfg, train_out);
    }
    if (eval->parsed()) {
      ecfg.topology = topology_from_name(eval_topology);
      ecfg.data_dir = eval_data;
      return run_eval(ecfg, eval_out);
    }
    if (pred->parsed()) return run_predict(model_path, pred_inputs, show_config);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
