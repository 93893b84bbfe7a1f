#include "csisense/evaluate.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <string>

#include <nlohmann/json.hpp>

#include "csisense/errors.hpp"
#include "csisense/parallel.hpp"

namespace csisense {

using json = nlohmann::ordered_json;

namespace {

json bank_to_json(const KernelBankConfig& b) {
  return {{"kernel_length", b.kernel_length},
          {"num_kernels", b.num_kernels},
          {"max_dilations_per_kernel", b.max_dilations_per_kernel},
          {"total_features", b.total_features},
          {"seed", b.seed}};
}

KernelBankConfig bank_from_json(const json& j) {
  KernelBankConfig b;
  b.kernel_length = j.at("kernel_length").get<int>();
  b.num_kernels = j.at("num_kernels").get<int>();
  b.max_dilations_per_kernel = j.at("max_dilations_per_kernel").get<int>();
  b.total_features = j.at("total_features").get<int>();
  b.seed = j.at("seed").get<std::uint64_t>();
  return b;
}

void atomic_write(const std::filesystem::path& path, const std::string& contents) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw IoError("cannot write " + tmp.string());
    f.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!f) throw IoError("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string percent_cell(const MeanStd& ms) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.1f±%.1f", 100.0 * ms.mean, 100.0 * ms.std);
  return buf;
}

std::string pad_to(std::string s, std::size_t width) {
  while (s.size() < width) s.push_back(' ');
  return s;
}

json task_run_json(const TaskMetrics& m, const std::vector<double>& alphas) {
  return {{"acc", m.acc},         {"bacc", m.bacc},   {"f1", m.f1},
          {"mcc", m.mcc},         {"per_class", m.per_class}, {"alphas", alphas}};
}

json task_agg_json(const AggregateReport& a) {
  json per_class = json::array();
  for (const MeanStd& ms : a.per_class) per_class.push_back({{"mean", ms.mean}, {"std", ms.std}});
  return {{"acc", {{"mean", a.acc.mean}, {"std", a.acc.std}}},
          {"bacc", {{"mean", a.bacc.mean}, {"std", a.bacc.std}}},
          {"f1", {{"mean", a.f1.mean}, {"std", a.f1.std}}},
          {"mcc", {{"mean", a.mcc.mean}, {"std", a.mcc.std}}},
          {"per_class", per_class}};
}

}  // namespace

std::string run_config_to_json(const RunConfig& cfg) {
  json j{{"topology", topology_name(cfg.topology)},
         {"ap_ids", cfg.ap_ids},
         {"data_dir", cfg.data_dir},
         {"seed", cfg.seed},
         {"runs", cfg.runs},
         {"train_fraction", cfg.train_fraction},
         {"split_by_user", cfg.split_by_user},
         {"bank", bank_to_json(cfg.bank)},
         {"alphas", cfg.alphas},
         {"folds", cfg.folds},
         {"threads", cfg.threads},
         {"parallel_runs", cfg.parallel_runs}};
  return j.dump(2);
}

RunConfig run_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad run config json: ") + e.what());
  }
  RunConfig cfg;
  cfg.topology = topology_from_name(j.at("topology").get<std::string>());
  cfg.ap_ids = j.at("ap_ids").get<std::vector<int>>();
  cfg.data_dir = j.at("data_dir").get<std::string>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.runs = j.at("runs").get<int>();
  cfg.train_fraction = j.at("train_fraction").get<double>();
  cfg.split_by_user = j.value("split_by_user", false);
  cfg.bank = bank_from_json(j.at("bank"));
  cfg.alphas = j.at("alphas").get<std::vector<double>>();
  cfg.folds = j.at("folds").get<int>();
  cfg.threads = j.at("threads").get<int>();
  cfg.parallel_runs = j.value("parallel_runs", 1);
  return cfg;
}

std::string model_row_label(const RunConfig& cfg) {
  if (cfg.topology == Topology::Sap)
    return "SAP - AP " + std::to_string(cfg.ap_ids.empty() ? 0 : cfg.ap_ids[0]);
  return cfg.topology == Topology::Cmap ? "CMAP" : "AMAP";
}

FusionModel train_run(const Dataset& ds, const std::vector<SampleGroup>& groups,
                      const std::vector<int>& train_idx, const RunConfig& cfg,
                      std::uint64_t run_seed) {
  FusionConfig fc;
  fc.bank = cfg.bank;
  fc.alphas = cfg.alphas;
  fc.folds = cfg.folds;
  fc.seed = run_seed;
  fc.threads = cfg.threads > 0 ? cfg.threads : default_threads();

  std::vector<SampleGroup> train;
  train.reserve(train_idx.size());
  for (int i : train_idx) train.push_back(groups[static_cast<std::size_t>(i)]);

  FusionModel model;
  if (cfg.topology == Topology::Sap) {
    if (cfg.ap_ids.size() != 1)
      throw ConfigError("sap needs exactly one ap, got " + std::to_string(cfg.ap_ids.size()));
    const auto pos =
        std::find(ds.ap_ids.begin(), ds.ap_ids.end(), cfg.ap_ids[0]) - ds.ap_ids.begin();
    if (pos == static_cast<long>(ds.ap_ids.size()))
      throw DataError("ap " + std::to_string(cfg.ap_ids[0]) + " not present in dataset");
    std::vector<const CsiSample*> slice;
    slice.reserve(train.size());
    for (const SampleGroup& g : train)
      slice.push_back(&ds.samples[static_cast<std::size_t>(
          g.sample_index[static_cast<std::size_t>(pos)])]);
    model = train_sap(slice, fc);
  } else if (cfg.topology == Topology::Cmap) {
    model = train_cmap(ds, train, cfg.ap_ids, fc);
  } else {
    model = train_amap(ds, train, cfg.ap_ids, fc);
  }
  model.activity_names = ds.activity_names;
  model.orientation_names = ds.orientation_names;
  return model;
}

EvalResult evaluate(const Dataset& ds, const RunConfig& cfg) {
  if (cfg.runs < 1) throw ConfigError("runs must be >= 1");
  if (cfg.parallel_runs < 1) throw ConfigError("parallel_runs must be >= 1");
  const std::vector<SampleGroup> groups = group_samples(ds);

  std::vector<int> act_order(ds.activity_names.size());
  std::iota(act_order.begin(), act_order.end(), 0);
  std::vector<int> ori_order(ds.orientation_names.size());
  std::iota(ori_order.begin(), ori_order.end(), 0);

  // Runs are independent; each writes its own slot, so executing them
  // concurrently cannot change the result. The per-run thread budget shrinks
  // accordingly.
  const int concurrent = std::min(cfg.parallel_runs, cfg.runs);
  RunConfig per_run = cfg;
  if (concurrent > 1) {
    const int total = cfg.threads > 0 ? cfg.threads : default_threads();
    per_run.threads = std::max(1, total / concurrent);
  }

  std::vector<EvalRun> runs(static_cast<std::size_t>(cfg.runs));
  std::vector<std::vector<PredictionRecord>> preds(static_cast<std::size_t>(cfg.runs));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(cfg.runs));

  parallel_for(cfg.runs, concurrent, [&](int r) {
    try {
      const std::uint64_t run_seed = cfg.seed + static_cast<std::uint64_t>(r);
      const auto [train_idx, test_idx] =
          split_groups(groups, SplitSpec{cfg.train_fraction, run_seed, cfg.split_by_user});
      const FusionModel model = train_run(ds, groups, train_idx, per_run, run_seed);

      ConfusionMatrix act_cm(act_order), ori_cm(ori_order);
      for (int ti : test_idx) {
        const SampleGroup& g = groups[static_cast<std::size_t>(ti)];
        std::vector<ApInput> inputs;
        for (int ap : model.ap_ids) {
          const auto pos = std::find(ds.ap_ids.begin(), ds.ap_ids.end(), ap) - ds.ap_ids.begin();
          inputs.push_back({ap, &ds.samples[static_cast<std::size_t>(
                                    g.sample_index[static_cast<std::size_t>(pos)])]
                                    .amplitudes});
        }
        const auto [pred_act, pred_ori] = predict(model, inputs);
        act_cm.add(g.activity, pred_act);
        ori_cm.add(g.orientation, pred_ori);
        preds[static_cast<std::size_t>(r)].push_back(
            {r, g.sample_id, g.activity, pred_act, g.orientation, pred_ori});
      }

      EvalRun& run = runs[static_cast<std::size_t>(r)];
      run.run_seed = run_seed;
      run.report.run_seed = run_seed;
      run.report.activity = task_metrics(act_cm);
      run.report.orientation = task_metrics(ori_cm);
      for (const RidgeModel& h : model.activity_heads) run.activity_alphas.push_back(h.alpha);
      for (const RidgeModel& h : model.orientation_heads)
        run.orientation_alphas.push_back(h.alpha);
    } catch (...) {
      errors[static_cast<std::size_t>(r)] = std::current_exception();
    }
  });
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  EvalResult result;
  result.runs = std::move(runs);
  for (auto& p : preds)
    result.predictions.insert(result.predictions.end(), p.begin(), p.end());

  std::vector<TaskMetrics> act_runs, ori_runs;
  for (const EvalRun& r : result.runs) {
    act_runs.push_back(r.report.activity);
    ori_runs.push_back(r.report.orientation);
  }
  result.activity = aggregate_task(act_runs);
  result.orientation = aggregate_task(ori_runs);
  return result;
}

void write_reports(const EvalResult& result, const RunConfig& cfg, const Dataset& ds,
                   const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const std::string label = model_row_label(cfg);

  // ---- report.txt ----
  std::string txt = "csisense evaluation report\n";
  txt += "model: " + label + "\naps:";
  for (int ap : cfg.ap_ids) txt += " " + std::to_string(ap);
  char frac[32];
  std::snprintf(frac, sizeof(frac), "%g", cfg.train_fraction);
  txt += "\nruns: " + std::to_string(cfg.runs) + " (base seed " + std::to_string(cfg.seed) +
         ")\ntrain fraction: " + std::string(frac) + "\n";
  txt += cfg.split_by_user ? "split: user-disjoint\n"
                           : "split: stratified by (activity, orientation)\n";
  txt += "kernel bank: K=" + std::to_string(cfg.bank.num_kernels) +
         " length=" + std::to_string(cfg.bank.kernel_length) +
         " D=" + std::to_string(cfg.bank.total_features) +
         " L'=" + std::to_string(cfg.bank.max_dilations_per_kernel) + "\n\n";

  const std::size_t lw = std::max<std::size_t>(label.size() + 2, 14);
  txt += "Summary over all classes (mean±std %, population std, " +
         std::to_string(cfg.runs) + " runs)\n";
  txt += pad_to("Model", lw) + "| " + pad_to("Activity", 4 * 13) + "| Orientation\n";
  txt += pad_to("", lw) + "| ";
  for (int i = 0; i < 2; ++i)
    txt += pad_to("Acc", 13) + pad_to("BAcc", 13) + pad_to("F1", 13) + pad_to("MCC", 13) +
           (i == 0 ? "| " : "\n");
  txt += pad_to(label, lw) + "| ";
  for (const MeanStd* ms : {&result.activity.acc, &result.activity.bacc, &result.activity.f1,
                            &result.activity.mcc})
    txt += pad_to(percent_cell(*ms), 13);
  txt += "| ";
  for (const MeanStd* ms : {&result.orientation.acc, &result.orientation.bacc,
                            &result.orientation.f1, &result.orientation.mcc})
    txt += pad_to(percent_cell(*ms), 13);
  txt += "\n\n";

  txt += "Per-class accuracy (mean±std %, " + std::to_string(cfg.runs) + " runs)\n";
  txt += pad_to("Model", lw) + "|";
  std::vector<std::size_t> widths;
  std::vector<const MeanStd*> cells;
  for (std::size_t c = 0; c < ds.activity_names.size(); ++c) {
    widths.push_back(std::max<std::size_t>(ds.activity_names[c].size() + 2, 13));
    cells.push_back(&result.activity.per_class[c]);
    txt += " " + pad_to(ds.activity_names[c], widths.back() - 1);
  }
  txt += "|";
  for (std::size_t c = 0; c < ds.orientation_names.size(); ++c) {
    widths.push_back(std::max<std::size_t>(ds.orientation_names[c].size() + 2, 13));
    cells.push_back(&result.orientation.per_class[c]);
    txt += " " + pad_to(ds.orientation_names[c], widths.back() - 1);
  }
  txt += "\n" + pad_to(label, lw) + "|";
  for (std::size_t i = 0; i < cells.size(); ++i) {
    txt += " " + pad_to(percent_cell(*cells[i]), widths[i] - 1);
    if (i + 1 == ds.activity_names.size()) txt += "|";
  }
  txt += "\n";
  atomic_write(out_dir / "report.txt", txt);

  // ---- report.json ----
  json j{{"format", "csisense-eval-report"},
         {"version", 1},
         {"config", json::parse(run_config_to_json(cfg))},
         {"label", label},
         {"activity_classes", ds.activity_names},
         {"orientation_classes", ds.orientation_names}};
  json runs = json::array();
  for (std::size_t r = 0; r < result.runs.size(); ++r) {
    const EvalRun& er = result.runs[r];
    runs.push_back({{"run", r},
                    {"seed", er.run_seed},
                    {"activity", task_run_json(er.report.activity, er.activity_alphas)},
                    {"orientation", task_run_json(er.report.orientation, er.orientation_alphas)}});
  }
  j["runs"] = runs;
  j["aggregate"] = {{"activity", task_agg_json(result.activity)},
                    {"orientation", task_agg_json(result.orientation)}};
  atomic_write(out_dir / "report.json", j.dump(2) + "\n");

  // ---- predictions.csv ----
  std::string csv =
      "run,sample_id,true_activity,predicted_activity,true_orientation,predicted_orientation\n";
  for (const PredictionRecord& p : result.predictions) {
    csv += std::to_string(p.run) + "," + std::to_string(p.sample_id) + "," +
           std::to_string(p.true_activity) + "," + std::to_string(p.predicted_activity) + "," +
           std::to_string(p.true_orientation) + "," + std::to_string(p.predicted_orientation) +
           "\n";
  }
  atomic_write(out_dir / "predictions.csv", csv);
}

}  // namespace csisense
