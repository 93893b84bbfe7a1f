#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

const char* kCli = CSISENSE_CLI_PATH;

struct CmdResult {
  int exit_code;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) return {};
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

CmdResult run_cli(const std::string& args) {
  const fs::path out = fs::temp_directory_path() / "csisense_cli_out.txt";
  const fs::path err = fs::temp_directory_path() / "csisense_cli_err.txt";
  const std::string cmd =
      std::string(kCli) + " " + args + " > " + out.string() + " 2> " + err.string();
  const int rc = std::system(cmd.c_str());
  return {rc == -1 ? -1 : WEXITSTATUS(rc), slurp(out), slurp(err)};
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("csisense_cli_" + name);
  fs::remove_all(dir);
  return dir;
}

// a tiny dataset all CLI tests share: 2 APs, 96 samples per AP
const fs::path& shared_dataset() {
  static fs::path dir = [] {
    const fs::path d = fresh_dir("data");
    const CmdResult r = run_cli("synth --out " + d.string() +
                                " --seed 4 --subcarriers 8 --length 64 --aps 2 --users 2 "
                                "--samples-per-cell 3 --noise-std 0.3");
    REQUIRE(r.exit_code == 0);
    return d;
  }();
  return dir;
}

}  // namespace

TEST_CASE("synth is deterministic and validates its flags") {
  const fs::path d1 = fresh_dir("synth1");
  const fs::path d2 = fresh_dir("synth2");
  const std::string flags =
      " --seed 9 --subcarriers 5 --length 32 --aps 1 --users 1 --samples-per-cell 2";
  CHECK(run_cli("synth --out " + d1.string() + flags).exit_code == 0);
  CHECK(run_cli("synth --out " + d2.string() + flags).exit_code == 0);

  int files = 0;
  for (const auto& entry : fs::recursive_directory_iterator(d1)) {
    if (!entry.is_regular_file()) continue;
    ++files;
    const fs::path rel = fs::relative(entry.path(), d1);
    CHECK(slurp(entry.path()) == slurp(d2 / rel));
  }
  CHECK(files == 1 + 32);  // manifest + 4*4*1*2 samples

  const CmdResult bad = run_cli("synth --out " + fresh_dir("synth3").string() + flags +
                                " --samples-per-cell 0");
  CHECK(bad.exit_code != 0);
  CHECK(bad.err.find("samples") != std::string::npos);

  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST_CASE("train writes an archive and prints chosen alphas") {
  const fs::path model = fs::temp_directory_path() / "csisense_cli_sap.csm";
  const CmdResult r = run_cli("train --data " + shared_dataset().string() +
                              " --topology sap --ap 1 --seed 3 --out " + model.string());
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("alpha") != std::string::npos);
  CHECK(fs::exists(model));

  const CmdResult show =
      run_cli("predict --model " + model.string() + " --show-config");
  CHECK(show.exit_code == 0);
  const json cfg = json::parse(show.out);
  CHECK(cfg.at("topology") == "sap");
  CHECK(cfg.at("seed") == 3);
}

TEST_CASE("predict matches the per-sample log of eval") {
  const fs::path model = fs::temp_directory_path() / "csisense_cli_sap2.csm";
  REQUIRE(run_cli("train --data " + shared_dataset().string() +
                  " --topology sap --ap 1 --seed 5 --out " + model.string())
              .exit_code == 0);
  const fs::path report = fresh_dir("report_pred");
  REQUIRE(run_cli("eval --data " + shared_dataset().string() +
                  " --topology sap --ap 1 --seed 5 --runs 1 --out " + report.string())
              .exit_code == 0);

  // take the first row of the prediction log: run 0 of eval trains the same
  // model as cmd_train at the same seed
  std::istringstream csv(slurp(report / "predictions.csv"));
  std::string header, row;
  REQUIRE(std::getline(csv, header));
  REQUIRE(std::getline(csv, row));
  std::vector<std::string> cols;
  {
    std::istringstream rs(row);
    std::string c;
    while (std::getline(rs, c, ',')) cols.push_back(c);
  }
  REQUIRE(cols.size() == 6);
  const int sample_id = std::stoi(cols[1]);
  const int pred_act = std::stoi(cols[3]);
  const int pred_ori = std::stoi(cols[5]);

  char name[64];
  std::snprintf(name, sizeof(name), "ap1/s%06d.txt", sample_id);
  const CmdResult p = run_cli("predict --model " + model.string() + " --input " +
                              (shared_dataset() / name).string());
  CHECK(p.exit_code == 0);

  const json cfgj = json::parse(run_cli("predict --model " + model.string() +
                                        " --show-config").out);
  // resolve predicted ids to names the same way the CLI prints them
  const std::vector<std::string> acts = {"Circle", "Left-Right", "Push-Pull", "Up-Down"};
  CHECK(p.out.find("activity: " + acts[static_cast<std::size_t>(pred_act)]) !=
        std::string::npos);
  const std::vector<std::string> oris = {"0°", "45°", "90°", "180°"};
  CHECK(p.out.find("orientation: " + oris[static_cast<std::size_t>(pred_ori)]) !=
        std::string::npos);
}

TEST_CASE("multi-ap predict requires every ap and names the missing one") {
  const fs::path model = fs::temp_directory_path() / "csisense_cli_cmap.csm";
  REQUIRE(run_cli("train --data " + shared_dataset().string() +
                  " --topology cmap --ap 1,2 --seed 3 --out " + model.string())
              .exit_code == 0);

  const fs::path s1 = shared_dataset() / "ap1" / "s000000.txt";
  const fs::path s2 = shared_dataset() / "ap2" / "s000000.txt";
  const CmdResult missing =
      run_cli("predict --model " + model.string() + " --input 1=" + s1.string());
  CHECK(missing.exit_code != 0);
  CHECK(missing.err.find("ap 2") != std::string::npos);

  const CmdResult ok = run_cli("predict --model " + model.string() + " --input 1=" +
                               s1.string() + " --input 2=" + s2.string());
  CHECK(ok.exit_code == 0);
  CHECK(ok.out.find("activity:") != std::string::npos);
  CHECK(ok.out.find("scores") != std::string::npos);
}

TEST_CASE("corrupt archives are refused") {
  const fs::path model = fs::temp_directory_path() / "csisense_cli_bad.csm";
  REQUIRE(run_cli("train --data " + shared_dataset().string() +
                  " --topology sap --ap 2 --seed 3 --out " + model.string())
              .exit_code == 0);
  std::string bytes = slurp(model);
  bytes.resize(bytes.size() / 2);
  std::ofstream(model, std::ios::binary | std::ios::trunc)
      .write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  const CmdResult r = run_cli("predict --model " + model.string() + " --show-config");
  CHECK(r.exit_code != 0);
}

TEST_CASE("eval emits reproducible reports with coherent aggregates") {
  const fs::path r1 = fresh_dir("eval1");
  const fs::path r2 = fresh_dir("eval2");
  const std::string flags = "eval --data " + shared_dataset().string() +
                            " --topology sap --ap 1 --seed 11 --runs 2 --out ";
  REQUIRE(run_cli(flags + r1.string()).exit_code == 0);
  REQUIRE(run_cli(flags + r2.string()).exit_code == 0);

  for (const char* f : {"report.txt", "report.json", "predictions.csv"}) {
    const std::string a = slurp(r1 / f), b = slurp(r2 / f);
    CHECK(!a.empty());
    CHECK(a == b);
  }

  const json rep = json::parse(slurp(r1 / "report.json"));
  REQUIRE(rep.at("runs").size() == 2);

  // re-aggregate the per-run records and compare against the stored mean
  for (const char* task : {"activity", "orientation"}) {
    for (const char* metric : {"acc", "bacc", "f1", "mcc"}) {
      double mean = 0.0;
      for (const auto& run : rep.at("runs")) mean += run.at(task).at(metric).get<double>();
      mean /= static_cast<double>(rep.at("runs").size());
      const double stored = rep.at("aggregate").at(task).at(metric).at("mean").get<double>();
      CHECK(std::abs(mean - stored) <= 1e-9);
    }
  }

  // single-run evals aggregate with zero std
  const fs::path r3 = fresh_dir("eval3");
  REQUIRE(run_cli("eval --data " + shared_dataset().string() +
                  " --topology sap --ap 1 --seed 11 --runs 1 --out " + r3.string())
              .exit_code == 0);
  const json rep3 = json::parse(slurp(r3 / "report.json"));
  for (const char* task : {"activity", "orientation"})
    for (const char* metric : {"acc", "bacc", "f1", "mcc"})
      CHECK(rep3.at("aggregate").at(task).at(metric).at("std").get<double>() == 0.0);

  fs::remove_all(r1);
  fs::remove_all(r2);
  fs::remove_all(r3);
}

TEST_CASE("unknown flags and missing arguments fail") {
  CHECK(run_cli("train --topology sap").exit_code != 0);
  CHECK(run_cli("eval --data nowhere --topology sap --ap 1 --out x").exit_code != 0);
  CHECK(run_cli("nonsense").exit_code != 0);
}
