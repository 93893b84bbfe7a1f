#include "csisense/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <system_error>

#include "csisense/errors.hpp"
#include "csisense/parallel.hpp"
#include "csisense/rng.hpp"

namespace csisense {

namespace fs = std::filesystem;

namespace {

constexpr double kPhi = std::numbers::phi_v<double>;

double frac(double x) { return x - std::floor(x); }

// Shortest decimal form that parses back to the identical double.
void append_double(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> toks;
  std::istringstream iss(line);
  std::string t;
  while (iss >> t) toks.push_back(t);
  return toks;
}

int parse_int(const std::string& s, const std::string& what) {
  int v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw FormatError("bad " + what + ": '" + s + "'");
  return v;
}

}  // namespace

Matrix load_amplitude_file(const fs::path& path, int subcarriers, int length) {
  const int S = subcarriers, T = length;
  std::ifstream in(path);
  if (!in) throw IoError("cannot open amplitude file " + path.string());
  std::string contents((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  Matrix m(S, T);
  const char* p = contents.c_str();
  const char* end = p + contents.size();
  std::size_t count = 0;
  const std::size_t want = static_cast<std::size_t>(S) * T;
  while (p < end) {
    char* next = nullptr;
    const double v = std::strtod(p, &next);
    if (next == p) {
      while (p < end && (*p == ' ' || *p == '\n' || *p == '\r' || *p == '\t')) ++p;
      if (p >= end) break;
      throw FormatError("unparseable value in " + path.string());
    }
    if (count >= want)
      throw FormatError(path.string() + " holds more than the expected " +
                        std::to_string(S) + "x" + std::to_string(T) + " values");
    if (!std::isfinite(v)) throw DataError("non-finite amplitude in " + path.string());
    if (v < 0.0) throw DataError("negative amplitude in " + path.string());
    m.data[count++] = v;
    p = next;
  }
  if (count != want)
    throw FormatError(path.string() + " holds " + std::to_string(count) + " values, expected " +
                      std::to_string(S) + "x" + std::to_string(T));
  return m;
}

namespace {

void write_amplitude_file(const fs::path& path, const Matrix& m) {
  std::string out;
  out.reserve(static_cast<std::size_t>(m.rows) * m.cols * 20);
  for (int s = 0; s < m.rows; ++s) {
    for (int t = 0; t < m.cols; ++t) {
      if (t) out.push_back(' ');
      append_double(out, m.at(s, t));
    }
    out.push_back('\n');
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

void check_name(const std::string& name) {
  if (name.empty() || name.find_first_of(" \t\n") != std::string::npos)
    throw FormatError("class name '" + name + "' must be non-empty without whitespace");
}

}  // namespace

std::vector<std::string> default_activity_names(int count) {
  static const std::vector<std::string> base = {"Circle", "Left-Right", "Push-Pull", "Up-Down"};
  std::vector<std::string> names;
  for (int i = 0; i < count; ++i)
    names.push_back(i < 4 ? base[static_cast<std::size_t>(i)]
                          : "Activity-" + std::to_string(i));
  return names;
}

std::vector<std::string> default_orientation_names(int count) {
  static const std::vector<std::string> base = {"0°", "45°", "90°", "180°"};
  std::vector<std::string> names;
  for (int i = 0; i < count; ++i)
    names.push_back(i < 4 ? base[static_cast<std::size_t>(i)]
                          : "Orientation-" + std::to_string(i));
  return names;
}

std::vector<SampleGroup> group_samples(const Dataset& ds) {
  std::map<int, SampleGroup> by_id;
  std::map<int, int> ap_pos;
  for (std::size_t i = 0; i < ds.ap_ids.size(); ++i) ap_pos[ds.ap_ids[i]] = static_cast<int>(i);

  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    const CsiSample& s = ds.samples[i];
    const auto pos = ap_pos.find(s.ap_id);
    if (pos == ap_pos.end())
      throw AlignmentError("sample " + std::to_string(s.sample_id) + " has unknown ap " +
                           std::to_string(s.ap_id));
    auto [it, inserted] = by_id.try_emplace(s.sample_id);
    SampleGroup& g = it->second;
    if (inserted) {
      g.sample_id = s.sample_id;
      g.activity = s.activity;
      g.orientation = s.orientation;
      g.user_id = s.user_id;
      g.sample_index.assign(ds.ap_ids.size(), -1);
    } else if (g.activity != s.activity || g.orientation != s.orientation) {
      throw AlignmentError("sample " + std::to_string(s.sample_id) +
                           " has inconsistent labels across aps");
    }
    if (g.sample_index[static_cast<std::size_t>(pos->second)] != -1)
      throw AlignmentError("sample " + std::to_string(s.sample_id) + " listed twice for ap " +
                           std::to_string(s.ap_id));
    g.sample_index[static_cast<std::size_t>(pos->second)] = static_cast<int>(i);
  }

  std::vector<SampleGroup> groups;
  groups.reserve(by_id.size());
  for (auto& [id, g] : by_id) {
    for (std::size_t a = 0; a < ds.ap_ids.size(); ++a)
      if (g.sample_index[a] == -1)
        throw AlignmentError("sample " + std::to_string(id) + " missing ap " +
                             std::to_string(ds.ap_ids[a]));
    groups.push_back(std::move(g));
  }
  return groups;
}

namespace {

std::pair<std::vector<int>, std::vector<int>> split_by_user(
    const std::vector<SampleGroup>& groups, const SplitSpec& spec) {
  std::set<int> user_set;
  for (const SampleGroup& g : groups) {
    if (g.user_id < 0) throw SplitError("user-disjoint split needs every sample to carry a user id");
    user_set.insert(g.user_id);
  }
  if (user_set.size() < 2) throw SplitError("user-disjoint split needs at least 2 distinct users");

  std::vector<int> users(user_set.begin(), user_set.end());
  Rng rng(mix_seed(spec.seed, 0x05e7));
  for (std::size_t i = users.size(); i > 1; --i)
    std::swap(users[i - 1], users[rng.next_below(i)]);

  const auto u = static_cast<long long>(users.size());
  long long n_train = std::llround(spec.train_fraction * static_cast<double>(u));
  n_train = std::clamp<long long>(n_train, 1, u - 1);
  std::set<int> train_users(users.begin(), users.begin() + n_train);

  std::vector<int> train, test;
  for (std::size_t i = 0; i < groups.size(); ++i)
    (train_users.count(groups[i].user_id) ? train : test).push_back(static_cast<int>(i));
  return {std::move(train), std::move(test)};
}

}  // namespace

std::pair<std::vector<int>, std::vector<int>> split_groups(
    const std::vector<SampleGroup>& groups, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0))
    throw SplitError("train_fraction must be in (0,1)");
  if (spec.by_user) return split_by_user(groups, spec);

  // Cells keyed by (activity, orientation); members ordered by sample_id so
  // the shuffle is independent of input order.
  std::map<std::pair<int, int>, std::vector<int>> cells;
  for (std::size_t i = 0; i < groups.size(); ++i)
    cells[{groups[i].activity, groups[i].orientation}].push_back(static_cast<int>(i));

  std::vector<int> train, test;
  for (auto& [key, members] : cells) {
    if (members.size() < 2)
      throw SplitError("cell (activity " + std::to_string(key.first) + ", orientation " +
                       std::to_string(key.second) + ") has fewer than 2 samples");
    std::sort(members.begin(), members.end(), [&](int a, int b) {
      return groups[static_cast<std::size_t>(a)].sample_id <
             groups[static_cast<std::size_t>(b)].sample_id;
    });
    Rng rng(mix_seed(spec.seed, static_cast<std::uint64_t>(key.first),
                     static_cast<std::uint64_t>(key.second)));
    for (std::size_t i = members.size(); i > 1; --i)
      std::swap(members[i - 1], members[rng.next_below(i)]);

    const auto n = static_cast<long long>(members.size());
    long long n_train = std::llround(spec.train_fraction * static_cast<double>(n));
    n_train = std::clamp<long long>(n_train, 1, n - 1);
    for (long long i = 0; i < n; ++i)
      (i < n_train ? train : test).push_back(members[static_cast<std::size_t>(i)]);
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {std::move(train), std::move(test)};
}

Dataset load_dataset(const fs::path& manifest_path) { return load_dataset(manifest_path, {}); }

Dataset load_dataset(const fs::path& manifest_path, const std::vector<int>& ap_filter) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open manifest " + manifest_path.string());
  const fs::path root = manifest_path.parent_path();

  Dataset ds;
  std::string line;
  if (!std::getline(in, line) || tokenize(line) != std::vector<std::string>{"csisense-dataset"})
    throw FormatError("not a csisense dataset manifest: " + manifest_path.string());

  int declared_samples = -1;
  struct PendingSample {
    int id, act, ori, user;
    std::vector<std::pair<int, std::string>> files;  // (ap, relpath)
  };
  std::vector<PendingSample> pending;

  while (std::getline(in, line)) {
    const std::vector<std::string> t = tokenize(line);
    if (t.empty() || t[0][0] == '#') continue;
    if (t[0] == "version") {
      if (t.size() != 2 || parse_int(t[1], "version") != 1)
        throw FormatError("unsupported manifest version");
    } else if (t[0] == "subcarriers") {
      ds.subcarriers = parse_int(t.at(1), "subcarriers");
    } else if (t[0] == "length") {
      ds.length = parse_int(t.at(1), "length");
    } else if (t[0] == "aps") {
      for (std::size_t i = 1; i < t.size(); ++i) ds.ap_ids.push_back(parse_int(t[i], "ap id"));
    } else if (t[0] == "activities") {
      ds.activity_names.assign(t.begin() + 1, t.end());
    } else if (t[0] == "orientations") {
      ds.orientation_names.assign(t.begin() + 1, t.end());
    } else if (t[0] == "samples") {
      declared_samples = parse_int(t.at(1), "sample count");
    } else if (t[0] == "sample") {
      // sample <id> act <a> ori <o> user <u> files <ap>=<path> ...
      if (t.size() < 9 || t[2] != "act" || t[4] != "ori" || t[6] != "user" || t[8] != "files")
        throw FormatError("malformed sample record: " + line);
      PendingSample ps;
      ps.id = parse_int(t[1], "sample id");
      ps.act = parse_int(t[3], "activity id");
      ps.ori = parse_int(t[5], "orientation id");
      ps.user = parse_int(t[7], "user id");
      for (std::size_t i = 9; i < t.size(); ++i) {
        const auto eq = t[i].find('=');
        if (eq == std::string::npos) throw FormatError("malformed file entry: " + t[i]);
        ps.files.emplace_back(parse_int(t[i].substr(0, eq), "ap id"), t[i].substr(eq + 1));
      }
      pending.push_back(std::move(ps));
    } else {
      throw FormatError("unknown manifest key '" + t[0] + "'");
    }
  }

  if (ds.subcarriers < 1 || ds.length < 1) throw FormatError("manifest missing subcarriers/length");
  if (ds.ap_ids.empty()) throw FormatError("manifest lists no aps");
  if (declared_samples >= 0 && declared_samples != static_cast<int>(pending.size()))
    throw FormatError("manifest declares " + std::to_string(declared_samples) +
                      " samples but lists " + std::to_string(pending.size()));

  std::vector<int> wanted = ap_filter.empty() ? ds.ap_ids : ap_filter;
  std::sort(wanted.begin(), wanted.end());
  wanted.erase(std::unique(wanted.begin(), wanted.end()), wanted.end());
  for (int ap : wanted)
    if (std::find(ds.ap_ids.begin(), ds.ap_ids.end(), ap) == ds.ap_ids.end())
      throw DataError("requested ap " + std::to_string(ap) + " not present in dataset");

  const int C = static_cast<int>(ds.activity_names.size());
  const int O = static_cast<int>(ds.orientation_names.size());
  std::vector<fs::path> paths;
  for (const PendingSample& ps : pending) {
    if (ps.act < 0 || ps.act >= C)
      throw FormatError("sample " + std::to_string(ps.id) + " activity id out of range");
    if (ps.ori < 0 || ps.ori >= O)
      throw FormatError("sample " + std::to_string(ps.id) + " orientation id out of range");
    for (int ap : wanted) {
      const auto it = std::find_if(ps.files.begin(), ps.files.end(),
                                   [&](const auto& f) { return f.first == ap; });
      if (it == ps.files.end())
        throw FormatError("sample " + std::to_string(ps.id) + " has no file for ap " +
                          std::to_string(ap));
      CsiSample s;
      s.ap_id = ap;
      s.sample_id = ps.id;
      s.activity = ps.act;
      s.orientation = ps.ori;
      s.user_id = ps.user;
      ds.samples.push_back(std::move(s));
      paths.push_back(root / it->second);
    }
  }

  std::vector<std::exception_ptr> errors(ds.samples.size());
  parallel_for(static_cast<int>(ds.samples.size()), default_threads(), [&](int i) {
    try {
      ds.samples[static_cast<std::size_t>(i)].amplitudes =
          load_amplitude_file(paths[static_cast<std::size_t>(i)], ds.subcarriers, ds.length);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  });
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  ds.ap_ids = wanted;
  return ds;
}

void write_dataset(const Dataset& ds, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  for (int ap : ds.ap_ids) fs::create_directories(dir / ("ap" + std::to_string(ap)), ec);

  for (const std::string& n : ds.activity_names) check_name(n);
  for (const std::string& n : ds.orientation_names) check_name(n);

  // Group by sample id to emit one record per logical sample.
  std::map<int, std::vector<const CsiSample*>> by_id;
  for (const CsiSample& s : ds.samples) by_id[s.sample_id].push_back(&s);

  std::string manifest = "csisense-dataset\nversion 1\n";
  manifest += "subcarriers " + std::to_string(ds.subcarriers) + "\n";
  manifest += "length " + std::to_string(ds.length) + "\n";
  manifest += "aps";
  for (int ap : ds.ap_ids) manifest += " " + std::to_string(ap);
  manifest += "\nactivities";
  for (const auto& n : ds.activity_names) manifest += " " + n;
  manifest += "\norientations";
  for (const auto& n : ds.orientation_names) manifest += " " + n;
  manifest += "\nsamples " + std::to_string(by_id.size()) + "\n";

  char name[64];
  for (const auto& [id, samples] : by_id) {
    const CsiSample* first = samples.front();
    manifest += "sample " + std::to_string(id) + " act " + std::to_string(first->activity) +
                " ori " + std::to_string(first->orientation) + " user " +
                std::to_string(first->user_id) + " files";
    for (const CsiSample* s : samples) {
      std::snprintf(name, sizeof(name), "ap%d/s%06d.txt", s->ap_id, s->sample_id);
      manifest += " " + std::to_string(s->ap_id) + "=" + name;
      write_amplitude_file(dir / name, s->amplitudes);
    }
    manifest += "\n";
  }

  std::ofstream f(dir / "manifest.txt", std::ios::binary);
  if (!f) throw IoError("cannot write manifest in " + dir.string());
  f.write(manifest.data(), static_cast<std::streamsize>(manifest.size()));
}

SynthConfig paper_shape_synth(std::uint64_t seed, double noise_std) {
  SynthConfig cfg;
  cfg.subcarriers = 52;
  cfg.length = 256;
  cfg.num_aps = 5;
  cfg.users = 6;
  cfg.samples_per_cell = 20;
  cfg.noise_std = noise_std;
  cfg.seed = seed;
  return cfg;
}

namespace {

// Class waveforms on the periodic unit interval. Distinct shapes and bands:
// tone, chirp, square, burst train. Classes past 3 reuse the shapes at
// doubled frequency.
double waveform(int activity, double x) {
  x = frac(x);
  const double fm = 1.0 + static_cast<double>(activity / 4);
  constexpr double two_pi = 2.0 * std::numbers::pi;
  switch (activity % 4) {
    case 0:
      return std::sin(two_pi * 3.0 * fm * x);
    case 1:
      return std::sin(two_pi * fm * (2.0 * x + 2.0 * x * x));
    case 2:
      return std::sin(two_pi * 2.0 * fm * x) >= 0.0 ? 1.0 : -1.0;
    default: {
      const double e1 = std::exp(-((x - 0.3) / 0.12) * ((x - 0.3) / 0.12));
      const double e2 = std::exp(-((x - 0.7) / 0.12) * ((x - 0.7) / 0.12));
      return (e1 + e2) * std::sin(two_pi * 6.0 * fm * x);
    }
  }
}

// Fixed per-(ap, orientation) propagation tables. Orientation sets the gain
// level (distinct per AP via a coprime permutation), an overall delay, a
// per-subcarrier incremental delay, and the frequency-ripple profile.
struct Propagation {
  double gain, delay, delay_slope, ripple_freq, ripple_phase;
};

Propagation propagation(int ap, int o, int num_orientations) {
  const int O = std::max(num_orientations, 2);
  const double lo = 0.55, hi = 1.75;
  const int mult = (O % 3 != 0) ? 3 : 1;
  const int level = (mult * o + ap) % O;
  Propagation p;
  p.gain = lo * std::pow(hi / lo, static_cast<double>(level) / (O - 1)) *
           (1.0 + 0.05 * frac(kPhi * (ap + 1)));
  p.delay = 0.02 * frac(kPhi * (7.0 * ap + 3.0 * o + 1.0));
  p.delay_slope = (0.05 + 0.07 * frac(kPhi * (5.0 * ap + 11.0 * o + 2.0))) / 8.0;
  p.ripple_freq = 1.5 + 3.0 * frac(kPhi * (13.0 * ap + 3.0 * o + 3.0));
  p.ripple_phase = 2.0 * std::numbers::pi * frac(kPhi * (17.0 * ap + 19.0 * o + 4.0));
  return p;
}

}  // namespace

Dataset synth_generate(const SynthConfig& cfg) {
  if (cfg.subcarriers < 1 || cfg.length < 1 || cfg.num_aps < 1 || cfg.users < 1 ||
      cfg.samples_per_cell < 1 || cfg.num_activities < 1 || cfg.num_orientations < 1)
    throw ConfigError("all synthetic generator counts must be >= 1");
  if (cfg.noise_std < 0.0 || !std::isfinite(cfg.noise_std))
    throw ConfigError("noise_std must be finite and >= 0");

  const int S = cfg.subcarriers, T = cfg.length;
  Dataset ds;
  ds.subcarriers = S;
  ds.length = T;
  for (int a = 0; a < cfg.num_aps; ++a) ds.ap_ids.push_back(a + 1);
  ds.activity_names = default_activity_names(cfg.num_activities);
  ds.orientation_names = default_orientation_names(cfg.num_orientations);

  std::vector<double> user_scale(static_cast<std::size_t>(cfg.users));
  for (int u = 0; u < cfg.users; ++u) {
    Rng rng(mix_seed(cfg.seed, 0x05e2, static_cast<std::uint64_t>(u)));
    user_scale[static_cast<std::size_t>(u)] = 0.9 + 0.2 * rng.next_double();
  }

  const std::size_t total = static_cast<std::size_t>(cfg.num_activities) *
                            cfg.num_orientations * cfg.users * cfg.samples_per_cell *
                            cfg.num_aps;
  ds.samples.reserve(total);

  Matrix psi(S, T);
  int sample_id = 0;
  for (int c = 0; c < cfg.num_activities; ++c) {
    for (int o = 0; o < cfg.num_orientations; ++o) {
      for (int u = 0; u < cfg.users; ++u) {
        for (int m = 0; m < cfg.samples_per_cell; ++m, ++sample_id) {
          Rng jitter(mix_seed(cfg.seed, 0x5a3, static_cast<std::uint64_t>(sample_id)));
          const double phase_j = 0.01 * jitter.next_normal();
          const double amp_j = 1.0 + 0.02 * jitter.next_normal();

          for (int a = 0; a < cfg.num_aps; ++a) {
            const Propagation p = propagation(a, o, cfg.num_orientations);

            double energy = 0.0;
            for (int s = 0; s < S; ++s) {
              const double dly = p.delay + p.delay_slope * (static_cast<double>(s) / S);
              for (int t = 0; t < T; ++t) {
                const double v = waveform(c, static_cast<double>(t) / T - dly + phase_j);
                psi.at(s, t) = v;
                energy += v * v;
              }
            }
            const double rms = std::sqrt(energy / (static_cast<double>(S) * T));
            const double inv_rms = rms > 0.0 ? 1.0 / rms : 1.0;

            CsiSample cs;
            cs.ap_id = a + 1;
            cs.sample_id = sample_id;
            cs.activity = c;
            cs.orientation = o;
            cs.user_id = u;
            cs.amplitudes = Matrix(S, T);
            Rng noise(mix_seed(cfg.seed, 0x401e, static_cast<std::uint64_t>(sample_id),
                               static_cast<std::uint64_t>(a)));
            const double ug = user_scale[static_cast<std::size_t>(u)] * p.gain * amp_j;
            for (int s = 0; s < S; ++s) {
              const double ripple =
                  1.0 + 0.3 * std::cos(2.0 * std::numbers::pi * p.ripple_freq * s / S +
                                       p.ripple_phase);
              for (int t = 0; t < T; ++t) {
                double v = 10.0 + ug * ripple * (1.6 + 0.8 * psi.at(s, t) * inv_rms);
                if (cfg.noise_std > 0.0) v += cfg.noise_std * noise.next_normal();
                cs.amplitudes.at(s, t) = std::max(v, 0.0);
              }
            }
            ds.samples.push_back(std::move(cs));
          }
        }
      }
    }
  }
  return ds;
}

void synth_generate_to(const SynthConfig& cfg, const fs::path& dir) {
  write_dataset(synth_generate(cfg), dir);
}

}  // namespace csisense
