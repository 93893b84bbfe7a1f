#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "csisense/matrix.hpp"

namespace csisense {

// One CSI amplitude capture: S subcarriers over T time indices, all values
// non-negative and finite, labeled with activity and orientation classes.
struct CsiSample {
  int ap_id = 0;
  int sample_id = 0;
  Matrix amplitudes;  // S x T
  int activity = 0;
  int orientation = 0;
  int user_id = -1;  // -1 when unknown
};

struct Dataset {
  int subcarriers = 0;  // S
  int length = 0;       // T
  std::vector<int> ap_ids;
  std::vector<std::string> activity_names;
  std::vector<std::string> orientation_names;
  std::vector<CsiSample> samples;  // all APs, grouped by sample on load
};

// One logical capture event: the same (sample_id, labels) observed by every
// AP. Indices point into Dataset::samples, parallel to Dataset::ap_ids.
struct SampleGroup {
  int sample_id = 0;
  int activity = 0;
  int orientation = 0;
  int user_id = -1;
  std::vector<int> sample_index;  // one per ap_id, same order as Dataset::ap_ids
};

// Groups samples by sample_id and validates that every group holds exactly
// one sample per AP with consistent labels. Throws AlignmentError otherwise.
std::vector<SampleGroup> group_samples(const Dataset& ds);

struct SplitSpec {
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
  // Off: stratified within-pool split over (activity, orientation) cells.
  // On: user-disjoint split (whole users move to one side); stratification
  // is then only as balanced as the users are.
  bool by_user = false;
};

// Returns (train, test) index lists into `groups`. Stratified mode needs
// every (activity, orientation) cell to hold >= 2 groups; user mode needs
// >= 2 distinct known user ids. Deterministic in the seed and independent
// of the input ordering (members are shuffled in sample_id order).
std::pair<std::vector<int>, std::vector<int>> split_groups(
    const std::vector<SampleGroup>& groups, const SplitSpec& spec);

// ---- on-disk format ----
//
// A dataset directory holds `manifest.txt` plus one plain-text amplitude
// file per (sample, AP): S lines of T decimal values. Serialization uses
// shortest round-trip formatting, so write-then-load is bit-exact.

Dataset load_dataset(const std::filesystem::path& manifest_path);

// Reads one amplitude file (S lines x T values). Validates shape,
// finiteness, and non-negativity.
Matrix load_amplitude_file(const std::filesystem::path& path, int subcarriers, int length);

// Loads only the listed APs (empty = all). Skipping APs avoids reading
// amplitude files that the run will not touch.
Dataset load_dataset(const std::filesystem::path& manifest_path,
                     const std::vector<int>& ap_filter);

void write_dataset(const Dataset& ds, const std::filesystem::path& dir);

// ---- synthetic generator ----
//
// Stand-in for a measured CSI corpus. Activity selects a temporal waveform
// (tone / chirp / square / burst), orientation selects a per-AP gain and a
// delay profile across subcarriers, users contribute an amplitude scale,
// and Gaussian noise corrupts everything (clamped at zero).
struct SynthConfig {
  int subcarriers = 52;
  int length = 256;
  int num_aps = 5;
  int users = 6;
  int samples_per_cell = 20;
  double noise_std = 0.5;
  std::uint64_t seed = 0;
  int num_activities = 4;
  int num_orientations = 4;
};

// Paper-protocol shape: 20 samples x 4 activities x 4 orientations x 6 users
// over 5 APs -> 1920 samples per AP.
SynthConfig paper_shape_synth(std::uint64_t seed, double noise_std = 0.5);

Dataset synth_generate(const SynthConfig& cfg);

// Generates and writes a full dataset directory (manifest + amplitude files).
void synth_generate_to(const SynthConfig& cfg, const std::filesystem::path& dir);

// Default label names used when a generator config keeps 4 + 4 classes.
std::vector<std::string> default_activity_names(int count);
std::vector<std::string> default_orientation_names(int count);

}  // namespace csisense
