#pragma once

// Config-file loading, (scheduler x seed) sweeps and CSV output.
//
// Config format: `[section]` headers and `key = value` lines; `#` or `;`
// start a comment. Unknown sections and keys are errors reported with their
// line number.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "feel/engine.hpp"

namespace feel::experiment {

struct ExperimentSpec {
  std::string name;
  engine::SimulationConfig base;
  std::vector<engine::Policy> schedulers;
  std::vector<std::uint64_t> seeds;
  std::filesystem::path output_dir = "out";
  bool export_partitions = false;

  Status validate() const;
};

ExperimentSpec parse_config(std::string_view text, std::string_view source = "<config>");
ExperimentSpec load_config(const std::filesystem::path& path);

/// Nine significant digits, shortest form (printf %.9g).
std::string format_float(double v);

/// round,duration_s,energy_j,n_participants,accuracy,loss,jain_fairness,aborted
void write_rounds_csv(std::ostream& out, const engine::SimulationResult& result);

struct RunSummary {
  engine::Policy scheduler = engine::Policy::random;
  std::uint64_t seed = 0;
  std::optional<int> rounds_to_target;
  double total_time_s = 0.0;
  double total_energy_j = 0.0;
  double final_accuracy = 0.0;
  double mean_jain = 0.0;
};

RunSummary summarize(engine::Policy scheduler, std::uint64_t seed,
                     const engine::SimulationResult& result);

/// scheduler,seed,rounds_to_target,total_time_s,total_energy_j,final_accuracy,mean_jain
void write_summary_csv(std::ostream& out, const std::vector<RunSummary>& runs);

/// Per-scheduler means over seeds, human readable.
void print_comparison(std::ostream& out, const std::vector<RunSummary>& runs);

/// Directory holding one run's rounds.csv.
std::filesystem::path run_directory(const ExperimentSpec& spec, engine::Policy scheduler,
                                    std::uint64_t seed);

/// Runs every (scheduler, seed) pair, writing rounds.csv per run as it
/// completes and summary.csv at the end. Returns 0 iff every run succeeded.
int run_experiment(const ExperimentSpec& spec, std::ostream& log);

enum class MeasureTask { classification, timeseries };

struct MeasureOptions {
  MeasureTask task = MeasureTask::classification;
  diversity::ClassMeasure class_measure = diversity::ClassMeasure::shannon;
  int embedding_m = 2;
  double tolerance_factor = 0.2;
};

/// Reads a numeric CSV (optional header row). Classification: last column is
/// the integer label. Time series: first column is the signal.
LocalDataset read_dataset_csv(const std::filesystem::path& path, MeasureTask task);

/// Prints `key = value` lines with the diversity measures of a dataset.
void print_measures(std::ostream& out, const LocalDataset& data, const MeasureOptions& opts);

}  // namespace feel::experiment
