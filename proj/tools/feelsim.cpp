// feelsim: run data-aware FEEL scheduling experiments and compute dataset
// diversity measures.

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "feel/experiment.hpp"

namespace {

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const std::string part = text.substr(start, comma == std::string::npos ? comma : comma - start);
    if (part.empty()) throw CLI::ValidationError("--seeds", "empty seed in list");
    seeds.push_back(std::stoull(part));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return seeds;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Data-aware device scheduling simulator for federated edge learning"};
  app.set_version_flag("--version", std::string("feelsim ") + FEEL_VERSION);
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string seeds_text;
  std::vector<std::string> scheduler_names;
  auto* run = app.add_subcommand("run", "Run every (scheduler, seed) pair of an experiment config");
  run->add_option("config", config_path, "Experiment config file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Output directory (overrides [experiment] output_dir)");
  run->add_option("--seeds", seeds_text, "Comma-separated master seeds (overrides config)");
  run->add_option("--scheduler", scheduler_names,
                  "Scheduler to run; repeatable (diversity, random, data_size, "
                  "data_size_inverse, age_fair)");

  std::string csv_path;
  std::string task = "classification";
  std::string class_measure = "shannon";
  int embedding_m = 2;
  double tolerance = 0.2;
  auto* measures = app.add_subcommand("measures", "Print diversity measures of a CSV dataset");
  measures->add_option("csv", csv_path, "Dataset CSV")->required()->check(CLI::ExistingFile);
  measures->add_option("--task", task, "classification | timeseries")
      ->check(CLI::IsMember({"classification", "timeseries"}));
  measures->add_option("--measure", class_measure, "shannon | gini_simpson")
      ->check(CLI::IsMember({"shannon", "gini_simpson"}));
  measures->add_option("--m", embedding_m, "Embedding length for ApEn/SampEn")
      ->check(CLI::PositiveNumber);
  measures->add_option("--r", tolerance, "Tolerance as a multiple of the series stddev")
      ->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      feel::experiment::ExperimentSpec spec = feel::experiment::load_config(config_path);
      if (!out_dir.empty()) spec.output_dir = out_dir;
      if (!seeds_text.empty()) spec.seeds = parse_seeds(seeds_text);
      if (!scheduler_names.empty()) {
        spec.schedulers.clear();
        for (const auto& name : scheduler_names) {
          const auto policy = feel::engine::parse_policy(name);
          if (!policy) {
            std::cerr << "unknown scheduler '" << name << "'\n";
            return 2;
          }
          spec.schedulers.push_back(*policy);
        }
      }
      return feel::experiment::run_experiment(spec, std::cout);
    }
    if (*measures) {
      feel::experiment::MeasureOptions opts;
      opts.task = task == "timeseries" ? feel::experiment::MeasureTask::timeseries
                                       : feel::experiment::MeasureTask::classification;
      opts.class_measure = class_measure == "gini_simpson"
                               ? feel::diversity::ClassMeasure::gini_simpson
                               : feel::diversity::ClassMeasure::shannon;
      opts.embedding_m = embedding_m;
      opts.tolerance_factor = tolerance;
      const auto data = feel::experiment::read_dataset_csv(csv_path, opts.task);
      feel::experiment::print_measures(std::cout, data, opts);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
