#pragma once

// Round loops for pre-training (dataset diversity) and post-training (model
// diversity) scheduling, plus full-run orchestration. Deterministic in the
// master seed: every per-device, per-round draw derives from
// (master_seed, stream, device id, round).

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "feel/datagen.hpp"
#include "feel/diversity.hpp"
#include "feel/domain.hpp"
#include "feel/learning.hpp"
#include "feel/network.hpp"
#include "feel/scheduler.hpp"

namespace feel::engine {

enum class Mode { pre_training, post_training };
enum class Policy { diversity, random, data_size, data_size_inverse, age_fair };
enum class Aggregation { fedavg, loss_weighted };

std::string_view to_string(Mode m) noexcept;
std::string_view to_string(Policy p) noexcept;
std::string_view to_string(Aggregation a) noexcept;
std::optional<Mode> parse_mode(std::string_view s) noexcept;
std::optional<Policy> parse_policy(std::string_view s) noexcept;
std::optional<Aggregation> parse_aggregation(std::string_view s) noexcept;

/// Ranges the per-device hardware is drawn from.
struct FleetConfig {
  double cpu_freq_min = 0.5e9;
  double cpu_freq_max = 2.0e9;
  double cpu_cycles_per_sample_min = 1e6;
  double cpu_cycles_per_sample_max = 5e6;
  double tx_power_min = 0.1;
  double tx_power_max = 0.5;
  double energy_per_cycle_min = 0.5e-9;
  double energy_per_cycle_max = 2.0e-9;
  double capacity_joules = 200.0;
  double battery_min = 0.6;
  double battery_max = 1.0;
  double mean_snr_db = 10.0;
  // Spread of the per-device mean SNR: sigma of ln(linear SNR).
  double snr_spread = 1.0;
  // Per-round fluctuation around each device's mean, in dB.
  double std_snr_db = 2.0;

  Status validate() const;
};

struct DataConfig {
  int n_classes = 10;
  int dim = 10;
  int samples_per_class = 400;
  double class_sep = 3.0;
  double test_fraction = 0.2;
  datagen::PartitionSpec partition;  // n_devices is taken from SimulationConfig

  Status validate() const;
};

struct SchedulerConfig {
  Policy policy = Policy::diversity;
  std::size_t devices_per_round = 10;
  scheduler::ScoreWeights weights;
  diversity::ClassMeasure class_measure = diversity::ClassMeasure::shannon;
  diversity::ModelDiversityWeights model_weights;
  double outlier_percentile = 0.95;

  Status validate() const;
};

struct SimulationConfig {
  int n_devices = 20;
  Mode mode = Mode::pre_training;
  FleetConfig devices;
  DataConfig data;
  learning::TrainConfig train;
  Aggregation aggregation = Aggregation::fedavg;
  double q = 1.0;
  network::NetworkConfig network;
  // Model upload size; when unset, 32 bits per parameter.
  std::optional<double> model_size_bits;
  scheduler::ConstraintConfig constraints;
  SchedulerConfig scheduler;
  int rounds_max = 50;
  std::optional<double> target_accuracy;
  bool stop_at_target = true;
  std::uint64_t master_seed = 1;

  Status validate() const;
};

struct SimulationState {
  SimulationConfig cfg;
  std::vector<DeviceProfile> devices;
  // Computed on device; only the scalar index is ever reported.
  std::vector<DatasetProfile> dataset_profiles;
  ModelParams global;
  LocalDataset test_set;
  learning::Evaluation last_eval;
  int round = 0;
};

struct SimulationResult {
  std::vector<RoundRecord> rounds;
  ModelParams final_model;
  std::optional<int> rounds_to_target;
  int aborted_rounds = 0;
  std::vector<DeviceProfile> final_devices;
};

/// Builds the fleet, partitions the data and initializes the global model.
SimulationState initialize(const SimulationConfig& cfg);

/// Steps 1-5 of one pre-training scheduling round; advances state.round.
RoundRecord run_round_pre(SimulationState& state);

/// Steps 1-5 of one post-training scheduling round; advances state.round.
RoundRecord run_round_post(SimulationState& state);

RoundRecord run_round(SimulationState& state);

SimulationResult run_simulation(const SimulationConfig& cfg);

/// Test metrics of a model trained centrally on the union of the training
/// split, used to express accuracy targets relative to a non-federated run.
learning::Evaluation centralized_baseline(const SimulationConfig& cfg, int epochs);

}  // namespace feel::engine
