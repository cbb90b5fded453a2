#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "feel/error.hpp"

namespace feel {

using DeviceId = int;

/// Row-major dense matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  bool operator==(const Matrix&) const = default;
};

enum class TaskKind { classification, timeseries, clustering };

std::string_view to_string(TaskKind kind) noexcept;
std::optional<TaskKind> parse_task_kind(std::string_view name) noexcept;

/// Wireless link state. `snr_db` is the realization for the current round;
/// the mean/std pair parameterizes the per-round redraw (normal in dB, i.e.
/// lognormal in linear SNR).
struct ChannelState {
  double mean_snr_db = 10.0;
  double std_snr_db = 0.0;
  double snr_db = 10.0;

  /// Pure function of (seed, device, round).
  ChannelState resampled(std::uint64_t seed, DeviceId device, int round) const;

  bool operator==(const ChannelState&) const = default;
};

/// Samples held by one device. Time series are stored as an n x 1 matrix.
struct LocalDataset {
  TaskKind task_kind = TaskKind::classification;
  Matrix features;
  std::vector<int> labels;  // classification only
  int n_classes = 0;        // global class count (classification only)
  // Index of each row in the generating pool; duplicates repeat an index.
  std::vector<std::size_t> source_index;

  std::size_t n_samples() const noexcept { return features.rows; }
  std::vector<int> class_counts() const;
  std::span<const double> series() const { return {features.data}; }

  Status validate() const;

  bool operator==(const LocalDataset&) const = default;
};

struct DeviceProfile {
  DeviceId id = 0;
  double cpu_cycles_per_sample = 1e6;  // cycles per sample per epoch
  double cpu_freq = 1e9;               // cycles / s
  double battery_level = 1.0;          // fraction of capacity_joules
  double capacity_joules = 100.0;
  double tx_power = 0.2;           // W
  double energy_per_cycle = 1e-9;  // J / cycle
  ChannelState channel;
  std::shared_ptr<const LocalDataset> dataset;
  int participation_count = 0;
  std::optional<int> last_participation_round;

  std::size_t n_samples() const noexcept { return dataset ? dataset->n_samples() : 0; }
  double remaining_joules() const noexcept { return battery_level * capacity_joules; }
};

/// Checks DeviceProfile invariants, reporting the first violation by name.
/// `current_round` enables the participation-count bound when known.
Status validate_profile(const DeviceProfile& p, std::optional<int> current_round = std::nullopt);

/// What a device knows about its own data. Never leaves the device except via
/// DiversityReport.
struct DatasetProfile {
  std::size_t richness = 0;
  double uncertainty = 0.0;
  double diversity_index = 0.0;
};

/// The only payload a device sends to the server during the scheduling phase:
/// one scalar diversity indicator plus its battery level.
struct DiversityReport {
  DeviceId device_id;
  double diversity_index;
  double battery_level;
};

struct ModelShape {
  std::size_t dim = 0;
  std::size_t n_classes = 0;

  std::size_t n_params() const noexcept { return dim * n_classes + n_classes; }
  bool operator==(const ModelShape&) const = default;
};

/// Flat parameters of the shared linear model: a dim x n_classes weight block
/// (feature-major, w[j * n_classes + c]) followed by n_classes biases.
struct ModelParams {
  ModelShape shape;
  std::vector<double> weights;
  int round = 0;
  std::optional<DeviceId> source;  // nullopt: produced by the server

  bool operator==(const ModelParams&) const = default;
};

struct ScheduleDecision {
  std::vector<DeviceId> selected;
  std::map<DeviceId, double> bandwidth_share;       // Hz
  std::map<DeviceId, double> predicted_completion;  // s
  std::vector<DeviceId> allocation_fallback;        // devices given equal share
  bool round_valid = false;
};

/// Per-device accounting for one round.
struct DeviceRoundLog {
  DeviceId device_id = 0;
  bool trained = false;
  bool selected = false;
  bool delivered = false;  // update reached the server
  double compute_time = 0.0;
  double comm_time = 0.0;
  double bandwidth = 0.0;
  double energy = 0.0;  // joules drained from the battery this round

  double total_time() const noexcept { return compute_time + comm_time; }
};

struct RoundRecord {
  int round = 0;
  double duration = 0.0;
  double total_energy = 0.0;
  std::vector<DeviceId> participants;
  double global_accuracy = 0.0;
  double global_loss = 0.0;
  double jain_fairness = 1.0;
  bool aborted = false;
  std::vector<DeviceRoundLog> devices;
  std::vector<DiversityReport> reports;
};

}  // namespace feel
