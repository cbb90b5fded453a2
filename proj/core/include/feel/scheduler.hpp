#pragma once

// Eligibility filtering and device-selection policies. All functions are pure
// over immutable snapshots; randomized policies are deterministic in `seed`.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "feel/domain.hpp"
#include "feel/network.hpp"

namespace feel::scheduler {

struct ConstraintConfig {
  double min_battery = 0.2;
  double min_snr_db = 0.0;
  double completion_threshold = 10.0;  // s
  int min_participants = 1;
  std::optional<int> min_data_size;  // defaults to the training batch size

  Status validate() const;
};

struct ScoreWeights {
  double w_diversity = 0.6;
  double w_battery = 0.2;
  double w_channel = 0.2;

  Status validate() const;
};

/// Everything a policy needs to finish a decision: validity threshold and the
/// bandwidth pricing inputs.
struct DecisionContext {
  ConstraintConfig constraints;
  network::NetworkConfig network;
  int epochs = 1;
  int batch_size = 1;
};

/// Keeps devices with enough battery, a usable channel, small enough expected
/// completion time under an equal share of the band, and at least
/// min_data_size samples. Order is preserved. `share_count` is how many
/// devices the band is assumed to be split across (0: all of `devices`).
std::vector<DeviceProfile> filter_eligible(std::span<const DeviceProfile> devices,
                                           const ConstraintConfig& cc,
                                           const network::NetworkConfig& net, int epochs,
                                           int batch_size, std::size_t share_count = 0);

/// Pre-training selection from the devices' scalar reports plus the server's
/// own channel view: score = w_d * minmax(index) + w_b * battery
/// + w_c * minmax(snr). Top-K, ties to the lower id.
ScheduleDecision schedule_pre_training(std::span<const DeviceProfile> eligible,
                                       std::span<const DiversityReport> reports, std::size_t k,
                                       const ScoreWeights& weights, const DecisionContext& ctx);

/// Top-K by (already outlier-clamped) model diversity index, ties to the lower id.
ScheduleDecision schedule_post_training(std::span<const DeviceProfile> eligible_trained,
                                        const std::map<DeviceId, double>& indices, std::size_t k,
                                        const DecisionContext& ctx);

ScheduleDecision schedule_random(std::span<const DeviceProfile> eligible, std::size_t k,
                                 std::uint64_t seed, const DecisionContext& ctx);

/// Weighted sampling without replacement with probability proportional to
/// n_samples, or to 1 / n_samples when `inverse` is set.
ScheduleDecision schedule_data_size_priority(std::span<const DeviceProfile> eligible,
                                             std::size_t k, std::uint64_t seed,
                                             const DecisionContext& ctx, bool inverse = false);

/// Longest-idle first; devices that never participated rank first.
ScheduleDecision schedule_age_fair(std::span<const DeviceProfile> eligible, std::size_t k,
                                   int current_round, const DecisionContext& ctx);

/// (sum x)^2 / (n sum x^2); 1.0 when every count is zero.
double jain_fairness(std::span<const int> counts);
double jain_fairness(const std::map<DeviceId, int>& counts);

/// Min-max normalization to [0, 1]; a constant field maps to 0.5.
std::vector<double> min_max_normalize(std::span<const double> values);

/// Fills bandwidth, predicted completion and validity for a chosen set.
ScheduleDecision finalize_decision(std::span<const DeviceProfile> eligible,
                                   std::vector<DeviceId> selected, const DecisionContext& ctx);

}  // namespace feel::scheduler
