#include "feel/domain.hpp"

#include <cmath>
#include <string>

#include "feel/random.hpp"

namespace feel {

std::string_view to_string(TaskKind kind) noexcept {
  switch (kind) {
    case TaskKind::classification: return "classification";
    case TaskKind::timeseries: return "timeseries";
    case TaskKind::clustering: return "clustering";
  }
  return "unknown";
}

std::optional<TaskKind> parse_task_kind(std::string_view name) noexcept {
  if (name == "classification") return TaskKind::classification;
  if (name == "timeseries") return TaskKind::timeseries;
  if (name == "clustering") return TaskKind::clustering;
  return std::nullopt;
}

ChannelState ChannelState::resampled(std::uint64_t seed, DeviceId device, int round) const {
  ChannelState next = *this;
  if (std_snr_db <= 0.0) {
    next.snr_db = mean_snr_db;
    return next;
  }
  Rng rng = make_rng(seed, {tag(Stream::channel), static_cast<std::uint64_t>(device),
                            static_cast<std::uint64_t>(round)});
  std::normal_distribution<double> normal(mean_snr_db, std_snr_db);
  next.snr_db = normal(rng);
  return next;
}

std::vector<int> LocalDataset::class_counts() const {
  std::vector<int> counts(static_cast<std::size_t>(std::max(n_classes, 0)), 0);
  for (int label : labels) {
    if (label >= 0 && label < n_classes) ++counts[static_cast<std::size_t>(label)];
  }
  return counts;
}

Status LocalDataset::validate() const {
  if (features.data.size() != features.rows * features.cols) {
    return {Errc::shape_mismatch, "feature buffer does not match rows x cols"};
  }
  if (!source_index.empty() && source_index.size() != features.rows) {
    return {Errc::shape_mismatch, "source_index length differs from n_samples"};
  }
  if (task_kind == TaskKind::classification) {
    if (labels.size() != features.rows) {
      return {Errc::shape_mismatch, "label count differs from n_samples"};
    }
    for (int label : labels) {
      if (label < 0 || label >= n_classes) {
        return {Errc::label_out_of_range, "class id " + std::to_string(label)};
      }
    }
  }
  return Status::Ok();
}

Status validate_profile(const DeviceProfile& p, std::optional<int> current_round) {
  if (!(p.battery_level >= 0.0 && p.battery_level <= 1.0)) {
    return {Errc::battery_out_of_range, "battery_level=" + std::to_string(p.battery_level)};
  }
  if (!(p.cpu_freq > 0.0)) {
    return {Errc::nonpositive_frequency, "cpu_freq=" + std::to_string(p.cpu_freq)};
  }
  if (!(p.cpu_cycles_per_sample >= 0.0) || !(p.energy_per_cycle >= 0.0) ||
      !(p.tx_power >= 0.0) || !(p.capacity_joules > 0.0)) {
    return {Errc::invalid_argument, "negative hardware constant"};
  }
  if (p.participation_count < 0) {
    return {Errc::invalid_argument, "negative participation_count"};
  }
  if (current_round && p.participation_count > *current_round) {
    return {Errc::participation_exceeds_round,
            std::to_string(p.participation_count) + " > " + std::to_string(*current_round)};
  }
  if (p.dataset) return p.dataset->validate();
  return Status::Ok();
}

}  // namespace feel
