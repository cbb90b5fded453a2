#include "feel/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace feel::network {

std::string_view to_string(AllocationStrategy s) noexcept {
  switch (s) {
    case AllocationStrategy::equal: return "equal";
    case AllocationStrategy::equalize_completion: return "equalize_completion";
  }
  return "unknown";
}

Status NetworkConfig::validate() const {
  if (!(total_bandwidth > 0.0)) return {Errc::invalid_config, "total_bandwidth must be > 0"};
  if (!(model_size_bits > 0.0)) return {Errc::invalid_config, "model_size_bits must be > 0"};
  return Status::Ok();
}

double spectral_efficiency(double snr_db) {
  return std::log2(1.0 + std::pow(10.0, snr_db / 10.0));
}

double channel_rate(const ChannelState& channel, double bandwidth) {
  if (!(bandwidth >= 0.0)) throw Error(Errc::invalid_argument, "negative bandwidth");
  if (bandwidth == 0.0) return 0.0;
  return bandwidth * spectral_efficiency(channel.snr_db);
}

double compute_time(const DeviceProfile& device, std::size_t n_samples, int epochs) {
  if (!(device.cpu_freq > 0.0)) throw Error(Errc::nonpositive_frequency);
  return static_cast<double>(epochs) * static_cast<double>(n_samples) *
         device.cpu_cycles_per_sample / device.cpu_freq;
}

double comm_time(const DeviceProfile& device, double bits, double bandwidth) {
  const double rate = channel_rate(device.channel, bandwidth);
  if (!(rate > 0.0)) {
    throw Error(Errc::unreachable_device, "device " + std::to_string(device.id) + " has zero rate");
  }
  return bits / rate;
}

double expected_completion_time(const DeviceProfile& device, const NetworkConfig& cfg,
                                double bandwidth, int epochs) {
  return compute_time(device, device.n_samples(), epochs) +
         comm_time(device, cfg.model_size_bits, bandwidth);
}

Allocation equalize_completion(std::span<const LinkDemand> demands, double total_bandwidth,
                               int iterations) {
  const std::size_t n = demands.size();
  Allocation out;
  out.bandwidth.assign(n, 0.0);
  out.fallback.assign(n, false);
  if (n == 0) return out;

  const double equal_share = total_bandwidth / static_cast<double>(n);
  std::vector<std::size_t> active;
  double pool = total_bandwidth;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& d = demands[i];
    if (!(d.spectral_efficiency > 0.0) || !std::isfinite(d.compute_time)) {
      out.fallback[i] = true;
      out.bandwidth[i] = equal_share;
      pool -= equal_share;
    } else {
      active.push_back(i);
    }
  }
  if (active.empty()) return out;

  auto required = [&](std::size_t i, double t) {
    const auto& d = demands[i];
    if (d.bits <= 0.0) return 0.0;
    const double slack = t - d.compute_time;
    if (slack <= 0.0) return std::numeric_limits<double>::infinity();
    return d.bits / (d.spectral_efficiency * slack);
  };
  auto demand_sum = [&](double t) {
    double sum = 0.0;
    for (std::size_t i : active) sum += required(i, t);
    return sum;
  };

  // lo: slowest pure compute (infeasible); hi: slowest device under an equal
  // split of the pool, where the sum of requirements is <= pool.
  const double share = pool / static_cast<double>(active.size());
  double lo = 0.0;
  double hi = 0.0;
  for (std::size_t i : active) {
    const auto& d = demands[i];
    lo = std::max(lo, d.compute_time);
    hi = std::max(hi, d.compute_time + d.bits / (d.spectral_efficiency * share));
  }
  if (demand_sum(hi) <= 0.0) {
    // Nothing to send: any split works.
    for (std::size_t i : active) out.bandwidth[i] = share;
    out.target_time = lo;
    return out;
  }
  for (int it = 0; it < iterations && hi > lo; ++it) {
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) break;
    if (demand_sum(mid) > pool) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  // hi is feasible; hand the leftover bandwidth out proportionally.
  const double sum = demand_sum(hi);
  const double scale = sum > 0.0 ? pool / sum : 1.0;
  for (std::size_t i : active) out.bandwidth[i] = required(i, hi) * scale;
  out.target_time = hi;
  return out;
}

std::map<DeviceId, double> allocate_bandwidth(std::span<const DeviceProfile> selected,
                                              const NetworkConfig& cfg, int epochs,
                                              std::vector<DeviceId>* fallback) {
  if (selected.empty()) throw Error(Errc::no_participants, "nothing to allocate");
  std::map<DeviceId, double> shares;
  if (fallback) fallback->clear();
  const double equal = cfg.total_bandwidth / static_cast<double>(selected.size());
  if (cfg.allocation_strategy == AllocationStrategy::equal) {
    for (const auto& d : selected) shares[d.id] = equal;
    return shares;
  }
  std::vector<LinkDemand> demands;
  demands.reserve(selected.size());
  for (const auto& d : selected) {
    demands.push_back({compute_time(d, d.n_samples(), epochs), cfg.model_size_bits,
                       spectral_efficiency(d.channel.snr_db)});
  }
  const Allocation alloc = equalize_completion(demands, cfg.total_bandwidth);
  for (std::size_t i = 0; i < selected.size(); ++i) {
    shares[selected[i].id] = alloc.bandwidth[i];
    if (fallback && alloc.fallback[i]) fallback->push_back(selected[i].id);
  }
  return shares;
}

double energy_compute(const DeviceProfile& device, std::size_t n_samples, int epochs) {
  return static_cast<double>(epochs) * static_cast<double>(n_samples) *
         device.cpu_cycles_per_sample * device.energy_per_cycle;
}

double energy_transmit(const DeviceProfile& device, double comm_seconds) {
  if (!(comm_seconds >= 0.0)) throw Error(Errc::invalid_argument, "negative comm time");
  return device.tx_power * comm_seconds;
}

double round_duration(const std::map<DeviceId, double>& times) {
  if (times.empty()) throw Error(Errc::no_participants, "empty round");
  double longest = -std::numeric_limits<double>::infinity();
  for (const auto& [id, t] : times) longest = std::max(longest, t);
  return longest;
}

}  // namespace feel::network
