#pragma once

// Prices every scheduling decision: Shannon-rate uplink, compute time,
// straggler-equalizing bandwidth allocation, and linear energy models.

#include <map>
#include <span>
#include <string_view>
#include <vector>

#include "feel/domain.hpp"

namespace feel::network {

enum class AllocationStrategy { equal, equalize_completion };

std::string_view to_string(AllocationStrategy s) noexcept;

struct NetworkConfig {
  double total_bandwidth = 1e6;  // Hz
  double model_size_bits = 1e5;
  AllocationStrategy allocation_strategy = AllocationStrategy::equalize_completion;

  Status validate() const;
};

/// log2(1 + SNR) in bits/s/Hz.
double spectral_efficiency(double snr_db);

/// bandwidth * log2(1 + 10^(snr_db / 10)).
double channel_rate(const ChannelState& channel, double bandwidth);

/// epochs * n_samples * cycles_per_sample / cpu_freq.
double compute_time(const DeviceProfile& device, std::size_t n_samples, int epochs);

/// Upload time of `bits` over `bandwidth` Hz. Throws Errc::unreachable_device
/// when the rate is zero.
double comm_time(const DeviceProfile& device, double bits, double bandwidth);

/// compute_time on the device's own data + model upload time.
double expected_completion_time(const DeviceProfile& device, const NetworkConfig& cfg,
                                double bandwidth, int epochs);

/// What a device needs from the uplink to finish: fixed compute time, bits to
/// send, and the spectral efficiency of its channel.
struct LinkDemand {
  double compute_time = 0.0;
  double bits = 0.0;
  double spectral_efficiency = 0.0;
};

struct Allocation {
  std::vector<double> bandwidth;  // Hz, parallel to the demands
  std::vector<bool> fallback;     // true: infeasible, given an equal share
  double target_time = 0.0;       // common completion time (equalize only)
};

/// Splits `total_bandwidth` so every device completes at a common time T,
/// found by bisection on T. Devices with a zero-rate channel get an equal
/// share and are flagged.
Allocation equalize_completion(std::span<const LinkDemand> demands, double total_bandwidth,
                               int iterations = 60);

/// Bandwidth per selected device under the configured strategy.
std::map<DeviceId, double> allocate_bandwidth(std::span<const DeviceProfile> selected,
                                              const NetworkConfig& cfg, int epochs,
                                              std::vector<DeviceId>* fallback = nullptr);

double energy_compute(const DeviceProfile& device, std::size_t n_samples, int epochs);

double energy_transmit(const DeviceProfile& device, double comm_seconds);

/// Slowest device gates the synchronous round.
double round_duration(const std::map<DeviceId, double>& times);

}  // namespace feel::network
