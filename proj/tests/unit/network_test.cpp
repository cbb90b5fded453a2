#include "feel/network.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace feel::network {
namespace {

DeviceProfile device(DeviceId id, double snr_db, std::size_t samples = 0) {
  DeviceProfile d;
  d.id = id;
  d.cpu_cycles_per_sample = 1e6;
  d.cpu_freq = 1e9;
  d.channel = {snr_db, 0.0, snr_db};
  auto data = std::make_shared<LocalDataset>();
  data->n_classes = 1;
  data->features = Matrix(samples, 1);
  data->labels.assign(samples, 0);
  d.dataset = data;
  return d;
}

template <typename F>
Errc error_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::ok;
}

TEST(ChannelRate, Anchors) {
  EXPECT_NEAR(channel_rate({0, 0, 0.0}, 1.0), 1.0, 1e-12);
  EXPECT_NEAR(channel_rate({0, 0, 10.0 * std::log10(3.0)}, 1.0), 2.0, 1e-12);
  EXPECT_EQ(channel_rate({0, 0, 5.0}, 0.0), 0.0);
}

TEST(ChannelRate, MonotoneInSnrAndBandwidth) {
  for (double snr = -10; snr < 30; snr += 1.5) {
    EXPECT_LT(channel_rate({0, 0, snr}, 1e3), channel_rate({0, 0, snr + 0.5}, 1e3));
    EXPECT_LT(channel_rate({0, 0, snr}, 1e3), channel_rate({0, 0, snr}, 2e3));
  }
}

TEST(ComputeTime, Anchors) {
  auto d = device(0, 10.0);
  EXPECT_EQ(compute_time(d, 0, 3), 0.0);
  EXPECT_NEAR(compute_time(d, 100, 2), 0.2, 1e-15);
  const double base = compute_time(d, 77, 1);
  d.cpu_freq *= 2;
  EXPECT_NEAR(compute_time(d, 77, 1), base / 2, 1e-15);
}

TEST(ExpectedCompletion, ComputePlusUpload) {
  // SNR = 1 (0 dB): 1 bit/s/Hz, so 1e6 Hz gives 1e6 b/s.
  auto d = device(0, 0.0, 100);
  NetworkConfig cfg;
  cfg.model_size_bits = 1e6;
  EXPECT_NEAR(expected_completion_time(d, cfg, 1e6, 2), 1.2, 1e-12);
}

TEST(ExpectedCompletion, HighSnrLeavesComputeOnly) {
  auto d = device(0, 200.0, 100);
  NetworkConfig cfg;
  cfg.model_size_bits = 1e5;
  const double comm = 1e5 / (1e6 * std::log2(1.0 + 1e20));
  EXPECT_NEAR(expected_completion_time(d, cfg, 1e6, 2), 0.2 + comm, 1e-12);
  EXPECT_LT(comm, 0.002);
}

TEST(ExpectedCompletion, UnderflowIsUnreachable) {
  auto d = device(0, -400.0, 10);
  NetworkConfig cfg;
  EXPECT_EQ(error_of([&] { expected_completion_time(d, cfg, 1e6, 1); }), Errc::unreachable_device);
}

TEST(Allocate, IdenticalDevicesSplitEvenly) {
  NetworkConfig cfg;
  cfg.total_bandwidth = 9e5;
  std::vector<DeviceProfile> devs{device(0, 7.0, 50), device(1, 7.0, 50), device(2, 7.0, 50)};
  for (auto strategy : {AllocationStrategy::equal, AllocationStrategy::equalize_completion}) {
    cfg.allocation_strategy = strategy;
    for (const auto& [id, hz] : allocate_bandwidth(devs, cfg, 1)) EXPECT_NEAR(hz, 3e5, 1e-6);
  }
}

TEST(Allocate, DoubleBitsGetTwoThirds) {
  // Zero compute, same SNR: b_k proportional to bits_k.
  const std::vector<LinkDemand> demands{{0.0, 2000.0, 1.5}, {0.0, 1000.0, 1.5}};
  const auto alloc = equalize_completion(demands, 3e4);
  EXPECT_NEAR(alloc.bandwidth[0], 2e4, 1e-6 * 3e4);
  EXPECT_NEAR(alloc.bandwidth[1], 1e4, 1e-6 * 3e4);
}

TEST(Allocate, EqualizesCompletionOnHeterogeneousDevices) {
  std::mt19937_64 rng(2);
  std::lognormal_distribution<double> snr(std::log(10.0), 1.0);
  std::uniform_real_distribution<double> compute(0.05, 0.5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<LinkDemand> demands;
    for (int i = 0; i < 12; ++i) demands.push_back({compute(rng), 1e5, std::log2(1 + snr(rng))});
    const double total = 1e6;
    const auto alloc = equalize_completion(demands, total);
    double sum = 0.0;
    double slowest = 0.0, fastest = 1e300;
    double equal_slowest = 0.0;
    for (std::size_t i = 0; i < demands.size(); ++i) {
      sum += alloc.bandwidth[i];
      const double t = demands[i].compute_time +
                       demands[i].bits / (alloc.bandwidth[i] * demands[i].spectral_efficiency);
      slowest = std::max(slowest, t);
      fastest = std::min(fastest, t);
      equal_slowest = std::max(equal_slowest,
                               demands[i].compute_time +
                                   demands[i].bits / (total / 12 * demands[i].spectral_efficiency));
    }
    EXPECT_NEAR(sum, total, 1e-6 * total);
    EXPECT_LE(slowest - fastest, 1e-3 * slowest);
    EXPECT_LE(slowest, equal_slowest);
  }
}

TEST(Allocate, DeadChannelFallsBackToEqualShare) {
  const std::vector<LinkDemand> demands{{0.1, 1e4, 0.0}, {0.1, 1e4, 2.0}, {0.2, 1e4, 1.0}};
  const auto alloc = equalize_completion(demands, 3e3);
  EXPECT_TRUE(alloc.fallback[0]);
  EXPECT_FALSE(alloc.fallback[1]);
  EXPECT_DOUBLE_EQ(alloc.bandwidth[0], 1e3);
  EXPECT_NEAR(alloc.bandwidth[1] + alloc.bandwidth[2], 2e3, 1e-9);
}

TEST(Energy, ComputeAndTransmit) {
  auto d = device(0, 5.0);
  d.energy_per_cycle = 1e-9;
  EXPECT_EQ(energy_compute(d, 0, 2), 0.0);
  EXPECT_NEAR(energy_compute(d, 100, 1), 0.1, 1e-15);
  EXPECT_NEAR(energy_compute(d, 100, 3), 3 * energy_compute(d, 100, 1), 1e-15);
  d.tx_power = 0.5;
  EXPECT_EQ(energy_transmit(d, 0.0), 0.0);
  EXPECT_NEAR(energy_transmit(d, 2.0), 1.0, 1e-15);
  EXPECT_NEAR(energy_transmit(d, 6.0), 3 * energy_transmit(d, 2.0), 1e-15);
}

TEST(RoundDuration, SlowestDevice) {
  EXPECT_EQ(round_duration({{1, 1.0}, {2, 3.0}}), 3.0);
  EXPECT_EQ(round_duration({{5, 0.7}}), 0.7);
  EXPECT_EQ(round_duration({{2, 3.0}, {1, 1.0}}), round_duration({{1, 1.0}, {2, 3.0}}));
  EXPECT_EQ(error_of([] { round_duration({}); }), Errc::no_participants);
}

}  // namespace
}  // namespace feel::network
