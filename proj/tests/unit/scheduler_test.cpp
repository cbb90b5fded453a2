#include "feel/scheduler.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>

namespace feel::scheduler {
namespace {

DeviceProfile device(DeviceId id, std::size_t samples = 32, double battery = 0.9,
                     double snr_db = 10.0) {
  DeviceProfile d;
  d.id = id;
  d.battery_level = battery;
  d.cpu_cycles_per_sample = 1e5;
  d.cpu_freq = 1e9;
  d.channel = {snr_db, 0.0, snr_db};
  auto data = std::make_shared<LocalDataset>();
  data->n_classes = 1;
  data->features = Matrix(samples, 1);
  data->labels.assign(samples, 0);
  d.dataset = data;
  return d;
}

DecisionContext context(int min_participants = 1) {
  DecisionContext ctx;
  ctx.constraints.min_participants = min_participants;
  ctx.network.total_bandwidth = 1e6;
  ctx.network.model_size_bits = 1e4;
  return ctx;
}

std::vector<DeviceProfile> fleet(int n) {
  std::vector<DeviceProfile> out;
  for (int i = 0; i < n; ++i) out.push_back(device(i));
  return out;
}

TEST(FilterEligible, BatteryBelowMinimum) {
  ConstraintConfig cc;
  cc.min_battery = 0.2;
  std::vector<DeviceProfile> devs{device(0, 32, 0.05), device(1, 32, 0.5)};
  const auto kept = filter_eligible(devs, cc, context().network, 1, 16);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].id, 1);
}

TEST(FilterEligible, FewerSamplesThanBatch) {
  std::vector<DeviceProfile> devs{device(0, 8), device(1, 16)};
  const auto kept = filter_eligible(devs, {}, context().network, 1, 16);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].id, 1);
}

TEST(FilterEligible, ChannelAndCompletionThresholds) {
  ConstraintConfig cc;
  cc.min_snr_db = 0.0;
  cc.completion_threshold = 1.0;
  auto slow = device(2, 32);
  slow.cpu_freq = 1e6;  // 3.2 s of compute
  std::vector<DeviceProfile> devs{device(0, 32, 0.9, -3.0), device(1), slow};
  const auto kept = filter_eligible(devs, cc, context().network, 1, 16);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].id, 1);
}

TEST(FilterEligible, AllRetainedInOrder) {
  std::vector<DeviceProfile> devs{device(3), device(1), device(2)};
  const auto kept = filter_eligible(devs, {}, context().network, 1, 16);
  ASSERT_EQ(kept.size(), 3u);
  EXPECT_EQ(kept[0].id, 3);
  EXPECT_EQ(kept[1].id, 1);
  EXPECT_EQ(kept[2].id, 2);
}

std::vector<DiversityReport> reports(const std::vector<double>& index) {
  std::vector<DiversityReport> out;
  for (std::size_t i = 0; i < index.size(); ++i) out.push_back({static_cast<DeviceId>(i), index[i], 0.9});
  return out;
}

TEST(PreTraining, DiversityOnlyPicksHighestIndices) {
  const auto devs = fleet(5);
  const ScoreWeights w{1.0, 0.0, 0.0};
  const auto d = schedule_pre_training(devs, reports({0.3, 2.0, 1.1, 0.1, 1.7}), 2, w, context());
  EXPECT_EQ(d.selected, (std::vector<DeviceId>{1, 4}));
  EXPECT_TRUE(d.round_valid);
  EXPECT_EQ(d.bandwidth_share.size(), 2u);
}

TEST(PreTraining, EqualScoresBreakTiesByLowestId) {
  const auto devs = fleet(6);
  const auto d = schedule_pre_training(devs, reports(std::vector<double>(6, 1.0)), 3, {}, context());
  EXPECT_EQ(d.selected, (std::vector<DeviceId>{0, 1, 2}));
}

TEST(PreTraining, KAboveEligibleSelectsAll) {
  const auto devs = fleet(3);
  const auto d = schedule_pre_training(devs, reports({1, 2, 3}), 10, {}, context());
  EXPECT_EQ(d.selected.size(), 3u);
}

TEST(PreTraining, InvariantUnderMonotoneRescaling) {
  std::vector<DeviceProfile> devs;
  for (int i = 0; i < 8; ++i) devs.push_back(device(i, 32, 0.3 + 0.07 * i, 5.0 + (i * 7) % 11));
  const std::vector<double> raw{0.2, 1.4, 0.9, 3.1, 0.05, 2.2, 1.0, 0.7};
  std::vector<double> rescaled;
  for (double v : raw) rescaled.push_back(std::exp(3.0 * v) + 2.0);  // strictly increasing map
  // Min-max keeps order but not spacing, so compare on the diversity axis alone.
  const ScoreWeights div_only{1.0, 0.0, 0.0};
  for (std::size_t k = 1; k <= 8; ++k) {
    EXPECT_EQ(schedule_pre_training(devs, reports(raw), k, div_only, context()).selected,
              schedule_pre_training(devs, reports(rescaled), k, div_only, context()).selected);
  }
}

TEST(PreTraining, SubsetOfEligibleAndAtMostK) {
  const auto devs = fleet(7);
  const auto d = schedule_pre_training(devs, reports({1, 5, 2, 4, 3, 0, 6}), 4, {}, context());
  EXPECT_LE(d.selected.size(), 4u);
  for (DeviceId id : d.selected) EXPECT_LT(id, 7);
  double total = 0;
  for (const auto& [id, hz] : d.bandwidth_share) total += hz;
  EXPECT_LE(total, context().network.total_bandwidth * (1 + 1e-12));
}

TEST(PostTraining, TopKByIndex) {
  const auto devs = fleet(4);
  const std::map<DeviceId, double> idx{{0, 0.1}, {1, 0.9}, {2, 0.5}, {3, 0.7}};
  EXPECT_EQ(schedule_post_training(devs, idx, 2, context()).selected, (std::vector<DeviceId>{1, 3}));
}

TEST(PostTraining, TooFewIsInvalid) {
  const auto devs = fleet(1);
  const auto d = schedule_post_training(devs, {{0, 0.4}}, 3, context(2));
  EXPECT_FALSE(d.round_valid);
}

TEST(PostTraining, ClampedTiesGoToLowestIds) {
  const auto devs = fleet(5);
  std::map<DeviceId, double> idx;
  for (int i = 4; i >= 0; --i) idx[i] = 0.8;
  EXPECT_EQ(schedule_post_training(devs, idx, 3, context()).selected, (std::vector<DeviceId>{0, 1, 2}));
}

TEST(Random, DeterministicAndComplete) {
  const auto devs = fleet(10);
  EXPECT_EQ(schedule_random(devs, 4, 77, context()).selected,
            schedule_random(devs, 4, 77, context()).selected);
  auto all = schedule_random(devs, 12, 1, context()).selected;
  std::sort(all.begin(), all.end());
  EXPECT_EQ(all.size(), 10u);
}

TEST(Random, UniformFrequencies) {
  const auto devs = fleet(4);
  std::map<DeviceId, int> hits;
  for (std::uint64_t seed = 0; seed < 10000; ++seed) ++hits[schedule_random(devs, 1, seed, context()).selected[0]];
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(hits[i], 2500, 200) << i;
}

TEST(DataSize, LargeDeviceDominates) {
  std::vector<DeviceProfile> devs{device(0, 100), device(1, 1)};
  int big = 0;
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    big += schedule_data_size_priority(devs, 1, seed, context()).selected[0] == 0;
  }
  EXPECT_NEAR(big / 10000.0, 100.0 / 101.0, 0.005);
}

TEST(DataSize, InverseFlagFavorsSmallDevices) {
  std::vector<DeviceProfile> devs{device(0, 100), device(1, 1)};
  int small = 0;
  for (std::uint64_t seed = 0; seed < 2000; ++seed) {
    small += schedule_data_size_priority(devs, 1, seed, context(), true).selected[0] == 1;
  }
  EXPECT_GT(small, 1900);
}

TEST(DataSize, EqualSizesAreUniform) {
  const auto devs = fleet(4);
  std::map<DeviceId, int> hits;
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    ++hits[schedule_data_size_priority(devs, 1, seed, context()).selected[0]];
  }
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(hits[i], 2500, 200) << i;
}

TEST(DataSize, FullKAndDegenerateWeights) {
  std::vector<DeviceProfile> devs{device(0, 100), device(1, 1), device(2, 0)};
  auto all = schedule_data_size_priority(devs, 3, 5, context()).selected;
  std::sort(all.begin(), all.end());
  EXPECT_EQ(all, (std::vector<DeviceId>{0, 1, 2}));

  std::vector<DeviceProfile> empty{device(0, 0), device(1, 0)};
  try {
    schedule_data_size_priority(empty, 1, 1, context());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::degenerate_weights);
  }
}

TEST(AgeFair, FreshFleetPicksLowestIds) {
  const auto devs = fleet(6);
  EXPECT_EQ(schedule_age_fair(devs, 3, 0, context()).selected, (std::vector<DeviceId>{0, 1, 2}));
}

TEST(AgeFair, LongerIdleWins) {
  auto devs = fleet(2);
  devs[0].last_participation_round = 9;  // idle 1
  devs[1].last_participation_round = 5;  // idle 5
  devs[0].participation_count = devs[1].participation_count = 1;
  EXPECT_EQ(schedule_age_fair(devs, 1, 10, context()).selected, (std::vector<DeviceId>{1}));
}

TEST(AgeFair, RotationKeepsCountsWithinOne) {
  auto devs = fleet(10);
  for (int round = 0; round < 20; ++round) {
    const auto d = schedule_age_fair(devs, 5, round, context());
    for (DeviceId id : d.selected) {
      ++devs[id].participation_count;
      devs[id].last_participation_round = round;
    }
  }
  int lo = 1 << 30, hi = 0;
  for (const auto& d : devs) {
    lo = std::min(lo, d.participation_count);
    hi = std::max(hi, d.participation_count);
  }
  EXPECT_LE(hi - lo, 1);
}

TEST(Jain, Anchors) {
  EXPECT_EQ(jain_fairness(std::vector<int>{3, 3, 3}), 1.0);
  EXPECT_NEAR(jain_fairness(std::vector<int>{1, 0, 0, 0}), 0.25, 1e-12);
  EXPECT_EQ(jain_fairness(std::vector<int>{0, 0}), 1.0);
  const std::vector<int> c{1, 4, 2, 7};
  const std::vector<int> c2{2, 8, 4, 14};
  EXPECT_NEAR(jain_fairness(c), jain_fairness(c2), 1e-15);
  EXPECT_EQ(jain_fairness(std::map<DeviceId, int>{{1, 1}, {2, 0}}), 0.5);
}

TEST(MinMax, ConstantFieldIsHalf) {
  EXPECT_EQ(min_max_normalize(std::vector<double>{2, 2, 2}), (std::vector<double>{0.5, 0.5, 0.5}));
  EXPECT_EQ(min_max_normalize(std::vector<double>{1, 3, 2}), (std::vector<double>{0.0, 1.0, 0.5}));
}

TEST(Weights, SimplexValidation) {
  EXPECT_TRUE((ScoreWeights{0.6, 0.2, 0.2}).validate().ok());
  EXPECT_FALSE((ScoreWeights{0.6, 0.6, 0.2}).validate().ok());
  EXPECT_FALSE((ScoreWeights{1.2, -0.2, 0.0}).validate().ok());
}

}  // namespace
}  // namespace feel::scheduler
