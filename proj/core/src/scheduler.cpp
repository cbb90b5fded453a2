#include "feel/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "feel/random.hpp"

namespace feel::scheduler {
namespace {

// Indices of the k best entries under `better`, which must be a strict order.
template <typename Better>
std::vector<std::size_t> top_k(std::size_t n, std::size_t k, Better better) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), better);
  order.resize(std::min(k, n));
  return order;
}

void require_k(std::size_t k) {
  if (k < 1) throw Error(Errc::invalid_argument, "K must be >= 1");
}

}  // namespace

Status ConstraintConfig::validate() const {
  if (min_participants < 1) return {Errc::invalid_config, "min_participants must be >= 1"};
  if (!(min_battery >= 0.0 && min_battery <= 1.0)) {
    return {Errc::invalid_config, "min_battery must lie in [0, 1]"};
  }
  if (!(completion_threshold > 0.0)) {
    return {Errc::invalid_config, "completion_threshold must be > 0"};
  }
  if (min_data_size && *min_data_size < 0) {
    return {Errc::invalid_config, "min_data_size must be >= 0"};
  }
  return Status::Ok();
}

Status ScoreWeights::validate() const {
  if (!(w_diversity >= 0.0 && w_battery >= 0.0 && w_channel >= 0.0) ||
      std::abs(w_diversity + w_battery + w_channel - 1.0) > 1e-9) {
    return {Errc::invalid_config, "score weights must be >= 0 and sum to 1"};
  }
  return Status::Ok();
}

std::vector<DeviceProfile> filter_eligible(std::span<const DeviceProfile> devices,
                                           const ConstraintConfig& cc,
                                           const network::NetworkConfig& net, int epochs,
                                           int batch_size, std::size_t share_count) {
  const std::size_t min_data =
      static_cast<std::size_t>(std::max(cc.min_data_size.value_or(batch_size), 0));
  const std::size_t split = share_count > 0 ? share_count : std::max<std::size_t>(devices.size(), 1);
  const double share = net.total_bandwidth / static_cast<double>(split);

  std::vector<DeviceProfile> kept;
  for (const auto& d : devices) {
    if (d.battery_level <= 0.0 || d.battery_level < cc.min_battery) continue;
    if (d.channel.snr_db < cc.min_snr_db) continue;
    if (d.n_samples() < min_data || d.n_samples() == 0) continue;
    double eta = 0.0;
    try {
      eta = network::expected_completion_time(d, net, share, epochs);
    } catch (const Error& e) {
      if (e.code() != Errc::unreachable_device) throw;
      continue;
    }
    if (eta > cc.completion_threshold) continue;
    kept.push_back(d);
  }
  return kept;
}

std::vector<double> min_max_normalize(std::span<const double> values) {
  std::vector<double> out(values.size(), 0.5);
  if (values.empty()) return out;
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (!(hi > lo)) return out;
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - lo) / (hi - lo);
  return out;
}

ScheduleDecision finalize_decision(std::span<const DeviceProfile> eligible,
                                   std::vector<DeviceId> selected, const DecisionContext& ctx) {
  ScheduleDecision decision;
  decision.selected = std::move(selected);
  decision.round_valid =
      static_cast<int>(decision.selected.size()) >= ctx.constraints.min_participants;
  if (decision.selected.empty()) return decision;

  std::vector<DeviceProfile> chosen;
  chosen.reserve(decision.selected.size());
  for (DeviceId id : decision.selected) {
    auto it = std::find_if(eligible.begin(), eligible.end(),
                           [id](const DeviceProfile& d) { return d.id == id; });
    if (it == eligible.end()) {
      throw Error(Errc::invalid_argument, "device " + std::to_string(id) + " is not eligible");
    }
    chosen.push_back(*it);
  }
  decision.bandwidth_share = network::allocate_bandwidth(chosen, ctx.network, ctx.epochs,
                                                         &decision.allocation_fallback);
  for (const auto& d : chosen) {
    double eta = std::numeric_limits<double>::infinity();
    try {
      eta = network::expected_completion_time(d, ctx.network, decision.bandwidth_share[d.id],
                                              ctx.epochs);
    } catch (const Error& e) {
      if (e.code() != Errc::unreachable_device) throw;
    }
    decision.predicted_completion[d.id] = eta;
  }
  return decision;
}

ScheduleDecision schedule_pre_training(std::span<const DeviceProfile> eligible,
                                       std::span<const DiversityReport> reports, std::size_t k,
                                       const ScoreWeights& weights, const DecisionContext& ctx) {
  require_k(k);
  weights.validate().throw_if_error();

  // Only devices that reported take part; the server sees index + battery only.
  std::vector<DeviceId> ids;
  std::vector<double> index;
  std::vector<double> battery;
  std::vector<double> snr;
  for (const auto& d : eligible) {
    auto it = std::find_if(reports.begin(), reports.end(),
                           [&](const DiversityReport& r) { return r.device_id == d.id; });
    if (it == reports.end()) continue;
    ids.push_back(d.id);
    index.push_back(it->diversity_index);
    battery.push_back(it->battery_level);
    snr.push_back(d.channel.snr_db);
  }
  const auto index_n = min_max_normalize(index);
  const auto snr_n = min_max_normalize(snr);
  std::vector<double> score(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    score[i] = weights.w_diversity * index_n[i] + weights.w_battery * battery[i] +
               weights.w_channel * snr_n[i];
  }
  const auto best = top_k(ids.size(), k, [&](std::size_t a, std::size_t b) {
    if (score[a] != score[b]) return score[a] > score[b];
    return ids[a] < ids[b];
  });
  std::vector<DeviceId> selected;
  for (std::size_t i : best) selected.push_back(ids[i]);
  return finalize_decision(eligible, std::move(selected), ctx);
}

ScheduleDecision schedule_post_training(std::span<const DeviceProfile> eligible_trained,
                                        const std::map<DeviceId, double>& indices, std::size_t k,
                                        const DecisionContext& ctx) {
  require_k(k);
  std::vector<DeviceId> ids;
  std::vector<double> value;
  for (const auto& d : eligible_trained) {
    auto it = indices.find(d.id);
    if (it == indices.end()) continue;
    ids.push_back(d.id);
    value.push_back(it->second);
  }
  const auto best = top_k(ids.size(), k, [&](std::size_t a, std::size_t b) {
    if (value[a] != value[b]) return value[a] > value[b];
    return ids[a] < ids[b];
  });
  std::vector<DeviceId> selected;
  for (std::size_t i : best) selected.push_back(ids[i]);
  return finalize_decision(eligible_trained, std::move(selected), ctx);
}

ScheduleDecision schedule_random(std::span<const DeviceProfile> eligible, std::size_t k,
                                 std::uint64_t seed, const DecisionContext& ctx) {
  require_k(k);
  std::vector<DeviceId> ids;
  for (const auto& d : eligible) ids.push_back(d.id);
  const std::size_t take = std::min(k, ids.size());
  Rng rng = make_rng(seed, {tag(Stream::scheduler)});
  for (std::size_t i = 0; i < take; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, ids.size() - 1);
    std::swap(ids[i], ids[pick(rng)]);
  }
  ids.resize(take);
  return finalize_decision(eligible, std::move(ids), ctx);
}

ScheduleDecision schedule_data_size_priority(std::span<const DeviceProfile> eligible,
                                             std::size_t k, std::uint64_t seed,
                                             const DecisionContext& ctx, bool inverse) {
  require_k(k);
  std::vector<DeviceId> ids;
  std::vector<double> weight;
  double total = 0.0;
  for (const auto& d : eligible) {
    const double n = static_cast<double>(d.n_samples());
    const double w = inverse ? (n > 0.0 ? 1.0 / n : 0.0) : n;
    ids.push_back(d.id);
    weight.push_back(w);
    total += w;
  }
  if (!ids.empty() && !(total > 0.0)) {
    throw Error(Errc::degenerate_weights, "every eligible device has zero samples");
  }

  Rng rng = make_rng(seed, {tag(Stream::scheduler), 1});
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<DeviceId> selected;
  std::vector<bool> taken(ids.size(), false);
  const std::size_t take = std::min(k, ids.size());
  while (selected.size() < take) {
    double remaining = 0.0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (!taken[i]) remaining += weight[i];
    }
    std::size_t chosen = ids.size();
    if (remaining > 0.0) {
      const double target = unit(rng) * remaining;
      double acc = 0.0;
      for (std::size_t i = 0; i < ids.size(); ++i) {
        if (taken[i] || weight[i] <= 0.0) continue;
        acc += weight[i];
        chosen = i;
        if (target < acc) break;
      }
    } else {
      // Only zero-weight devices are left: take them in list order.
      for (std::size_t i = 0; i < ids.size() && chosen == ids.size(); ++i) {
        if (!taken[i]) chosen = i;
      }
    }
    taken[chosen] = true;
    selected.push_back(ids[chosen]);
  }
  return finalize_decision(eligible, std::move(selected), ctx);
}

ScheduleDecision schedule_age_fair(std::span<const DeviceProfile> eligible, std::size_t k,
                                   int current_round, const DecisionContext& ctx) {
  require_k(k);
  constexpr double never = std::numeric_limits<double>::infinity();
  std::vector<double> age(eligible.size());
  for (std::size_t i = 0; i < eligible.size(); ++i) {
    const auto& last = eligible[i].last_participation_round;
    age[i] = last ? static_cast<double>(current_round - *last) : never;
  }
  const auto best = top_k(eligible.size(), k, [&](std::size_t a, std::size_t b) {
    if (age[a] != age[b]) return age[a] > age[b];
    if (eligible[a].participation_count != eligible[b].participation_count) {
      return eligible[a].participation_count < eligible[b].participation_count;
    }
    return eligible[a].id < eligible[b].id;
  });
  std::vector<DeviceId> selected;
  for (std::size_t i : best) selected.push_back(eligible[i].id);
  return finalize_decision(eligible, std::move(selected), ctx);
}

double jain_fairness(std::span<const int> counts) {
  if (counts.empty()) throw Error(Errc::invalid_argument, "jain_fairness of nothing");
  double sum = 0.0;
  double sq = 0.0;
  for (int c : counts) {
    sum += c;
    sq += static_cast<double>(c) * c;
  }
  if (sq == 0.0) return 1.0;
  return sum * sum / (static_cast<double>(counts.size()) * sq);
}

double jain_fairness(const std::map<DeviceId, int>& counts) {
  std::vector<int> values;
  values.reserve(counts.size());
  for (const auto& [id, c] : counts) values.push_back(c);
  return jain_fairness(values);
}

}  // namespace feel::scheduler
