#include "feel/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <string>

#include "feel/random.hpp"

namespace feel::engine {
namespace {

constexpr double kBitsPerParam = 32.0;

std::uint64_t coord(int v) { return static_cast<std::uint64_t>(static_cast<std::int64_t>(v)); }

network::NetworkConfig resolved_network(const SimulationConfig& cfg) {
  network::NetworkConfig net = cfg.network;
  const ModelShape shape{static_cast<std::size_t>(cfg.data.dim),
                         static_cast<std::size_t>(cfg.data.n_classes)};
  net.model_size_bits =
      cfg.model_size_bits.value_or(kBitsPerParam * static_cast<double>(shape.n_params()));
  return net;
}

scheduler::DecisionContext decision_context(const SimulationState& state) {
  scheduler::DecisionContext ctx;
  ctx.constraints = state.cfg.constraints;
  ctx.network = resolved_network(state.cfg);
  ctx.epochs = state.cfg.train.epochs;
  ctx.batch_size = state.cfg.train.batch_size;
  return ctx;
}

DeviceProfile& device_by_id(SimulationState& state, DeviceId id) {
  // Devices are stored in ascending id order with id == index.
  return state.devices.at(static_cast<std::size_t>(id));
}

void resample_channels(SimulationState& state) {
  for (auto& d : state.devices) {
    d.channel = d.channel.resampled(state.cfg.master_seed, d.id, state.round);
  }
}

// Drains `joules` from the battery. Returns false (and empties the battery)
// when the device cannot afford it; `drained` receives what was actually used.
bool drain(DeviceProfile& d, double joules, double& drained) {
  const double available = d.remaining_joules();
  if (joules > available) {
    drained = available;
    d.battery_level = 0.0;
    return false;
  }
  drained = joules;
  d.battery_level = std::clamp((available - joules) / d.capacity_joules, 0.0, 1.0);
  return true;
}

std::vector<int> participation_counts(const SimulationState& state) {
  std::vector<int> counts;
  counts.reserve(state.devices.size());
  for (const auto& d : state.devices) counts.push_back(d.participation_count);
  return counts;
}

learning::TrainConfig device_train_config(const SimulationState& state, DeviceId id) {
  learning::TrainConfig cfg = state.cfg.train;
  cfg.seed = derive_seed(state.cfg.master_seed, {tag(Stream::training), coord(id), coord(state.round)});
  return cfg;
}

ScheduleDecision select_baseline(const SimulationState& state,
                                 std::span<const DeviceProfile> candidates,
                                 const scheduler::DecisionContext& ctx) {
  const std::size_t k = state.cfg.scheduler.devices_per_round;
  const std::uint64_t seed =
      derive_seed(state.cfg.master_seed, {tag(Stream::scheduler), coord(state.round)});
  switch (state.cfg.scheduler.policy) {
    case Policy::random:
      return scheduler::schedule_random(candidates, k, seed, ctx);
    case Policy::data_size:
      return scheduler::schedule_data_size_priority(candidates, k, seed, ctx, false);
    case Policy::data_size_inverse:
      return scheduler::schedule_data_size_priority(candidates, k, seed, ctx, true);
    case Policy::age_fair:
      return scheduler::schedule_age_fair(candidates, k, state.round, ctx);
    case Policy::diversity:
      break;
  }
  throw Error(Errc::invalid_argument, "diversity policy has no baseline form");
}

// Aggregates delivered updates, evaluates, and books participation.
void finish_round(SimulationState& state, RoundRecord& record,
                  std::vector<learning::Update>& delivered) {
  const auto& cfg = state.cfg;
  std::sort(delivered.begin(), delivered.end(),
            [](const auto& a, const auto& b) { return a.device_id < b.device_id; });
  record.aborted = static_cast<int>(delivered.size()) < cfg.constraints.min_participants ||
                   delivered.empty();
  if (!record.aborted) {
    ModelParams next = cfg.aggregation == Aggregation::fedavg
                           ? learning::aggregate_fedavg(delivered)
                           : learning::aggregate_loss_weighted(delivered, cfg.q);
    next.round = state.round + 1;
    state.global = std::move(next);
    state.last_eval = learning::evaluate(state.global, state.test_set);
    for (const auto& u : delivered) {
      record.participants.push_back(u.device_id);
      DeviceProfile& d = device_by_id(state, u.device_id);
      ++d.participation_count;
      d.last_participation_round = state.round;
    }
  }

  std::map<DeviceId, double> gating;
  for (const auto& log : record.devices) {
    record.total_energy += log.energy;
    if (log.selected) gating[log.device_id] = log.total_time();
  }
  if (gating.empty()) {
    for (const auto& log : record.devices) {
      if (log.trained) gating[log.device_id] = log.total_time();
    }
  }
  record.duration = gating.empty() ? 0.0 : network::round_duration(gating);
  record.global_accuracy = state.last_eval.accuracy;
  record.global_loss = state.last_eval.loss;
  record.jain_fairness = scheduler::jain_fairness(participation_counts(state));
  ++state.round;
}

RoundRecord begin_round(SimulationState& state) {
  resample_channels(state);
  RoundRecord record;
  record.round = state.round;
  return record;
}

}  // namespace

std::string_view to_string(Mode m) noexcept {
  return m == Mode::pre_training ? "pre_training" : "post_training";
}

std::string_view to_string(Policy p) noexcept {
  switch (p) {
    case Policy::diversity: return "diversity";
    case Policy::random: return "random";
    case Policy::data_size: return "data_size";
    case Policy::data_size_inverse: return "data_size_inverse";
    case Policy::age_fair: return "age_fair";
  }
  return "unknown";
}

std::string_view to_string(Aggregation a) noexcept {
  return a == Aggregation::fedavg ? "fedavg" : "loss_weighted";
}

std::optional<Mode> parse_mode(std::string_view s) noexcept {
  if (s == "pre_training") return Mode::pre_training;
  if (s == "post_training") return Mode::post_training;
  return std::nullopt;
}

std::optional<Policy> parse_policy(std::string_view s) noexcept {
  for (Policy p : {Policy::diversity, Policy::random, Policy::data_size,
                   Policy::data_size_inverse, Policy::age_fair}) {
    if (s == to_string(p)) return p;
  }
  return std::nullopt;
}

std::optional<Aggregation> parse_aggregation(std::string_view s) noexcept {
  if (s == "fedavg") return Aggregation::fedavg;
  if (s == "loss_weighted") return Aggregation::loss_weighted;
  return std::nullopt;
}

Status FleetConfig::validate() const {
  auto range = [](double lo, double hi, bool positive) {
    return lo <= hi && (positive ? lo > 0.0 : lo >= 0.0);
  };
  if (!range(cpu_freq_min, cpu_freq_max, true)) return {Errc::invalid_config, "cpu_freq range"};
  if (!range(cpu_cycles_per_sample_min, cpu_cycles_per_sample_max, false)) {
    return {Errc::invalid_config, "cpu_cycles_per_sample range"};
  }
  if (!range(tx_power_min, tx_power_max, false)) return {Errc::invalid_config, "tx_power range"};
  if (!range(energy_per_cycle_min, energy_per_cycle_max, false)) {
    return {Errc::invalid_config, "energy_per_cycle range"};
  }
  if (!(capacity_joules > 0.0)) return {Errc::invalid_config, "capacity_joules must be > 0"};
  if (!(battery_min >= 0.0 && battery_min <= battery_max && battery_max <= 1.0)) {
    return {Errc::invalid_config, "battery range must lie in [0, 1]"};
  }
  if (!(snr_spread >= 0.0) || !(std_snr_db >= 0.0)) {
    return {Errc::invalid_config, "SNR spreads must be >= 0"};
  }
  return Status::Ok();
}

Status DataConfig::validate() const {
  if (n_classes < 2 || dim < 2) return {Errc::invalid_config, "n_classes and dim must be >= 2"};
  if (samples_per_class < 1) return {Errc::invalid_config, "samples_per_class must be >= 1"};
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    return {Errc::invalid_config, "test_fraction must lie in (0, 1)"};
  }
  return partition.validate();
}

Status SchedulerConfig::validate() const {
  if (devices_per_round < 1) return {Errc::invalid_config, "devices_per_round must be >= 1"};
  if (auto s = weights.validate(); !s.ok()) return s;
  if (auto s = model_weights.validate(); !s.ok()) return {Errc::invalid_config, s.message()};
  if (!(outlier_percentile > 0.0 && outlier_percentile <= 1.0)) {
    return {Errc::invalid_config, "outlier_percentile must lie in (0, 1]"};
  }
  return Status::Ok();
}

Status SimulationConfig::validate() const {
  if (n_devices < 1) return {Errc::invalid_config, "n_devices must be >= 1"};
  if (rounds_max < 1) return {Errc::invalid_config, "rounds_max must be >= 1"};
  if (target_accuracy && !(*target_accuracy >= 0.0 && *target_accuracy <= 1.0)) {
    return {Errc::invalid_config, "target_accuracy must lie in [0, 1]"};
  }
  if (!(q >= 0.0)) return {Errc::invalid_config, "q must be >= 0"};
  if (model_size_bits && !(*model_size_bits > 0.0)) {
    return {Errc::invalid_config, "model_size_bits must be > 0"};
  }
  for (const Status& s : {devices.validate(), data.validate(), train.validate(),
                          resolved_network(*this).validate(), constraints.validate(),
                          scheduler.validate()}) {
    if (!s.ok()) return {Errc::invalid_config, s.message()};
  }
  return Status::Ok();
}

SimulationState initialize(const SimulationConfig& cfg) {
  cfg.validate().throw_if_error();
  SimulationState state;
  state.cfg = cfg;
  const std::uint64_t seed = cfg.master_seed;

  const LocalDataset pool = datagen::make_classification_pool(
      cfg.data.n_classes, cfg.data.dim, cfg.data.samples_per_class, cfg.data.class_sep, seed);
  auto [train, test] = datagen::split_holdout(pool, cfg.data.test_fraction, seed);
  state.test_set = std::move(test);

  datagen::PartitionSpec spec = cfg.data.partition;
  spec.n_devices = cfg.n_devices;
  std::vector<LocalDataset> local = datagen::partition(train, spec, seed);

  diversity::DiversityParams div;
  div.class_measure = cfg.scheduler.class_measure;
  div.n_classes = cfg.data.n_classes;

  const auto& fleet = cfg.devices;
  state.devices.reserve(local.size());
  for (std::size_t i = 0; i < local.size(); ++i) {
    const DeviceId id = static_cast<DeviceId>(i);
    Rng rng = make_rng(seed, {tag(Stream::device_hardware), coord(id)});
    auto uniform = [&rng](double lo, double hi) {
      return std::uniform_real_distribution<double>(lo, hi)(rng);
    };
    DeviceProfile d;
    d.id = id;
    d.cpu_freq = uniform(fleet.cpu_freq_min, fleet.cpu_freq_max);
    d.cpu_cycles_per_sample = uniform(fleet.cpu_cycles_per_sample_min, fleet.cpu_cycles_per_sample_max);
    d.tx_power = uniform(fleet.tx_power_min, fleet.tx_power_max);
    d.energy_per_cycle = uniform(fleet.energy_per_cycle_min, fleet.energy_per_cycle_max);
    d.capacity_joules = fleet.capacity_joules;
    d.battery_level = uniform(fleet.battery_min, fleet.battery_max);
    // Lognormal spread of linear SNR is a normal spread in dB.
    const double offset_db =
        10.0 / std::numbers::ln10 * std::normal_distribution<double>(0.0, 1.0)(rng) * fleet.snr_spread;
    d.channel.mean_snr_db = fleet.mean_snr_db + offset_db;
    d.channel.std_snr_db = fleet.std_snr_db;
    d.channel.snr_db = d.channel.mean_snr_db;
    d.dataset = std::make_shared<const LocalDataset>(std::move(local[i]));
    validate_profile(d, 0).throw_if_error();

    diversity::DiversityParams dev_div = div;
    dev_div.seed = derive_seed(seed, {tag(Stream::sampling), coord(id)});
    state.dataset_profiles.push_back(diversity::dataset_diversity_index(*d.dataset, dev_div));
    state.devices.push_back(std::move(d));
  }

  state.global = learning::init_model(static_cast<std::size_t>(cfg.data.dim),
                                      static_cast<std::size_t>(cfg.data.n_classes), seed);
  state.last_eval = learning::evaluate(state.global, state.test_set);
  return state;
}

RoundRecord run_round_pre(SimulationState& state) {
  RoundRecord record = begin_round(state);
  const auto ctx = decision_context(state);
  const auto& cfg = state.cfg;

  // Step 1: scalar diversity indicator + battery from every live device.
  for (std::size_t i = 0; i < state.devices.size(); ++i) {
    const auto& d = state.devices[i];
    if (d.battery_level <= 0.0) continue;
    record.reports.push_back({d.id, state.dataset_profiles[i].diversity_index, d.battery_level});
  }

  // Step 2: eligibility, selection, bandwidth.
  const auto eligible = scheduler::filter_eligible(state.devices, cfg.constraints, ctx.network,
                                                   cfg.train.epochs, cfg.train.batch_size,
                                                   cfg.scheduler.devices_per_round);
  const ScheduleDecision decision =
      cfg.scheduler.policy == Policy::diversity
          ? scheduler::schedule_pre_training(eligible, record.reports,
                                             cfg.scheduler.devices_per_round,
                                             cfg.scheduler.weights, ctx)
          : select_baseline(state, eligible, ctx);

  std::vector<learning::Update> delivered;
  if (decision.round_valid) {
    std::vector<DeviceId> order = decision.selected;
    std::sort(order.begin(), order.end());
    for (DeviceId id : order) {
      DeviceProfile& d = device_by_id(state, id);
      DeviceRoundLog log;
      log.device_id = id;
      log.selected = true;
      log.bandwidth = decision.bandwidth_share.at(id);

      // Step 3: local training.
      log.compute_time = network::compute_time(d, d.n_samples(), cfg.train.epochs);
      double spent = 0.0;
      const bool computed =
          drain(d, network::energy_compute(d, d.n_samples(), cfg.train.epochs), spent);
      log.energy += spent;
      log.trained = computed;
      if (computed) {
        learning::Update update =
            learning::local_train(state.global, *d.dataset, device_train_config(state, id), id);
        // Step 4: upload.
        log.comm_time = network::comm_time(d, ctx.network.model_size_bits, log.bandwidth);
        log.delivered = drain(d, network::energy_transmit(d, log.comm_time), spent);
        log.energy += spent;
        if (log.delivered) delivered.push_back(std::move(update));
      }
      record.devices.push_back(log);
    }
  }

  // Step 5: aggregate and evaluate.
  finish_round(state, record, delivered);
  return record;
}

RoundRecord run_round_post(SimulationState& state) {
  RoundRecord record = begin_round(state);
  const auto ctx = decision_context(state);
  const auto& cfg = state.cfg;

  const auto eligible = scheduler::filter_eligible(state.devices, cfg.constraints, ctx.network,
                                                   cfg.train.epochs, cfg.train.batch_size,
                                                   cfg.scheduler.devices_per_round);

  // Steps 1-2: broadcast to every eligible device; all of them train.
  std::map<DeviceId, learning::Update> trained;
  std::map<DeviceId, DeviceRoundLog> logs;
  for (const auto& e : eligible) {
    DeviceProfile& d = device_by_id(state, e.id);
    DeviceRoundLog log;
    log.device_id = d.id;
    log.compute_time = network::compute_time(d, d.n_samples(), cfg.train.epochs);
    double spent = 0.0;
    log.trained = drain(d, network::energy_compute(d, d.n_samples(), cfg.train.epochs), spent);
    log.energy = spent;
    if (log.trained) {
      trained.emplace(d.id, learning::local_train(state.global, *d.dataset,
                                                  device_train_config(state, d.id), d.id));
    }
    logs.emplace(d.id, log);
  }

  // Step 3: model diversity indices, clamped at the round's outlier ceiling.
  const diversity::Grouping grouping = diversity::feature_grouping(state.global.shape);
  std::vector<DeviceId> ids;
  std::vector<double> raw;
  for (const auto& [id, update] : trained) {
    ids.push_back(id);
    raw.push_back(diversity::model_diversity_index(update.params, state.global, grouping,
                                                   cfg.scheduler.model_weights));
  }
  const double ceiling = diversity::outlier_ceiling(raw, cfg.scheduler.outlier_percentile);
  std::map<DeviceId, double> indices;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const double value = std::min(raw[i], ceiling);
    indices[ids[i]] = value;
    record.reports.push_back({ids[i], value, device_by_id(state, ids[i]).battery_level});
  }

  // Step 4: schedule uploads among trained devices.
  std::vector<DeviceProfile> candidates;
  for (const auto& [id, update] : trained) candidates.push_back(device_by_id(state, id));
  const ScheduleDecision decision =
      cfg.scheduler.policy == Policy::diversity
          ? scheduler::schedule_post_training(candidates, indices, cfg.scheduler.devices_per_round,
                                              ctx)
          : select_baseline(state, candidates, ctx);

  std::vector<learning::Update> delivered;
  if (decision.round_valid) {
    std::vector<DeviceId> order = decision.selected;
    std::sort(order.begin(), order.end());
    for (DeviceId id : order) {
      DeviceProfile& d = device_by_id(state, id);
      DeviceRoundLog& log = logs.at(id);
      log.selected = true;
      log.bandwidth = decision.bandwidth_share.at(id);
      log.comm_time = network::comm_time(d, ctx.network.model_size_bits, log.bandwidth);
      double spent = 0.0;
      log.delivered = drain(d, network::energy_transmit(d, log.comm_time), spent);
      log.energy += spent;
      if (log.delivered) delivered.push_back(std::move(trained.at(id)));
    }
  }
  for (auto& [id, log] : logs) record.devices.push_back(log);

  // Step 5.
  finish_round(state, record, delivered);
  return record;
}

RoundRecord run_round(SimulationState& state) {
  return state.cfg.mode == Mode::pre_training ? run_round_pre(state) : run_round_post(state);
}

SimulationResult run_simulation(const SimulationConfig& cfg) {
  SimulationState state = initialize(cfg);
  SimulationResult result;
  for (int r = 0; r < cfg.rounds_max; ++r) {
    RoundRecord record = run_round(state);
    if (record.aborted) ++result.aborted_rounds;
    const bool hit = !record.aborted && cfg.target_accuracy &&
                     record.global_accuracy >= *cfg.target_accuracy;
    result.rounds.push_back(std::move(record));
    if (hit && !result.rounds_to_target) {
      result.rounds_to_target = r + 1;
      if (cfg.stop_at_target) break;
    }
  }
  result.final_model = state.global;
  result.final_devices = state.devices;
  return result;
}

learning::Evaluation centralized_baseline(const SimulationConfig& cfg, int epochs) {
  cfg.validate().throw_if_error();
  const LocalDataset pool = datagen::make_classification_pool(
      cfg.data.n_classes, cfg.data.dim, cfg.data.samples_per_class, cfg.data.class_sep,
      cfg.master_seed);
  auto [train, test] = datagen::split_holdout(pool, cfg.data.test_fraction, cfg.master_seed);
  learning::TrainConfig tc = cfg.train;
  tc.epochs = epochs;
  tc.seed = derive_seed(cfg.master_seed, {tag(Stream::training), ~0ULL});
  const ModelParams init = learning::init_model(static_cast<std::size_t>(cfg.data.dim),
                                                static_cast<std::size_t>(cfg.data.n_classes),
                                                cfg.master_seed);
  const learning::Update trained = learning::local_train(init, train, tc, -1);
  return learning::evaluate(trained.params, test);
}

}  // namespace feel::engine
