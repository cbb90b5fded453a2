#include "feel/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

namespace feel::experiment {
namespace {

using engine::Policy;

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

// Thrown by value parsers; the loader adds the location.
struct BadValue {
  std::string message;
};

double to_double(std::string_view v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
    throw BadValue{"expected a number, got '" + std::string(v) + "'"};
  }
  return out;
}

long long to_int(std::string_view v) {
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
    throw BadValue{"expected an integer, got '" + std::string(v) + "'"};
  }
  return out;
}

int to_int32(std::string_view v) { return static_cast<int>(to_int(v)); }

std::uint64_t to_u64(std::string_view v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
    throw BadValue{"expected a non-negative integer, got '" + std::string(v) + "'"};
  }
  return out;
}

bool to_bool(std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw BadValue{"expected true/false, got '" + std::string(v) + "'"};
}

std::string strip_quotes(std::string_view v) {
  if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front()) {
    v = v.substr(1, v.size() - 2);
  }
  return std::string(v);
}

double positive(double v, const char* what) {
  if (!(v > 0.0)) throw BadValue{std::string(what) + " must be > 0"};
  return v;
}

Policy to_policy(std::string_view v) {
  if (auto p = engine::parse_policy(v)) return *p;
  throw BadValue{"unknown scheduler '" + std::string(v) + "'"};
}

using Setter = std::function<void(ExperimentSpec&, std::string_view)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  using S = ExperimentSpec;
  static const std::map<std::string, Setter, std::less<>> table = {
      // [devices]
      {"devices.n_devices", [](S& s, auto v) { s.base.n_devices = to_int32(v); }},
      {"devices.cpu_freq_min", [](S& s, auto v) { s.base.devices.cpu_freq_min = to_double(v); }},
      {"devices.cpu_freq_max", [](S& s, auto v) { s.base.devices.cpu_freq_max = to_double(v); }},
      {"devices.cpu_cycles_per_sample_min",
       [](S& s, auto v) { s.base.devices.cpu_cycles_per_sample_min = to_double(v); }},
      {"devices.cpu_cycles_per_sample_max",
       [](S& s, auto v) { s.base.devices.cpu_cycles_per_sample_max = to_double(v); }},
      {"devices.tx_power_min", [](S& s, auto v) { s.base.devices.tx_power_min = to_double(v); }},
      {"devices.tx_power_max", [](S& s, auto v) { s.base.devices.tx_power_max = to_double(v); }},
      {"devices.energy_per_cycle_min",
       [](S& s, auto v) { s.base.devices.energy_per_cycle_min = to_double(v); }},
      {"devices.energy_per_cycle_max",
       [](S& s, auto v) { s.base.devices.energy_per_cycle_max = to_double(v); }},
      {"devices.capacity_joules",
       [](S& s, auto v) { s.base.devices.capacity_joules = to_double(v); }},
      {"devices.battery_min", [](S& s, auto v) { s.base.devices.battery_min = to_double(v); }},
      {"devices.battery_max", [](S& s, auto v) { s.base.devices.battery_max = to_double(v); }},
      {"devices.mean_snr_db", [](S& s, auto v) { s.base.devices.mean_snr_db = to_double(v); }},
      {"devices.snr_spread", [](S& s, auto v) { s.base.devices.snr_spread = to_double(v); }},
      {"devices.std_snr_db", [](S& s, auto v) { s.base.devices.std_snr_db = to_double(v); }},
      // [data]
      {"data.n_classes", [](S& s, auto v) { s.base.data.n_classes = to_int32(v); }},
      {"data.dim", [](S& s, auto v) { s.base.data.dim = to_int32(v); }},
      {"data.samples_per_class", [](S& s, auto v) { s.base.data.samples_per_class = to_int32(v); }},
      {"data.class_sep", [](S& s, auto v) { s.base.data.class_sep = to_double(v); }},
      {"data.test_fraction", [](S& s, auto v) { s.base.data.test_fraction = to_double(v); }},
      {"data.skew",
       [](S& s, auto v) {
         if (v == "iid") {
           s.base.data.partition.skew.kind = datagen::LabelSkew::Kind::iid;
         } else if (v == "dirichlet") {
           s.base.data.partition.skew.kind = datagen::LabelSkew::Kind::dirichlet;
         } else {
           throw BadValue{"skew must be iid or dirichlet"};
         }
       }},
      {"data.alpha",
       [](S& s, auto v) {
         s.base.data.partition.skew.alpha = positive(to_double(v), "Dirichlet alpha");
       }},
      {"data.size_dist",
       [](S& s, auto v) {
         using K = datagen::SizeDistribution::Kind;
         auto& kind = s.base.data.partition.size_dist.kind;
         if (v == "balanced") kind = K::balanced;
         else if (v == "lognormal") kind = K::lognormal;
         else if (v == "powerlaw") kind = K::powerlaw;
         else throw BadValue{"size_dist must be balanced, lognormal or powerlaw"};
       }},
      {"data.size_mean",
       [](S& s, auto v) { s.base.data.partition.size_dist.mean = to_double(v); }},
      {"data.size_sigma",
       [](S& s, auto v) { s.base.data.partition.size_dist.sigma = to_double(v); }},
      {"data.size_exponent",
       [](S& s, auto v) { s.base.data.partition.size_dist.exponent = to_double(v); }},
      {"data.min_size", [](S& s, auto v) { s.base.data.partition.min_size = to_int32(v); }},
      {"data.redundancy_factor",
       [](S& s, auto v) { s.base.data.partition.redundancy_factor = to_double(v); }},
      // [train]
      {"train.epochs", [](S& s, auto v) { s.base.train.epochs = to_int32(v); }},
      {"train.batch_size", [](S& s, auto v) { s.base.train.batch_size = to_int32(v); }},
      {"train.learning_rate", [](S& s, auto v) { s.base.train.learning_rate = to_double(v); }},
      {"train.l2_reg", [](S& s, auto v) { s.base.train.l2_reg = to_double(v); }},
      {"train.aggregation",
       [](S& s, auto v) {
         auto a = engine::parse_aggregation(v);
         if (!a) throw BadValue{"aggregation must be fedavg or loss_weighted"};
         s.base.aggregation = *a;
       }},
      {"train.q", [](S& s, auto v) { s.base.q = to_double(v); }},
      // [network]
      {"network.total_bandwidth", [](S& s, auto v) { s.base.network.total_bandwidth = to_double(v); }},
      {"network.model_size_bits",
       [](S& s, auto v) {
         if (v == "auto") s.base.model_size_bits.reset();
         else s.base.model_size_bits = to_double(v);
       }},
      {"network.allocation_strategy",
       [](S& s, auto v) {
         using A = network::AllocationStrategy;
         if (v == "equal") s.base.network.allocation_strategy = A::equal;
         else if (v == "equalize_completion") s.base.network.allocation_strategy = A::equalize_completion;
         else throw BadValue{"allocation_strategy must be equal or equalize_completion"};
       }},
      // [constraints]
      {"constraints.min_battery", [](S& s, auto v) { s.base.constraints.min_battery = to_double(v); }},
      {"constraints.min_snr_db", [](S& s, auto v) { s.base.constraints.min_snr_db = to_double(v); }},
      {"constraints.completion_threshold",
       [](S& s, auto v) { s.base.constraints.completion_threshold = to_double(v); }},
      {"constraints.min_participants",
       [](S& s, auto v) { s.base.constraints.min_participants = to_int32(v); }},
      {"constraints.min_data_size",
       [](S& s, auto v) { s.base.constraints.min_data_size = to_int32(v); }},
      // [scheduler]
      {"scheduler.policy", [](S& s, auto v) { s.base.scheduler.policy = to_policy(v); }},
      {"scheduler.devices_per_round",
       [](S& s, auto v) { s.base.scheduler.devices_per_round = static_cast<std::size_t>(to_u64(v)); }},
      {"scheduler.w_diversity", [](S& s, auto v) { s.base.scheduler.weights.w_diversity = to_double(v); }},
      {"scheduler.w_battery", [](S& s, auto v) { s.base.scheduler.weights.w_battery = to_double(v); }},
      {"scheduler.w_channel", [](S& s, auto v) { s.base.scheduler.weights.w_channel = to_double(v); }},
      {"scheduler.class_measure",
       [](S& s, auto v) {
         if (v == "shannon") s.base.scheduler.class_measure = diversity::ClassMeasure::shannon;
         else if (v == "gini_simpson") s.base.scheduler.class_measure = diversity::ClassMeasure::gini_simpson;
         else throw BadValue{"class_measure must be shannon or gini_simpson"};
       }},
      {"scheduler.w_div", [](S& s, auto v) { s.base.scheduler.model_weights.w_div = to_double(v); }},
      {"scheduler.w_red", [](S& s, auto v) { s.base.scheduler.model_weights.w_red = to_double(v); }},
      {"scheduler.redundancy_cap",
       [](S& s, auto v) { s.base.scheduler.model_weights.redundancy_cap = to_double(v); }},
      {"scheduler.outlier_percentile",
       [](S& s, auto v) { s.base.scheduler.outlier_percentile = to_double(v); }},
      // [experiment]
      {"experiment.name", [](S& s, auto v) { s.name = strip_quotes(v); }},
      {"experiment.mode",
       [](S& s, auto v) {
         auto m = engine::parse_mode(v);
         if (!m) throw BadValue{"mode must be pre_training or post_training"};
         s.base.mode = *m;
       }},
      {"experiment.schedulers",
       [](S& s, auto v) {
         s.schedulers.clear();
         for (auto part : split(v, ',')) s.schedulers.push_back(to_policy(part));
       }},
      {"experiment.seeds",
       [](S& s, auto v) {
         s.seeds.clear();
         for (auto part : split(v, ',')) s.seeds.push_back(to_u64(part));
       }},
      {"experiment.output_dir", [](S& s, auto v) { s.output_dir = strip_quotes(v); }},
      {"experiment.rounds_max", [](S& s, auto v) { s.base.rounds_max = to_int32(v); }},
      {"experiment.target_accuracy",
       [](S& s, auto v) {
         if (v == "none") s.base.target_accuracy.reset();
         else s.base.target_accuracy = to_double(v);
       }},
      {"experiment.stop_at_target", [](S& s, auto v) { s.base.stop_at_target = to_bool(v); }},
      {"experiment.export_partitions", [](S& s, auto v) { s.export_partitions = to_bool(v); }},
  };
  return table;
}

bool known_section(std::string_view name) {
  static constexpr std::string_view kSections[] = {"devices", "data", "train", "network",
                                                   "constraints", "scheduler", "experiment"};
  return std::find(std::begin(kSections), std::end(kSections), name) != std::end(kSections);
}

std::string location(std::string_view source, std::size_t line) {
  return std::string(source) + ":" + std::to_string(line) + ": ";
}

}  // namespace

Status ExperimentSpec::validate() const {
  if (name.empty()) return {Errc::missing_key, "[experiment] name"};
  if (schedulers.empty()) return {Errc::invalid_config, "at least one scheduler is required"};
  if (seeds.empty()) return {Errc::invalid_config, "at least one seed is required"};
  return base.validate();
}

ExperimentSpec parse_config(std::string_view text, std::string_view source) {
  ExperimentSpec spec;
  spec.schedulers = {Policy::diversity, Policy::random};
  spec.seeds = {1};

  std::string section;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    std::string_view line = text.substr(start, end == std::string_view::npos ? end : end - start);
    start = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++line_no;

    if (const auto hash = line.find_first_of("#;"); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') {
        throw Error(Errc::parse_error, location(source, line_no) + "unterminated section header");
      }
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (!known_section(section)) {
        throw Error(Errc::unknown_key,
                    location(source, line_no) + "unknown section [" + section + "]");
      }
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(Errc::parse_error, location(source, line_no) + "expected 'key = value'");
    }
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    if (section.empty()) {
      throw Error(Errc::parse_error,
                  location(source, line_no) + "key '" + std::string(key) + "' outside a section");
    }
    const std::string full = section + "." + std::string(key);
    const auto it = setters().find(full);
    if (it == setters().end()) {
      throw Error(Errc::unknown_key, location(source, line_no) + "unknown key '" +
                                         std::string(key) + "' in [" + section + "]");
    }
    try {
      it->second(spec, value);
    } catch (const BadValue& bad) {
      throw Error(Errc::invalid_config,
                  location(source, line_no) + std::string(key) + ": " + bad.message);
    }
  }

  if (const Status s = spec.validate(); !s.ok()) {
    throw Error(s.code(), std::string(source) + ": " + s.message());
  }
  return spec;
}

ExperimentSpec load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

std::string format_float(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void write_rounds_csv(std::ostream& out, const engine::SimulationResult& result) {
  out << "round,duration_s,energy_j,n_participants,accuracy,loss,jain_fairness,aborted\n";
  for (const auto& r : result.rounds) {
    out << r.round << ',' << format_float(r.duration) << ',' << format_float(r.total_energy) << ','
        << r.participants.size() << ',' << format_float(r.global_accuracy) << ','
        << format_float(r.global_loss) << ',' << format_float(r.jain_fairness) << ','
        << (r.aborted ? 1 : 0) << '\n';
  }
}

RunSummary summarize(Policy scheduler, std::uint64_t seed, const engine::SimulationResult& result) {
  RunSummary s;
  s.scheduler = scheduler;
  s.seed = seed;
  s.rounds_to_target = result.rounds_to_target;
  double jain = 0.0;
  for (const auto& r : result.rounds) {
    s.total_time_s += r.duration;
    s.total_energy_j += r.total_energy;
    jain += r.jain_fairness;
  }
  if (!result.rounds.empty()) {
    s.final_accuracy = result.rounds.back().global_accuracy;
    s.mean_jain = jain / static_cast<double>(result.rounds.size());
  }
  return s;
}

void write_summary_csv(std::ostream& out, const std::vector<RunSummary>& runs) {
  out << "scheduler,seed,rounds_to_target,total_time_s,total_energy_j,final_accuracy,mean_jain\n";
  for (const auto& s : runs) {
    out << engine::to_string(s.scheduler) << ',' << s.seed << ',';
    if (s.rounds_to_target) out << *s.rounds_to_target;
    out << ',' << format_float(s.total_time_s) << ',' << format_float(s.total_energy_j) << ','
        << format_float(s.final_accuracy) << ',' << format_float(s.mean_jain) << '\n';
  }
}

void print_comparison(std::ostream& out, const std::vector<RunSummary>& runs) {
  struct Agg {
    int runs = 0;
    int reached = 0;
    double rounds = 0.0;
    double time = 0.0;
    double energy = 0.0;
    double accuracy = 0.0;
    double jain = 0.0;
  };
  std::vector<std::pair<Policy, Agg>> rows;
  for (const auto& s : runs) {
    auto it = std::find_if(rows.begin(), rows.end(), [&](auto& r) { return r.first == s.scheduler; });
    if (it == rows.end()) {
      rows.emplace_back(s.scheduler, Agg{});
      it = std::prev(rows.end());
    }
    Agg& a = it->second;
    ++a.runs;
    if (s.rounds_to_target) {
      ++a.reached;
      a.rounds += *s.rounds_to_target;
    }
    a.time += s.total_time_s;
    a.energy += s.total_energy_j;
    a.accuracy += s.final_accuracy;
    a.jain += s.mean_jain;
  }

  out << std::left << std::setw(18) << "scheduler" << std::right << std::setw(8) << "runs"
      << std::setw(10) << "reached" << std::setw(12) << "rounds" << std::setw(12) << "time_s"
      << std::setw(12) << "energy_j" << std::setw(10) << "acc" << std::setw(8) << "jain" << '\n';
  out << std::fixed;
  for (const auto& [policy, a] : rows) {
    const double n = a.runs;
    out << std::left << std::setw(18) << engine::to_string(policy) << std::right << std::setw(8)
        << a.runs << std::setw(10) << a.reached << std::setw(12) << std::setprecision(2)
        << (a.reached ? a.rounds / a.reached : 0.0) << std::setw(12) << a.time / n
        << std::setw(12) << a.energy / n << std::setw(10) << std::setprecision(4)
        << a.accuracy / n << std::setw(8) << std::setprecision(3) << a.jain / n << '\n';
  }
  out << std::defaultfloat;
}

std::filesystem::path run_directory(const ExperimentSpec& spec, Policy scheduler,
                                    std::uint64_t seed) {
  return spec.output_dir / std::string(engine::to_string(scheduler)) /
         ("seed_" + std::to_string(seed));
}

int run_experiment(const ExperimentSpec& spec, std::ostream& log) {
  if (const Status s = spec.validate(); !s.ok()) {
    log << "invalid experiment: " << s.message() << '\n';
    return 2;
  }
  std::vector<RunSummary> summaries;
  int failures = 0;
  for (Policy policy : spec.schedulers) {
    for (std::uint64_t seed : spec.seeds) {
      engine::SimulationConfig cfg = spec.base;
      cfg.scheduler.policy = policy;
      cfg.master_seed = seed;
      try {
        const engine::SimulationResult result = engine::run_simulation(cfg);
        const auto dir = run_directory(spec, policy, seed);
        std::filesystem::create_directories(dir);
        std::ofstream rounds(dir / "rounds.csv", std::ios::binary);
        write_rounds_csv(rounds, result);
        rounds.flush();
        if (!rounds) throw Error(Errc::io_error, "writing " + (dir / "rounds.csv").string());
        if (spec.export_partitions) {
          std::vector<LocalDataset> parts;
          for (const auto& d : result.final_devices) parts.push_back(*d.dataset);
          std::ofstream part(dir / "partition.csv", std::ios::binary);
          datagen::write_partition_summary(part, parts);
        }
        summaries.push_back(summarize(policy, seed, result));
        log << "done " << engine::to_string(policy) << " seed=" << seed << " rounds="
            << result.rounds.size() << '\n';
      } catch (const std::exception& e) {
        ++failures;
        log << "FAILED " << engine::to_string(policy) << " seed=" << seed << ": " << e.what()
            << '\n';
      }
    }
  }

  std::filesystem::create_directories(spec.output_dir);
  std::ofstream summary(spec.output_dir / "summary.csv", std::ios::binary);
  write_summary_csv(summary, summaries);
  if (!summary) {
    log << "FAILED writing summary.csv\n";
    return 1;
  }
  print_comparison(log, summaries);
  return failures == 0 ? 0 : 1;
}

LocalDataset read_dataset_csv(const std::filesystem::path& path, MeasureTask task) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    std::vector<double> values;
    try {
      for (auto field : split(view, ',')) values.push_back(to_double(field));
    } catch (const BadValue& bad) {
      if (rows.empty() && line_no == 1) continue;  // header row
      throw Error(Errc::parse_error, location(path.string(), line_no) + bad.message);
    }
    if (!rows.empty() && values.size() != rows.front().size()) {
      throw Error(Errc::parse_error, location(path.string(), line_no) + "ragged row");
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw Error(Errc::empty_dataset, path.string() + " has no data rows");

  LocalDataset data;
  if (task == MeasureTask::timeseries) {
    data.task_kind = TaskKind::timeseries;
    data.features = Matrix(rows.size(), 1);
    for (std::size_t i = 0; i < rows.size(); ++i) data.features(i, 0) = rows[i].front();
    return data;
  }
  const std::size_t cols = rows.front().size();
  if (cols < 2) throw Error(Errc::parse_error, "classification CSV needs features and a label");
  data.task_kind = TaskKind::classification;
  data.features = Matrix(rows.size(), cols - 1);
  int max_label = -1;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j + 1 < cols; ++j) data.features(i, j) = rows[i][j];
    const double label = rows[i].back();
    if (label < 0 || label != std::floor(label)) {
      throw Error(Errc::label_out_of_range, "row " + std::to_string(i + 1) + ": label must be a non-negative integer");
    }
    data.labels.push_back(static_cast<int>(label));
    max_label = std::max(max_label, static_cast<int>(label));
  }
  data.n_classes = max_label + 1;
  return data;
}

void print_measures(std::ostream& out, const LocalDataset& data, const MeasureOptions& opts) {
  diversity::DiversityParams params;
  params.class_measure = opts.class_measure;
  params.embedding_m = opts.embedding_m;
  params.tolerance_factor = opts.tolerance_factor;

  out << "task = " << to_string(data.task_kind) << '\n';
  out << "n_samples = " << data.n_samples() << '\n';
  if (data.task_kind == TaskKind::classification) {
    const auto counts = data.class_counts();
    out << "n_classes = " << data.n_classes << '\n';
    out << "shannon_entropy = " << format_float(diversity::shannon_entropy(counts)) << '\n';
    out << "gini_simpson = " << format_float(diversity::gini_simpson(counts)) << '\n';
  } else {
    const auto series = data.series();
    const double r = opts.tolerance_factor * diversity::standard_deviation(series);
    out << "tolerance_r = " << format_float(r) << '\n';
    if (r > 0.0) {
      out << "approximate_entropy = "
          << format_float(diversity::approximate_entropy(series, opts.embedding_m, r)) << '\n';
      std::string sampen = "inf";
      try {
        sampen = format_float(diversity::sample_entropy(series, opts.embedding_m, r));
      } catch (const Error& e) {
        if (e.code() != Errc::no_template_matches) throw;
      }
      out << "sample_entropy = " << sampen << '\n';
    }
  }
  const DatasetProfile profile = diversity::dataset_diversity_index(data, params);
  out << "uncertainty = " << format_float(profile.uncertainty) << '\n';
  out << "diversity_index = " << format_float(profile.diversity_index) << '\n';
}

}  // namespace feel::experiment
