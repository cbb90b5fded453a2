#include "feel/diversity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "feel/random.hpp"

namespace feel::diversity {
namespace {

long long total_count(std::span<const int> counts) {
  long long total = 0;
  for (int c : counts) {
    if (c < 0) throw Error(Errc::invalid_argument, "negative class count");
    total += c;
  }
  if (total == 0) throw Error(Errc::empty_dataset, "all class counts are zero");
  return total;
}

void check_series(std::span<const double> series, int m, double r) {
  if (m < 1) throw Error(Errc::invalid_argument, "embedding length m must be >= 1");
  if (!(r > 0.0)) throw Error(Errc::invalid_argument, "tolerance r must be > 0");
  if (series.size() <= static_cast<std::size_t>(m) + 1) {
    throw Error(Errc::series_too_short,
                "length " + std::to_string(series.size()) + " needs > m + 1");
  }
}

double squared_distance(std::span<const double> x, std::span<const double> y) {
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    acc += d * d;
  }
  return acc;
}

double norm(std::span<const double> x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return std::sqrt(acc);
}

}  // namespace

double shannon_entropy(std::span<const int> class_counts) {
  const double total = static_cast<double>(total_count(class_counts));
  double h = 0.0;
  for (int c : class_counts) {
    if (c == 0) continue;
    const double p = c / total;
    h -= p * std::log(p);
  }
  return std::max(h, 0.0);
}

double gini_simpson(std::span<const int> class_counts) {
  const double total = static_cast<double>(total_count(class_counts));
  double same = 0.0;
  for (int c : class_counts) {
    const double p = c / total;
    same += p * p;
  }
  return std::max(1.0 - same, 0.0);
}

double approximate_entropy(std::span<const double> series, int m, double r) {
  check_series(series, m, r);
  const std::size_t n = series.size();
  const std::size_t mm = static_cast<std::size_t>(m);
  const std::size_t short_count = n - mm + 1;  // templates of length m
  const std::size_t long_count = n - mm;       // templates of length m + 1

  // Self-matches are included, so every count starts at one.
  std::vector<std::size_t> short_matches(short_count, 1);
  std::vector<std::size_t> long_matches(long_count, 1);
  for (std::size_t i = 0; i < short_count; ++i) {
    for (std::size_t j = i + 1; j < short_count; ++j) {
      bool within = true;
      for (std::size_t k = 0; k < mm && within; ++k) {
        within = std::abs(series[i + k] - series[j + k]) <= r;
      }
      if (!within) continue;
      ++short_matches[i];
      ++short_matches[j];
      if (j < long_count && std::abs(series[i + mm] - series[j + mm]) <= r) {
        ++long_matches[i];
        ++long_matches[j];
      }
    }
  }

  auto phi = [](const std::vector<std::size_t>& matches) {
    const double denom = static_cast<double>(matches.size());
    double acc = 0.0;
    for (std::size_t c : matches) acc += std::log(static_cast<double>(c) / denom);
    return acc / denom;
  };
  return phi(short_matches) - phi(long_matches);
}

double sample_entropy(std::span<const double> series, int m, double r) {
  check_series(series, m, r);
  const std::size_t n = series.size();
  const std::size_t mm = static_cast<std::size_t>(m);
  const std::size_t templates = n - mm;  // same template count for m and m + 1

  unsigned long long b = 0;
  unsigned long long a = 0;
  for (std::size_t i = 0; i + 1 < templates; ++i) {
    for (std::size_t j = i + 1; j < templates; ++j) {
      bool within = true;
      for (std::size_t k = 0; k < mm && within; ++k) {
        within = std::abs(series[i + k] - series[j + k]) <= r;
      }
      if (!within) continue;
      ++b;
      if (std::abs(series[i + mm] - series[j + mm]) <= r) ++a;
    }
  }
  if (a == 0 || b == 0) {
    throw Error(Errc::no_template_matches,
                "A=" + std::to_string(a) + " B=" + std::to_string(b));
  }
  return -std::log(static_cast<double>(a) / static_cast<double>(b));
}

double standard_deviation(std::span<const double> series) {
  if (series.empty()) return 0.0;
  const double mean = std::accumulate(series.begin(), series.end(), 0.0) /
                      static_cast<double>(series.size());
  double acc = 0.0;
  for (double v : series) acc += (v - mean) * (v - mean);
  return std::sqrt(acc / static_cast<double>(series.size()));
}

Status DissimilarityMetric::validate() const {
  if (kind == Kind::heat_kernel && !(sigma > 0.0)) {
    return {Errc::invalid_argument, "heat_kernel requires sigma > 0"};
  }
  if (kind != Kind::heat_kernel && sigma != 0.0) {
    return {Errc::invalid_argument, "sigma only applies to heat_kernel"};
  }
  return Status::Ok();
}

std::string_view to_string(DissimilarityMetric::Kind kind) noexcept {
  switch (kind) {
    case DissimilarityMetric::Kind::euclidean: return "euclidean";
    case DissimilarityMetric::Kind::cosine: return "cosine";
    case DissimilarityMetric::Kind::heat_kernel: return "heat_kernel";
  }
  return "unknown";
}

double dissimilarity(std::span<const double> x, std::span<const double> y,
                     const DissimilarityMetric& metric) {
  if (x.size() != y.size()) throw Error(Errc::shape_mismatch, "vector lengths differ");
  metric.validate().throw_if_error();
  switch (metric.kind) {
    case DissimilarityMetric::Kind::euclidean:
      return std::sqrt(squared_distance(x, y));
    case DissimilarityMetric::Kind::heat_kernel:
      return 1.0 - std::exp(-squared_distance(x, y) / (2.0 * metric.sigma * metric.sigma));
    case DissimilarityMetric::Kind::cosine: {
      const double nx = norm(x);
      const double ny = norm(y);
      if (nx == 0.0 || ny == 0.0) throw Error(Errc::undefined_angle, "zero vector");
      double dot = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) dot += x[i] * y[i];
      const double cos = std::clamp(dot / (nx * ny), -1.0, 1.0);
      return 1.0 - cos;
    }
  }
  return 0.0;
}

double mean_pairwise_dissimilarity(const Matrix& points, const DissimilarityMetric& metric,
                                   std::size_t sample_size, std::uint64_t seed) {
  if (points.rows < 2) throw Error(Errc::invalid_argument, "need at least two points");
  if (sample_size < 2) throw Error(Errc::invalid_argument, "sample_size must be >= 2");
  metric.validate().throw_if_error();

  std::vector<std::size_t> rows(points.rows);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  if (sample_size < points.rows) {
    Rng rng = make_rng(seed, {tag(Stream::sampling)});
    for (std::size_t i = 0; i < sample_size; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, rows.size() - 1);
      std::swap(rows[i], rows[pick(rng)]);
    }
    rows.resize(sample_size);
    std::sort(rows.begin(), rows.end());
  }

  double acc = 0.0;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < rows.size(); ++a) {
    for (std::size_t b = a + 1; b < rows.size(); ++b) {
      acc += dissimilarity(points.row(rows[a]), points.row(rows[b]), metric);
      ++pairs;
    }
  }
  return acc / static_cast<double>(pairs);
}

double normalized_uncertainty(const LocalDataset& data, const DiversityParams& params) {
  if (data.n_samples() == 0) throw Error(Errc::empty_dataset, "dataset has no samples");
  switch (data.task_kind) {
    case TaskKind::classification: {
      const int k = params.n_classes > 0 ? params.n_classes : data.n_classes;
      std::vector<int> counts = data.class_counts();
      counts.resize(static_cast<std::size_t>(std::max(k, static_cast<int>(counts.size()))), 0);
      if (k <= 1) return 0.0;
      if (params.class_measure == ClassMeasure::shannon) {
        return std::clamp(shannon_entropy(counts) / std::log(static_cast<double>(k)), 0.0, 1.0);
      }
      return std::clamp(gini_simpson(counts) / (1.0 - 1.0 / k), 0.0, 1.0);
    }
    case TaskKind::timeseries: {
      const std::span<const double> series = data.series();
      const double sd = standard_deviation(series);
      if (sd == 0.0) return 0.0;  // constant signal: every template matches
      try {
        const double se = sample_entropy(series, params.embedding_m, params.tolerance_factor * sd);
        return std::clamp(se / params.timeseries_cap, 0.0, 1.0);
      } catch (const Error& e) {
        if (e.code() == Errc::no_template_matches) return 1.0;
        throw;
      }
    }
    case TaskKind::clustering: {
      if (data.n_samples() < 2) return 0.0;
      const double d = mean_pairwise_dissimilarity(data.features, params.clustering_metric,
                                                   params.clustering_sample_size, params.seed);
      return std::clamp(d / params.clustering_cap, 0.0, 1.0);
    }
  }
  return 0.0;
}

DatasetProfile dataset_diversity_index(const LocalDataset& data, const DiversityParams& params) {
  const double u_hat = normalized_uncertainty(data, params);
  DatasetProfile profile;
  profile.richness = data.n_samples();
  profile.uncertainty = u_hat;
  profile.diversity_index = u_hat * std::log1p(static_cast<double>(data.n_samples()));
  return profile;
}

double model_global_dissimilarity(const ModelParams& local, const ModelParams& global,
                                  const DissimilarityMetric& metric) {
  if (local.weights.size() != global.weights.size()) {
    throw Error(Errc::shape_mismatch, "local and global parameter lengths differ");
  }
  return dissimilarity(local.weights, global.weights, metric);
}

Grouping feature_grouping(const ModelShape& shape) noexcept {
  return {shape.dim + 1, shape.n_classes};
}

double parameter_redundancy(const ModelParams& params, Grouping grouping) {
  const std::size_t g = grouping.group_count;
  const std::size_t s = grouping.group_size;
  if (g * s != params.weights.size() || g == 0 || s == 0) {
    throw Error(Errc::shape_mismatch, "grouping does not tile the parameter vector");
  }
  if (g < 2) return 0.0;
  const std::span<const double> w(params.weights);
  double l21 = 0.0;
  for (std::size_t a = 0; a < g; ++a) {
    for (std::size_t b = a + 1; b < g; ++b) {
      l21 += std::sqrt(squared_distance(w.subspan(a * s, s), w.subspan(b * s, s)));
    }
  }
  const double rows = static_cast<double>(g * (g - 1) / 2);
  return l21 / rows;
}

Status ModelDiversityWeights::validate() const {
  if (!(w_div >= 0.0) || !(w_red >= 0.0) || std::abs(w_div + w_red - 1.0) > 1e-9) {
    return {Errc::invalid_argument, "model diversity weights must be >= 0 and sum to 1"};
  }
  if (!(redundancy_cap > 0.0)) return {Errc::invalid_argument, "redundancy_cap must be > 0"};
  return Status::Ok();
}

double model_diversity_index(const ModelParams& local, const ModelParams& global,
                             Grouping grouping, const ModelDiversityWeights& weights,
                             double ceiling) {
  weights.validate().throw_if_error();
  double value = 0.0;
  if (weights.w_div > 0.0) {
    value += weights.w_div *
             model_global_dissimilarity(local, global, DissimilarityMetric::cosine());
  }
  if (weights.w_red > 0.0) {
    const double red = parameter_redundancy(local, grouping);
    value += weights.w_red * std::min(red / weights.redundancy_cap, 1.0);
  }
  return std::min(value, ceiling);
}

double outlier_ceiling(std::span<const double> indices, double percentile) {
  if (indices.empty()) return std::numeric_limits<double>::infinity();
  if (!(percentile >= 0.0 && percentile <= 1.0)) {
    throw Error(Errc::invalid_argument, "percentile must lie in [0, 1]");
  }
  std::vector<double> sorted(indices.begin(), indices.end());
  std::sort(sorted.begin(), sorted.end());
  const double pos = percentile * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace feel::diversity
