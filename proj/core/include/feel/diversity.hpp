#pragma once

// Dataset- and model-diversity measures. Everything here is a pure function
// of its arguments (and explicit seed), safe to call concurrently.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string_view>

#include "feel/domain.hpp"

namespace feel::diversity {

/// Shannon entropy in nats of a class histogram, with 0 ln 0 = 0.
/// Throws Errc::empty_dataset when every count is zero.
double shannon_entropy(std::span<const int> class_counts);

/// 1 - sum p_i^2: probability that two draws (with replacement) differ in class.
double gini_simpson(std::span<const int> class_counts);

/// Pincus approximate entropy; template matches use Chebyshev distance <= r
/// and count self-matches. Requires series.size() > m + 1.
double approximate_entropy(std::span<const double> series, int m, double r);

/// Richman-Moorman sample entropy, self-matches excluded. Throws
/// Errc::no_template_matches if either match count is zero.
double sample_entropy(std::span<const double> series, int m, double r);

/// Population standard deviation; used to turn a relative tolerance into r.
double standard_deviation(std::span<const double> series);

struct DissimilarityMetric {
  enum class Kind { euclidean, cosine, heat_kernel };
  Kind kind = Kind::euclidean;
  double sigma = 0.0;  // heat_kernel only

  static DissimilarityMetric euclidean() { return {Kind::euclidean, 0.0}; }
  static DissimilarityMetric cosine() { return {Kind::cosine, 0.0}; }
  static DissimilarityMetric heat_kernel(double sigma) { return {Kind::heat_kernel, sigma}; }

  Status validate() const;
};

std::string_view to_string(DissimilarityMetric::Kind kind) noexcept;

/// euclidean: ||x - y||; cosine: 1 - cos(x, y) in [0, 2];
/// heat_kernel: 1 - exp(-||x - y||^2 / (2 sigma^2)) in [0, 1).
double dissimilarity(std::span<const double> x, std::span<const double> y,
                     const DissimilarityMetric& metric);

/// Mean dissimilarity over all unordered pairs of a seeded random subset of
/// `sample_size` rows (all rows when sample_size >= n).
double mean_pairwise_dissimilarity(const Matrix& points, const DissimilarityMetric& metric,
                                   std::size_t sample_size, std::uint64_t seed);

enum class ClassMeasure { shannon, gini_simpson };

struct DiversityParams {
  ClassMeasure class_measure = ClassMeasure::shannon;
  // Class count used for normalization; 0 means use the dataset's n_classes.
  int n_classes = 0;
  // Time series: SampEn with embedding m and r = tolerance_factor * stddev.
  int embedding_m = 2;
  double tolerance_factor = 0.2;
  double timeseries_cap = 2.5;
  // Clustering: mean pairwise dissimilarity of a random subset.
  DissimilarityMetric clustering_metric = DissimilarityMetric::cosine();
  std::size_t clustering_sample_size = 64;
  double clustering_cap = 1.0;
  std::uint64_t seed = 0;
};

/// Richness, uncertainty and the combined scalar index u_hat * ln(1 + n),
/// where u_hat is the uncertainty normalized to [0, 1] by its task maximum.
DatasetProfile dataset_diversity_index(const LocalDataset& data, const DiversityParams& params);

/// Uncertainty normalized into [0, 1]; exposed for tests and reports.
double normalized_uncertainty(const LocalDataset& data, const DiversityParams& params);

double model_global_dissimilarity(const ModelParams& local, const ModelParams& global,
                                  const DissimilarityMetric& metric);

/// (group_count, group_size) view of a flat parameter vector.
struct Grouping {
  std::size_t group_count = 0;
  std::size_t group_size = 0;
};

/// One group per input feature plus one for the biases, each n_classes wide.
Grouping feature_grouping(const ModelShape& shape) noexcept;

/// Mean L2 norm of the pairwise group-difference rows, i.e. ||D||_{2,1} / rows.
double parameter_redundancy(const ModelParams& params, Grouping grouping);

struct ModelDiversityWeights {
  double w_div = 0.5;
  double w_red = 0.5;
  double redundancy_cap = 1.0;

  Status validate() const;
};

/// w_div * cosine dissimilarity to the global model
/// + w_red * min(redundancy / cap, 1), clamped at `ceiling`.
double model_diversity_index(const ModelParams& local, const ModelParams& global,
                             Grouping grouping, const ModelDiversityWeights& weights,
                             double ceiling = std::numeric_limits<double>::infinity());

/// Linear-interpolated percentile (fraction in [0, 1]) of the reported indices.
double outlier_ceiling(std::span<const double> indices, double percentile);

}  // namespace feel::diversity
