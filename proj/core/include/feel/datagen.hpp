#pragma once

// Seeded synthetic federated data: Gaussian class pools, non-IID/unbalanced/
// redundant partitions, and regular-to-irregular time series.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "feel/domain.hpp"

namespace feel::datagen {

/// One unit-covariance Gaussian blob per class; class centers lie at pairwise
/// distance >= class_sep. Rows are ordered by class.
LocalDataset make_classification_pool(int n_classes, int dim, int samples_per_class,
                                      double class_sep, std::uint64_t seed);

struct LabelSkew {
  enum class Kind { iid, dirichlet };
  Kind kind = Kind::iid;
  double alpha = 1.0;
};

struct SizeDistribution {
  enum class Kind { balanced, lognormal, powerlaw };
  Kind kind = Kind::balanced;
  double mean = 50.0;     // lognormal: mu = ln(mean)
  double sigma = 1.0;     // lognormal
  double exponent = 2.0;  // powerlaw (Pareto shape, scale = min_size)
};

struct PartitionSpec {
  int n_devices = 10;
  LabelSkew skew;
  SizeDistribution size_dist;
  int min_size = 1;
  double redundancy_factor = 0.0;

  Status validate() const;
};

/// Splits `pool` across devices. Sampling is without replacement; class
/// proportions follow the pool (iid) or a Dirichlet(alpha) draw, and a class
/// that runs dry hands its quota to the classes that still have samples.
/// Throws Errc::insufficient_pool when the requested sizes exceed the pool.
std::vector<LocalDataset> partition(const LocalDataset& pool, const PartitionSpec& spec,
                                    std::uint64_t seed);

/// Stratified split into (train, held_out); held_out gets round(fraction * n_c)
/// samples of every class.
std::pair<LocalDataset, LocalDataset> split_holdout(const LocalDataset& pool, double fraction,
                                                    std::uint64_t seed);

enum class SeriesKind { sine, ar_noise, constant };

std::vector<double> make_timeseries(SeriesKind kind, std::size_t length, double noise_std,
                                     std::uint64_t seed);

LocalDataset make_timeseries_dataset(const std::vector<double>& series);

/// device,n_samples,distinct,class_0..class_{k-1}
void write_partition_summary(std::ostream& out, const std::vector<LocalDataset>& datasets);

}  // namespace feel::datagen
