#include "feel/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <set>
#include <string>

#include "feel/random.hpp"

namespace feel::datagen {
namespace {

std::vector<std::vector<std::size_t>> rows_by_class(const LocalDataset& pool) {
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(pool.n_classes));
  for (std::size_t i = 0; i < pool.labels.size(); ++i) {
    by_class[static_cast<std::size_t>(pool.labels[i])].push_back(i);
  }
  return by_class;
}

// Largest-remainder apportionment of `total` units by `weights`, restricted to
// entries with capacity left. Ties go to the lowest index after `rotation`.
std::vector<std::size_t> apportion(std::size_t total, const std::vector<double>& weights,
                                   const std::vector<std::size_t>& capacity,
                                   std::size_t rotation) {
  const std::size_t k = weights.size();
  std::vector<std::size_t> out(k, 0);
  std::size_t remaining = total;
  while (remaining > 0) {
    std::vector<double> w(k, 0.0);
    double sum = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      if (out[c] < capacity[c]) {
        w[c] = weights[c];
        sum += w[c];
      }
    }
    if (sum <= 0.0) {
      // Only zero-weight classes have room left: fall back to their capacity.
      for (std::size_t c = 0; c < k; ++c) {
        w[c] = static_cast<double>(capacity[c] - out[c]);
        sum += w[c];
      }
      if (sum <= 0.0) throw Error(Errc::insufficient_pool, "no samples left in pool");
    }

    std::vector<std::size_t> add(k, 0);
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < k; ++c) {
      const double exact = static_cast<double>(remaining) * w[c] / sum;
      add[c] = static_cast<std::size_t>(std::floor(exact));
      assigned += add[c];
      if (w[c] > 0.0) remainders.emplace_back(exact - static_cast<double>(add[c]), c);
    }
    std::stable_sort(remainders.begin(), remainders.end(), [&](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return (a.second + k - rotation % k) % k < (b.second + k - rotation % k) % k;
    });
    for (std::size_t i = 0; assigned < remaining && i < remainders.size(); ++i, ++assigned) {
      ++add[remainders[i].second];
    }

    std::size_t placed = 0;
    for (std::size_t c = 0; c < k; ++c) {
      const std::size_t room = capacity[c] - out[c];
      const std::size_t take = std::min(add[c], room);
      out[c] += take;
      placed += take;
    }
    if (placed == 0) throw Error(Errc::insufficient_pool, "apportionment stalled");
    remaining -= placed;
  }
  return out;
}

std::size_t draw_size(const PartitionSpec& spec, std::size_t pool_size, Rng& rng) {
  double size = 0.0;
  switch (spec.size_dist.kind) {
    case SizeDistribution::Kind::balanced:
      size = static_cast<double>(pool_size / static_cast<std::size_t>(spec.n_devices));
      break;
    case SizeDistribution::Kind::lognormal: {
      std::lognormal_distribution<double> dist(std::log(spec.size_dist.mean), spec.size_dist.sigma);
      size = std::round(dist(rng));
      break;
    }
    case SizeDistribution::Kind::powerlaw: {
      std::uniform_real_distribution<double> u(0.0, 1.0);
      const double x = 1.0 - u(rng);  // (0, 1]
      size = std::floor(spec.min_size * std::pow(x, -1.0 / spec.size_dist.exponent));
      break;
    }
  }
  if (!std::isfinite(size) || size > 1e12) size = 1e12;
  return std::max(static_cast<std::size_t>(size), static_cast<std::size_t>(spec.min_size));
}

std::vector<double> dirichlet(double alpha, std::size_t k, Rng& rng) {
  std::gamma_distribution<double> gamma(alpha, 1.0);
  std::vector<double> p(k);
  double sum = 0.0;
  for (double& v : p) {
    v = gamma(rng);
    sum += v;
  }
  if (!(sum > 0.0)) {
    // Every gamma draw underflowed (tiny alpha): all mass on one class.
    std::fill(p.begin(), p.end(), 0.0);
    std::uniform_int_distribution<std::size_t> pick(0, k - 1);
    p[pick(rng)] = 1.0;
    return p;
  }
  for (double& v : p) v /= sum;
  return p;
}

LocalDataset gather(const LocalDataset& pool, const std::vector<std::size_t>& rows) {
  LocalDataset out;
  out.task_kind = pool.task_kind;
  out.n_classes = pool.n_classes;
  out.features = Matrix(rows.size(), pool.features.cols);
  out.labels.reserve(rows.size());
  out.source_index.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto src = pool.features.row(rows[i]);
    std::copy(src.begin(), src.end(), out.features.row(i).begin());
    out.labels.push_back(pool.labels[rows[i]]);
    out.source_index.push_back(pool.source_index.empty() ? rows[i] : pool.source_index[rows[i]]);
  }
  return out;
}

}  // namespace

LocalDataset make_classification_pool(int n_classes, int dim, int samples_per_class,
                                      double class_sep, std::uint64_t seed) {
  if (n_classes < 2 || dim < 2) throw Error(Errc::invalid_argument, "need n_classes, dim >= 2");
  if (samples_per_class < 1) throw Error(Errc::invalid_argument, "samples_per_class must be >= 1");
  if (!(class_sep >= 0.0)) throw Error(Errc::invalid_argument, "class_sep must be >= 0");

  Rng rng = make_rng(seed, {tag(Stream::pool)});
  const auto k = static_cast<std::size_t>(n_classes);
  const auto d = static_cast<std::size_t>(dim);

  // Rejection-sample centers; widen the spread if packing keeps failing.
  Matrix centers(k, d);
  double spread = std::max(class_sep, 1e-9) * 0.75;
  for (std::size_t placed = 0; placed < k;) {
    std::normal_distribution<double> coord(0.0, spread);
    bool ok = false;
    for (int attempt = 0; attempt < 2000 && !ok; ++attempt) {
      for (std::size_t j = 0; j < d; ++j) centers(placed, j) = coord(rng);
      ok = true;
      for (std::size_t other = 0; other < placed && ok; ++other) {
        double dist2 = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          const double diff = centers(placed, j) - centers(other, j);
          dist2 += diff * diff;
        }
        ok = std::sqrt(dist2) >= class_sep;
      }
    }
    if (ok) {
      ++placed;
    } else {
      spread *= 1.5;
      placed = 0;
    }
  }

  LocalDataset pool;
  pool.task_kind = TaskKind::classification;
  pool.n_classes = n_classes;
  const std::size_t per = static_cast<std::size_t>(samples_per_class);
  pool.features = Matrix(k * per, d);
  pool.labels.resize(k * per);
  pool.source_index.resize(k * per);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t s = 0; s < per; ++s) {
      const std::size_t i = c * per + s;
      for (std::size_t j = 0; j < d; ++j) pool.features(i, j) = centers(c, j) + noise(rng);
      pool.labels[i] = static_cast<int>(c);
      pool.source_index[i] = i;
    }
  }
  return pool;
}

Status PartitionSpec::validate() const {
  if (n_devices < 1) return {Errc::invalid_config, "n_devices must be >= 1"};
  if (min_size < 1) return {Errc::invalid_config, "min_size must be >= 1"};
  if (!(redundancy_factor >= 0.0 && redundancy_factor < 1.0)) {
    return {Errc::invalid_config, "redundancy_factor must lie in [0, 1)"};
  }
  if (skew.kind == LabelSkew::Kind::dirichlet && !(skew.alpha > 0.0)) {
    return {Errc::invalid_config, "Dirichlet alpha must be > 0"};
  }
  if (size_dist.kind == SizeDistribution::Kind::lognormal &&
      (!(size_dist.mean > 0.0) || !(size_dist.sigma >= 0.0))) {
    return {Errc::invalid_config, "lognormal sizes need mean > 0 and sigma >= 0"};
  }
  if (size_dist.kind == SizeDistribution::Kind::powerlaw && !(size_dist.exponent > 0.0)) {
    return {Errc::invalid_config, "powerlaw exponent must be > 0"};
  }
  return Status::Ok();
}

std::vector<LocalDataset> partition(const LocalDataset& pool, const PartitionSpec& spec,
                                    std::uint64_t seed) {
  spec.validate().throw_if_error();
  if (pool.task_kind != TaskKind::classification || pool.n_classes < 1) {
    throw Error(Errc::invalid_argument, "partition expects a classification pool");
  }
  Rng rng = make_rng(seed, {tag(Stream::partition)});
  const std::size_t n_dev = static_cast<std::size_t>(spec.n_devices);
  const std::size_t k = static_cast<std::size_t>(pool.n_classes);

  std::vector<std::size_t> sizes(n_dev);
  std::size_t total = 0;
  for (auto& s : sizes) {
    s = draw_size(spec, pool.n_samples(), rng);
    total += s;
  }
  if (total > pool.n_samples()) {
    throw Error(Errc::insufficient_pool, "requested " + std::to_string(total) +
                                             " samples from a pool of " +
                                             std::to_string(pool.n_samples()));
  }

  auto available = rows_by_class(pool);
  for (auto& rows : available) std::shuffle(rows.begin(), rows.end(), rng);
  std::vector<double> pool_props(k);
  for (std::size_t c = 0; c < k; ++c) {
    pool_props[c] = static_cast<double>(available[c].size()) / static_cast<double>(pool.n_samples());
  }

  std::vector<LocalDataset> out;
  out.reserve(n_dev);
  for (std::size_t dev = 0; dev < n_dev; ++dev) {
    const std::vector<double> props = spec.skew.kind == LabelSkew::Kind::iid
                                          ? pool_props
                                          : dirichlet(spec.skew.alpha, k, rng);
    std::vector<std::size_t> capacity(k);
    for (std::size_t c = 0; c < k; ++c) capacity[c] = available[c].size();
    const auto quota = apportion(sizes[dev], props, capacity, dev);

    std::vector<std::size_t> rows;
    rows.reserve(sizes[dev]);
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t q = 0; q < quota[c]; ++q) {
        rows.push_back(available[c].back());
        available[c].pop_back();
      }
    }
    std::shuffle(rows.begin(), rows.end(), rng);

    const std::size_t n = rows.size();
    std::size_t n_dup = static_cast<std::size_t>(std::llround(spec.redundancy_factor * n));
    if (n_dup >= n) n_dup = n > 0 ? n - 1 : 0;
    if (n_dup > 0) {
      std::uniform_int_distribution<std::size_t> pick(0, n - n_dup - 1);
      for (std::size_t i = n - n_dup; i < n; ++i) rows[i] = rows[pick(rng)];
    }
    out.push_back(gather(pool, rows));
  }
  return out;
}

std::pair<LocalDataset, LocalDataset> split_holdout(const LocalDataset& pool, double fraction,
                                                    std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction < 1.0)) {
    throw Error(Errc::invalid_argument, "holdout fraction must lie in [0, 1)");
  }
  Rng rng = make_rng(seed, {tag(Stream::pool), 1});
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
  for (auto& rows : rows_by_class(pool)) {
    std::shuffle(rows.begin(), rows.end(), rng);
    const auto n_test = static_cast<std::size_t>(std::llround(fraction * rows.size()));
    test_rows.insert(test_rows.end(), rows.begin(), rows.begin() + static_cast<long>(n_test));
    train_rows.insert(train_rows.end(), rows.begin() + static_cast<long>(n_test), rows.end());
  }
  std::sort(train_rows.begin(), train_rows.end());
  std::sort(test_rows.begin(), test_rows.end());
  return {gather(pool, train_rows), gather(pool, test_rows)};
}

std::vector<double> make_timeseries(SeriesKind kind, std::size_t length, double noise_std,
                                    std::uint64_t seed) {
  if (length < 32) throw Error(Errc::invalid_argument, "time series length must be >= 32");
  if (!(noise_std >= 0.0)) throw Error(Errc::invalid_argument, "noise_std must be >= 0");
  Rng rng = make_rng(seed, {tag(Stream::sampling), 7});
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> x(length);
  constexpr double period = 24.0;
  switch (kind) {
    case SeriesKind::constant:
      std::fill(x.begin(), x.end(), 1.0);
      break;
    case SeriesKind::sine:
      for (std::size_t t = 0; t < length; ++t) {
        x[t] = std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / period) +
               noise_std * noise(rng);
      }
      break;
    case SeriesKind::ar_noise: {
      double prev = 0.0;
      for (std::size_t t = 0; t < length; ++t) {
        prev = 0.5 * prev + noise_std * noise(rng);
        x[t] = prev;
      }
      break;
    }
  }
  return x;
}

LocalDataset make_timeseries_dataset(const std::vector<double>& series) {
  LocalDataset out;
  out.task_kind = TaskKind::timeseries;
  out.features = Matrix(series.size(), 1);
  out.features.data = series;
  return out;
}

void write_partition_summary(std::ostream& out, const std::vector<LocalDataset>& datasets) {
  const int k = datasets.empty() ? 0 : datasets.front().n_classes;
  out << "device,n_samples,distinct";
  for (int c = 0; c < k; ++c) out << ",class_" << c;
  out << '\n';
  for (std::size_t i = 0; i < datasets.size(); ++i) {
    const auto& d = datasets[i];
    const std::set<std::size_t> distinct(d.source_index.begin(), d.source_index.end());
    out << i << ',' << d.n_samples() << ',' << distinct.size();
    for (int c : d.class_counts()) out << ',' << c;
    out << '\n';
  }
}

}  // namespace feel::datagen
