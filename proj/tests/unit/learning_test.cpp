#include "feel/learning.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "feel/datagen.hpp"

namespace feel::learning {
namespace {

LocalDataset toy(std::vector<std::vector<double>> x, std::vector<int> y, int k) {
  LocalDataset d;
  d.n_classes = k;
  d.features = Matrix(x.size(), x.front().size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < x[i].size(); ++j) d.features(i, j) = x[i][j];
  }
  d.labels = std::move(y);
  return d;
}

Update make_update(DeviceId id, std::vector<double> w, std::size_t n, double loss = 1.0) {
  Update u;
  u.device_id = id;
  u.params.shape = {w.size() - 1, 1};
  u.params.weights = std::move(w);
  u.n_samples = n;
  u.final_loss = loss;
  return u;
}

TEST(InitModel, LayoutAndDeterminism) {
  const auto a = init_model(5, 3, 1);
  EXPECT_EQ(a.weights.size(), 5u * 3u + 3u);
  EXPECT_EQ(a, init_model(5, 3, 1));
  EXPECT_NE(a.weights, init_model(5, 3, 2).weights);
  const double s = 1.0 / std::sqrt(5.0);
  for (std::size_t i = 0; i < 15; ++i) EXPECT_LE(std::abs(a.weights[i]), s);
  for (std::size_t i = 15; i < 18; ++i) EXPECT_EQ(a.weights[i], 0.0);
}

TEST(LocalTrain, ZeroLearningRateLeavesParams) {
  const auto data = toy({{1, 0}, {0, 1}, {1, 1}}, {0, 1, 2}, 3);
  const auto model = init_model(2, 3, 4);
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.epochs = 3;
  const auto update = local_train(model, data, cfg);
  EXPECT_EQ(update.params.weights, model.weights);
  std::vector<std::size_t> all{0, 1, 2};
  EXPECT_EQ(update.final_loss, loss_and_gradient(model, data, all, 0.0, {}));
  EXPECT_EQ(update.n_samples, 3u);
}

TEST(LocalTrain, SingleStepMatchesHandComputedGradient) {
  // x = (2, -1), label 1, k = 2. W feature-major, biases last.
  const auto data = toy({{2.0, -1.0}}, {1}, 2);
  ModelParams model;
  model.shape = {2, 2};
  model.weights = {0.1, -0.2, 0.3, 0.4, 0.05, -0.05};
  const double z0 = 2.0 * 0.1 + -1.0 * 0.3 + 0.05;
  const double z1 = 2.0 * -0.2 + -1.0 * 0.4 - 0.05;
  const double p0 = std::exp(z0) / (std::exp(z0) + std::exp(z1));
  const double p1 = 1.0 - p0;
  const double g0 = p0;        // dL/dz0
  const double g1 = p1 - 1.0;  // dL/dz1
  const double lr = 0.5;
  const std::vector<double> expected{0.1 - lr * g0 * 2.0, -0.2 - lr * g1 * 2.0,
                                     0.3 - lr * g0 * -1.0, 0.4 - lr * g1 * -1.0,
                                     0.05 - lr * g0, -0.05 - lr * g1};
  TrainConfig cfg;
  cfg.learning_rate = lr;
  cfg.batch_size = 1;
  cfg.epochs = 1;
  const auto update = local_train(model, data, cfg);
  for (std::size_t i = 0; i < expected.size(); ++i) {
    EXPECT_NEAR(update.params.weights[i], expected[i], 1e-15) << i;
  }
  EXPECT_EQ(model.weights[0], 0.1);  // input untouched
}

TEST(LossAndGradient, MatchesCentralFiniteDifferences) {
  const auto data = toy({{0.5, -1.2}, {1.5, 0.3}, {-0.7, 0.9}}, {0, 1, 2}, 3);
  auto model = init_model(2, 3, 8);
  model.weights[6] = 0.2;
  model.weights[8] = -0.1;
  const std::vector<std::size_t> rows{0, 1, 2};
  const double l2 = 0.1;
  std::vector<double> grad(model.weights.size());
  loss_and_gradient(model, data, rows, l2, grad);
  const double h = 1e-5;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    auto plus = model, minus = model;
    plus.weights[i] += h;
    minus.weights[i] -= h;
    const double fd = (loss_and_gradient(plus, data, rows, l2, {}) -
                       loss_and_gradient(minus, data, rows, l2, {})) / (2 * h);
    EXPECT_LT(std::abs(fd - grad[i]) / std::max(std::abs(fd), 1e-8), 1e-5) << i;
  }
}

TEST(LocalTrain, LossNonIncreasingAtSmallLearningRate) {
  const auto pool = datagen::make_classification_pool(4, 3, 30, 3.0, 2);
  auto model = init_model(3, 4, 1);
  TrainConfig cfg;
  cfg.learning_rate = 1e-3;
  cfg.batch_size = 8;
  cfg.epochs = 1;
  double previous = evaluate(model, pool).loss;
  for (int epoch = 0; epoch < 10; ++epoch) {
    cfg.seed = static_cast<std::uint64_t>(epoch);
    const auto u = local_train(model, pool, cfg);
    EXPECT_LE(u.final_loss, previous + 1e-12);
    previous = u.final_loss;
    model = u.params;
  }
}

TEST(LocalTrain, SeededShufflingIsDeterministic) {
  const auto pool = datagen::make_classification_pool(3, 2, 20, 2.0, 2);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 4;
  cfg.seed = 9;
  const auto m = init_model(2, 3, 3);
  EXPECT_EQ(local_train(m, pool, cfg).params, local_train(m, pool, cfg).params);
  auto other = cfg;
  other.seed = 10;
  EXPECT_NE(local_train(m, pool, cfg).params.weights, local_train(m, pool, other).params.weights);
}

TEST(Evaluate, PerfectOnClassCenters) {
  // W = identity-like so x = e_c scores class c highest.
  const auto centers = toy({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}, {0, 1, 2}, 3);
  ModelParams model;
  model.shape = {3, 3};
  model.weights.assign(12, 0.0);
  for (std::size_t c = 0; c < 3; ++c) model.weights[c * 3 + c] = 5.0;
  EXPECT_EQ(evaluate(model, centers).accuracy, 1.0);
}

TEST(Evaluate, UniformLogitsGiveLogK) {
  const auto data = toy({{1, 2}, {3, 4}, {5, 6}, {7, 8}}, {0, 1, 2, 3}, 4);
  ModelParams model;
  model.shape = {2, 4};
  model.weights.assign(12, 0.0);
  EXPECT_NEAR(evaluate(model, data).loss, std::log(4.0), 1e-12);
}

TEST(Evaluate, RandomInitNearChance) {
  const auto pool = datagen::make_classification_pool(2, 4, 200, 2.0, 5);
  // A single draw can align with the classes by luck; the average over draws cannot.
  double mean = 0.0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) mean += evaluate(init_model(4, 2, seed), pool).accuracy;
  EXPECT_NEAR(mean / 200.0, 0.5, 0.05);
  EXPECT_EQ(evaluate(init_model(4, 2, 5), pool).accuracy, evaluate(init_model(4, 2, 5), pool).accuracy);
}

TEST(Evaluate, EmptySet) {
  LocalDataset empty;
  empty.n_classes = 2;
  empty.features = Matrix(0, 2);
  try {
    evaluate(init_model(2, 2, 1), empty);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::empty_dataset);
  }
}

TEST(FedAvg, Anchors) {
  const std::vector<Update> one{make_update(1, {0.3, -0.7}, 5)};
  EXPECT_EQ(aggregate_fedavg(one).weights, one[0].params.weights);

  const std::vector<Update> two{make_update(1, {1, 1}, 4), make_update(2, {3, 3}, 4)};
  EXPECT_EQ(aggregate_fedavg(two).weights, (std::vector<double>{2, 2}));

  const std::vector<Update> skew{make_update(1, {1, 0}, 1), make_update(2, {3, 0}, 3)};
  EXPECT_NEAR(aggregate_fedavg(skew).weights[0], 2.5, 1e-12);
}

TEST(FedAvg, Errors) {
  try {
    aggregate_fedavg({});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::no_updates);
  }
  const std::vector<Update> mismatch{make_update(1, {1, 1}, 1), make_update(2, {1, 1, 1}, 1)};
  try {
    aggregate_fedavg(mismatch);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::shape_mismatch);
  }
}

TEST(FedAvg, ConvexAndOrderInvariant) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Update> ups;
    for (int i = 0; i < 6; ++i) {
      ups.push_back(make_update(i, {n(rng), n(rng), n(rng)}, 1 + rng() % 50));
    }
    const auto agg = aggregate_fedavg(ups);
    for (std::size_t p = 0; p < 3; ++p) {
      double lo = 1e300, hi = -1e300;
      for (const auto& u : ups) {
        lo = std::min(lo, u.params.weights[p]);
        hi = std::max(hi, u.params.weights[p]);
      }
      EXPECT_GE(agg.weights[p], lo - 1e-12);
      EXPECT_LE(agg.weights[p], hi + 1e-12);
    }
    std::shuffle(ups.begin(), ups.end(), rng);
    EXPECT_EQ(aggregate_fedavg(ups).weights, agg.weights);  // bitwise
  }
}

TEST(LossWeighted, ReducesToFedAvgAtQZero) {
  const std::vector<Update> ups{make_update(1, {0.1, 0.2}, 3, 0.5), make_update(2, {0.7, -1}, 9, 2.0),
                                make_update(3, {2, 2}, 1, 0.0)};
  EXPECT_EQ(aggregate_loss_weighted(ups, 0.0).weights, aggregate_fedavg(ups).weights);
}

TEST(LossWeighted, Anchors) {
  const std::vector<Update> ups{make_update(1, {0, 0}, 5, 1.0), make_update(2, {3, 0}, 5, 2.0)};
  EXPECT_NEAR(aggregate_loss_weighted(ups, 1.0).weights[0], 2.0, 1e-12);
  const std::vector<Update> one{make_update(4, {1.25, -3}, 2, 0.3)};
  EXPECT_EQ(aggregate_loss_weighted(one, 3.0).weights, one[0].params.weights);
  const std::vector<Update> zero{make_update(1, {1, 0}, 5, 0.0), make_update(2, {2, 0}, 5, 0.0)};
  try {
    aggregate_loss_weighted(zero, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::degenerate_weights);
  }
}

}  // namespace
}  // namespace feel::learning
