#pragma once

// Shared model (multinomial logistic regression), local SGD training,
// evaluation, and the synchronous aggregation rules.

#include <cstdint>
#include <span>
#include <vector>

#include "feel/domain.hpp"

namespace feel::learning {

struct TrainConfig {
  int epochs = 1;
  int batch_size = 16;
  double learning_rate = 0.1;
  double l2_reg = 0.0;
  std::uint64_t seed = 0;

  Status validate() const;
};

struct Update {
  ModelParams params;
  std::size_t n_samples = 0;
  double final_loss = 0.0;
  DeviceId device_id = 0;
};

/// Weights ~ U(-1/sqrt(dim), 1/sqrt(dim)), biases zero.
ModelParams init_model(std::size_t dim, std::size_t n_classes, std::uint64_t seed);

/// Mean softmax cross-entropy over `rows` plus l2_reg * ||W||^2 / 2 (biases
/// unregularized). Writes the gradient into `grad` when it is non-empty.
double loss_and_gradient(const ModelParams& model, const LocalDataset& data,
                         std::span<const std::size_t> rows, double l2_reg,
                         std::span<double> grad);

/// Mini-batch SGD with a fresh seeded shuffle per epoch. `model` is not
/// modified; final_loss is the mean cross-entropy on `data` after training.
Update local_train(const ModelParams& model, const LocalDataset& data, const TrainConfig& cfg,
                   DeviceId device_id = 0);

struct Evaluation {
  double accuracy = 0.0;
  double loss = 0.0;
};

Evaluation evaluate(const ModelParams& model, const LocalDataset& test);

/// Data-volume weighted average; reduction runs in ascending device id order.
ModelParams aggregate_fedavg(std::span<const Update> updates);

/// Weights proportional to n_k * loss_k^q; q = 0 reproduces aggregate_fedavg.
ModelParams aggregate_loss_weighted(std::span<const Update> updates, double q);

}  // namespace feel::learning
