#include "feel/learning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "feel/random.hpp"

namespace feel::learning {
namespace {

void check_compatible(const ModelParams& model, const LocalDataset& data) {
  if (data.task_kind != TaskKind::classification) {
    throw Error(Errc::invalid_argument, "the linear model trains on classification data only");
  }
  if (model.weights.size() != model.shape.n_params() || data.features.cols != model.shape.dim) {
    throw Error(Errc::shape_mismatch, "model shape does not match data");
  }
}

// logits = x^T W + b, then an in-place log-softmax.
void log_softmax_row(const ModelParams& model, std::span<const double> x,
                       std::span<double> logits) {
  const std::size_t k = model.shape.n_classes;
  const std::size_t d = model.shape.dim;
  const double* w = model.weights.data();
  const double* b = w + d * k;
  for (std::size_t c = 0; c < k; ++c) logits[c] = b[c];
  for (std::size_t j = 0; j < d; ++j) {
    const double xj = x[j];
    const double* wj = w + j * k;
    for (std::size_t c = 0; c < k; ++c) logits[c] += xj * wj[c];
  }
  const double top = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double v : logits) sum += std::exp(v - top);
  const double log_norm = top + std::log(sum);
  for (double& v : logits) v -= log_norm;
}

ModelParams weighted_average(std::span<const Update> updates, std::span<const double> raw) {
  // Fixed reduction order: ascending device id.
  std::vector<std::size_t> order(updates.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return updates[a].device_id < updates[b].device_id;
  });

  double total = 0.0;
  for (std::size_t i : order) total += raw[i];
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw Error(Errc::degenerate_weights, "aggregation weights sum to zero");
  }

  ModelParams out;
  out.shape = updates[order.front()].params.shape;
  out.weights.assign(updates[order.front()].params.weights.size(), 0.0);
  int round = 0;
  for (std::size_t i : order) {
    const double w = raw[i] / total;
    const auto& src = updates[i].params.weights;
    for (std::size_t p = 0; p < src.size(); ++p) out.weights[p] += w * src[p];
    round = std::max(round, updates[i].params.round);
  }
  out.round = round;
  out.source = std::nullopt;
  return out;
}

void check_updates(std::span<const Update> updates) {
  if (updates.empty()) throw Error(Errc::no_updates, "nothing to aggregate");
  const std::size_t len = updates.front().params.weights.size();
  for (const auto& u : updates) {
    if (u.params.weights.size() != len || !(u.params.shape == updates.front().params.shape)) {
      throw Error(Errc::shape_mismatch, "update from device " + std::to_string(u.device_id));
    }
  }
}

}  // namespace

Status TrainConfig::validate() const {
  if (epochs < 1) return {Errc::invalid_config, "epochs must be >= 1"};
  if (batch_size < 1) return {Errc::invalid_config, "batch_size must be >= 1"};
  if (!(learning_rate >= 0.0)) return {Errc::invalid_config, "learning_rate must be >= 0"};
  if (!(l2_reg >= 0.0)) return {Errc::invalid_config, "l2_reg must be >= 0"};
  return Status::Ok();
}

ModelParams init_model(std::size_t dim, std::size_t n_classes, std::uint64_t seed) {
  if (dim < 1 || n_classes < 1) throw Error(Errc::invalid_argument, "dim, n_classes >= 1");
  ModelParams model;
  model.shape = {dim, n_classes};
  model.weights.assign(model.shape.n_params(), 0.0);
  const double s = 1.0 / std::sqrt(static_cast<double>(dim));
  Rng rng = make_rng(seed, {tag(Stream::model_init)});
  std::uniform_real_distribution<double> u(-s, s);
  for (std::size_t i = 0; i < dim * n_classes; ++i) model.weights[i] = u(rng);
  return model;
}

double loss_and_gradient(const ModelParams& model, const LocalDataset& data,
                         std::span<const std::size_t> rows, double l2_reg,
                         std::span<double> grad) {
  check_compatible(model, data);
  const std::size_t k = model.shape.n_classes;
  const std::size_t d = model.shape.dim;
  const bool want_grad = !grad.empty();
  if (want_grad) {
    if (grad.size() != model.weights.size()) throw Error(Errc::shape_mismatch, "gradient buffer");
    std::fill(grad.begin(), grad.end(), 0.0);
  }
  if (rows.empty()) return 0.0;

  std::vector<double> logp(k);
  double loss = 0.0;
  const double inv_n = 1.0 / static_cast<double>(rows.size());
  for (std::size_t r : rows) {
    const auto x = data.features.row(r);
    const auto label = static_cast<std::size_t>(data.labels[r]);
    log_softmax_row(model, x, logp);
    loss -= logp[label];
    if (!want_grad) continue;
    // d(-log p_y)/d logit_c = p_c - [c == y]
    for (std::size_t c = 0; c < k; ++c) {
      const double delta = (std::exp(logp[c]) - (c == label ? 1.0 : 0.0)) * inv_n;
      for (std::size_t j = 0; j < d; ++j) grad[j * k + c] += delta * x[j];
      grad[d * k + c] += delta;
    }
  }
  loss *= inv_n;

  if (l2_reg > 0.0) {
    double sq = 0.0;
    for (std::size_t i = 0; i < d * k; ++i) {
      sq += model.weights[i] * model.weights[i];
      if (want_grad) grad[i] += l2_reg * model.weights[i];
    }
    loss += 0.5 * l2_reg * sq;
  }
  return loss;
}

Update local_train(const ModelParams& model, const LocalDataset& data, const TrainConfig& cfg,
                   DeviceId device_id) {
  cfg.validate().throw_if_error();
  if (data.n_samples() == 0) throw Error(Errc::empty_dataset, "no local samples");
  check_compatible(model, data);

  ModelParams params = model;
  params.source = device_id;
  std::vector<std::size_t> order(data.n_samples());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> grad(params.weights.size());
  const auto batch = static_cast<std::size_t>(cfg.batch_size);

  if (cfg.learning_rate > 0.0) {
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      Rng rng = make_rng(cfg.seed, {tag(Stream::training), static_cast<std::uint64_t>(epoch)});
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t start = 0; start < order.size(); start += batch) {
        const std::size_t len = std::min(batch, order.size() - start);
        loss_and_gradient(params, data, std::span(order).subspan(start, len), cfg.l2_reg, grad);
        for (std::size_t p = 0; p < grad.size(); ++p) params.weights[p] -= cfg.learning_rate * grad[p];
      }
    }
  }

  std::vector<std::size_t> all(data.n_samples());
  std::iota(all.begin(), all.end(), std::size_t{0});
  Update update;
  update.final_loss = loss_and_gradient(params, data, all, 0.0, {});
  update.params = std::move(params);
  update.n_samples = data.n_samples();
  update.device_id = device_id;
  return update;
}

Evaluation evaluate(const ModelParams& model, const LocalDataset& test) {
  if (test.n_samples() == 0) throw Error(Errc::empty_dataset, "empty evaluation set");
  check_compatible(model, test);
  std::vector<double> logp(model.shape.n_classes);
  std::size_t hits = 0;
  double loss = 0.0;
  for (std::size_t r = 0; r < test.n_samples(); ++r) {
    log_softmax_row(model, test.features.row(r), logp);
    const auto label = static_cast<std::size_t>(test.labels[r]);
    loss -= logp[label];
    const auto best = static_cast<std::size_t>(
        std::distance(logp.begin(), std::max_element(logp.begin(), logp.end())));
    if (best == label) ++hits;
  }
  const double n = static_cast<double>(test.n_samples());
  return {static_cast<double>(hits) / n, loss / n};
}

ModelParams aggregate_fedavg(std::span<const Update> updates) {
  check_updates(updates);
  std::vector<double> raw;
  raw.reserve(updates.size());
  for (const auto& u : updates) raw.push_back(static_cast<double>(u.n_samples));
  return weighted_average(updates, raw);
}

ModelParams aggregate_loss_weighted(std::span<const Update> updates, double q) {
  if (!(q >= 0.0)) throw Error(Errc::invalid_argument, "q must be >= 0");
  check_updates(updates);
  std::vector<double> raw;
  raw.reserve(updates.size());
  for (const auto& u : updates) {
    raw.push_back(static_cast<double>(u.n_samples) * std::pow(u.final_loss, q));
  }
  return weighted_average(updates, raw);
}

}  // namespace feel::learning
