#pragma once

// Accuracy probe: predicts the success probability of a (query, strategy)
// pair. Features are the query embedding plus contextual descriptors of the
// strategy; the model is a two-hidden-layer MLP (200-200-1, exact-Phi GELU)
// trained on soft labels with binary cross-entropy and Adam, early-stopped on
// validation loss, then Platt-scaled on a held-out calibration split.
//
// Training is single-threaded and bit-reproducible given (seed, data order);
// prediction is pure and thread-safe.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "itsr/errors.hpp"
#include "itsr/metrics.hpp"
#include "itsr/rng.hpp"
#include "itsr/simworld.hpp"
#include "itsr/strategy.hpp"

namespace itsr {

// Feature layout: embedding (E) ++ [n, width-or-0, depth-or-0, query_len]
// ++ method flags [beam, best-of-n, majority, naive, weighted].
inline constexpr int kContextualFeatures = 4;
inline constexpr int kMethodFlagFeatures = 5;

inline int feature_dim(int embedding_dim) {
  return embedding_dim + kContextualFeatures + kMethodFlagFeatures;
}

inline std::vector<double> assemble_features(const QueryInstance& query,
                                             const Strategy& strategy) {
  std::vector<double> f;
  f.reserve(query.embedding.size() + kContextualFeatures + kMethodFlagFeatures);
  f.insert(f.end(), query.embedding.begin(), query.embedding.end());
  f.push_back(static_cast<double>(strategy.n));
  f.push_back(static_cast<double>(strategy.width.value_or(0)));
  f.push_back(static_cast<double>(strategy.depth.value_or(0)));
  f.push_back(static_cast<double>(query.query_len));
  const bool bon = strategy.method == Method::BestOfNNaive ||
                   strategy.method == Method::BestOfNWeighted;
  f.push_back(strategy.method == Method::BeamSearch ? 1.0 : 0.0);
  f.push_back(bon ? 1.0 : 0.0);
  f.push_back(strategy.method == Method::MajorityVote ? 1.0 : 0.0);
  f.push_back(strategy.method == Method::BestOfNNaive ? 1.0 : 0.0);
  f.push_back(strategy.method == Method::BestOfNWeighted ? 1.0 : 0.0);
  return f;
}

// Exact Gaussian-CDF GELU, x * Phi(x).
inline double gelu(double x) { return x * 0.5 * std::erfc(-x * 0.70710678118654752440); }

inline double gelu_grad(double x) {
  const double phi_cdf = 0.5 * std::erfc(-x * 0.70710678118654752440);
  const double phi_pdf = 0.39894228040143267794 * std::exp(-0.5 * x * x);
  return phi_cdf + x * phi_pdf;
}

// Numerically stable BCE-with-logits and its logit gradient.
inline double bce_with_logits(double logit, double target) {
  const double softplus_neg =
      logit > 0.0 ? std::log1p(std::exp(-logit)) : -logit + std::log1p(std::exp(logit));
  return softplus_neg + (1.0 - target) * logit;
}

struct TrainConfig {
  double learning_rate = 1e-5;
  int max_epochs = 10;
  int patience = 1;
  int batch_size = 64;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("train.learning_rate must be > 0");
    if (max_epochs < 1) throw ConfigError("train.max_epochs must be >= 1");
    if (patience < 0) throw ConfigError("train.patience must be >= 0");
    if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  }
};

struct ProbeModel {
  int in_dim = 0;
  int hidden1 = 200;
  int hidden2 = 200;
  int embedding_dim = 0;  // feature layout descriptor

  std::vector<double> w1;  // hidden1 x in_dim, row-major
  std::vector<double> b1;  // hidden1
  std::vector<double> w2;  // hidden2 x hidden1, row-major
  std::vector<double> b2;  // hidden2
  std::vector<double> w3;  // hidden2
  double b3 = 0.0;

  std::vector<double> feature_means;
  std::vector<double> feature_stds;  // strictly positive

  double platt_a = 1.0;
  double platt_b = 0.0;
  bool trained = false;

  void check_shapes() const {
    const auto h1 = static_cast<std::size_t>(hidden1);
    const auto h2 = static_cast<std::size_t>(hidden2);
    const auto in = static_cast<std::size_t>(in_dim);
    if (in_dim < 1 || hidden1 < 1 || hidden2 < 1)
      throw ConfigError("probe: dimensions must be positive");
    if (w1.size() != h1 * in || b1.size() != h1 || w2.size() != h2 * h1 ||
        b2.size() != h2 || w3.size() != h2 || feature_means.size() != in ||
        feature_stds.size() != in) {
      throw ConfigError("probe: tensor shapes inconsistent with dimensions");
    }
    for (double s : feature_stds) {
      if (!(s > 0.0)) throw ConfigError("probe: feature_stds must be > 0");
    }
  }
};

namespace detail {

struct MlpScratch {
  std::vector<double> z;    // standardized input
  std::vector<double> a1;   // pre-activation 1
  std::vector<double> h1;   // gelu(a1)
  std::vector<double> a2;   // pre-activation 2
  std::vector<double> h2;   // gelu(a2)
  std::vector<double> da1;  // backward buffers
  std::vector<double> da2;

  void resize(const ProbeModel& m) {
    z.resize(static_cast<std::size_t>(m.in_dim));
    a1.resize(static_cast<std::size_t>(m.hidden1));
    h1.resize(static_cast<std::size_t>(m.hidden1));
    a2.resize(static_cast<std::size_t>(m.hidden2));
    h2.resize(static_cast<std::size_t>(m.hidden2));
    da1.resize(static_cast<std::size_t>(m.hidden1));
    da2.resize(static_cast<std::size_t>(m.hidden2));
  }
};

inline double forward_scratch(const ProbeModel& m, std::span<const double> features,
                              MlpScratch& s) {
  const auto in = static_cast<std::size_t>(m.in_dim);
  const auto h1n = static_cast<std::size_t>(m.hidden1);
  const auto h2n = static_cast<std::size_t>(m.hidden2);
  for (std::size_t j = 0; j < in; ++j) {
    s.z[j] = (features[j] - m.feature_means[j]) / m.feature_stds[j];
  }
  for (std::size_t i = 0; i < h1n; ++i) {
    const double* row = m.w1.data() + i * in;
    double acc = m.b1[i];
    for (std::size_t j = 0; j < in; ++j) acc += row[j] * s.z[j];
    s.a1[i] = acc;
    s.h1[i] = gelu(acc);
  }
  for (std::size_t i = 0; i < h2n; ++i) {
    const double* row = m.w2.data() + i * h1n;
    double acc = m.b2[i];
    for (std::size_t j = 0; j < h1n; ++j) acc += row[j] * s.h1[j];
    s.a2[i] = acc;
    s.h2[i] = gelu(acc);
  }
  double logit = m.b3;
  for (std::size_t i = 0; i < h2n; ++i) logit += m.w3[i] * s.h2[i];
  return logit;
}

}  // namespace detail

// Raw (pre-Platt) logit for an assembled feature vector.
inline double forward(const ProbeModel& model, std::span<const double> features) {
  model.check_shapes();
  if (features.size() != static_cast<std::size_t>(model.in_dim)) {
    throw std::invalid_argument("forward: feature dimension mismatch, expected " +
                                std::to_string(model.in_dim) + " got " +
                                std::to_string(features.size()));
  }
  detail::MlpScratch s;
  s.resize(model);
  return detail::forward_scratch(model, features, s);
}

struct ProbeGradients {
  std::vector<double> w1, b1, w2, b2, w3;
  double b3 = 0.0;

  void resize_zero(const ProbeModel& m) {
    w1.assign(static_cast<std::size_t>(m.hidden1) * static_cast<std::size_t>(m.in_dim), 0.0);
    b1.assign(static_cast<std::size_t>(m.hidden1), 0.0);
    w2.assign(static_cast<std::size_t>(m.hidden2) * static_cast<std::size_t>(m.hidden1), 0.0);
    b2.assign(static_cast<std::size_t>(m.hidden2), 0.0);
    w3.assign(static_cast<std::size_t>(m.hidden2), 0.0);
    b3 = 0.0;
  }
};

// Mean BCE-with-logits loss over a batch of raw feature rows.
inline double batch_loss(const ProbeModel& model,
                         std::span<const std::vector<double>> features,
                         std::span<const double> labels) {
  if (features.empty() || features.size() != labels.size()) {
    throw std::invalid_argument("batch_loss: empty or mismatched batch");
  }
  detail::MlpScratch s;
  s.resize(model);
  double total = 0.0;
  for (std::size_t r = 0; r < features.size(); ++r) {
    total += bce_with_logits(detail::forward_scratch(model, features[r], s), labels[r]);
  }
  return total / static_cast<double>(features.size());
}

// Mean loss plus mean gradients for every parameter tensor.
inline double batch_loss_and_gradients(const ProbeModel& model,
                                       std::span<const std::vector<double>> features,
                                       std::span<const double> labels,
                                       ProbeGradients& grads) {
  if (features.empty() || features.size() != labels.size()) {
    throw std::invalid_argument("batch_loss_and_gradients: empty or mismatched batch");
  }
  const auto in = static_cast<std::size_t>(model.in_dim);
  const auto h1n = static_cast<std::size_t>(model.hidden1);
  const auto h2n = static_cast<std::size_t>(model.hidden2);
  grads.resize_zero(model);
  detail::MlpScratch s;
  s.resize(model);

  const double inv_batch = 1.0 / static_cast<double>(features.size());
  double total = 0.0;
  for (std::size_t r = 0; r < features.size(); ++r) {
    const double logit = detail::forward_scratch(model, features[r], s);
    const double y = labels[r];
    total += bce_with_logits(logit, y);

    const double dlogit = (sigmoid(logit) - y) * inv_batch;
    grads.b3 += dlogit;
    for (std::size_t i = 0; i < h2n; ++i) {
      grads.w3[i] += dlogit * s.h2[i];
      s.da2[i] = dlogit * model.w3[i] * gelu_grad(s.a2[i]);
    }
    std::fill(s.da1.begin(), s.da1.end(), 0.0);
    for (std::size_t i = 0; i < h2n; ++i) {
      const double d = s.da2[i];
      if (d == 0.0) continue;
      double* grow = grads.w2.data() + i * h1n;
      const double* wrow = model.w2.data() + i * h1n;
      for (std::size_t j = 0; j < h1n; ++j) {
        grow[j] += d * s.h1[j];
        s.da1[j] += d * wrow[j];
      }
      grads.b2[i] += d;
    }
    for (std::size_t i = 0; i < h1n; ++i) {
      const double d = s.da1[i] * gelu_grad(s.a1[i]);
      if (d == 0.0) continue;
      double* grow = grads.w1.data() + i * in;
      for (std::size_t j = 0; j < in; ++j) grow[j] += d * s.z[j];
      grads.b1[i] += d;
    }
  }
  return total * inv_batch;
}

namespace detail {

struct AdamState {
  ProbeGradients m;
  ProbeGradients v;
  std::int64_t t = 0;
};

inline void adam_tensor_step(std::span<double> param, std::span<const double> grad,
                             std::span<double> m, std::span<double> v,
                             const TrainConfig& cfg, double bias1, double bias2) {
  for (std::size_t i = 0; i < param.size(); ++i) {
    m[i] = cfg.adam_beta1 * m[i] + (1.0 - cfg.adam_beta1) * grad[i];
    v[i] = cfg.adam_beta2 * v[i] + (1.0 - cfg.adam_beta2) * grad[i] * grad[i];
    const double m_hat = m[i] / bias1;
    const double v_hat = v[i] / bias2;
    param[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.adam_eps);
  }
}

inline void adam_step(ProbeModel& model, const ProbeGradients& g, AdamState& state,
                      const TrainConfig& cfg) {
  ++state.t;
  const double bias1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(state.t));
  const double bias2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(state.t));
  adam_tensor_step(model.w1, g.w1, state.m.w1, state.v.w1, cfg, bias1, bias2);
  adam_tensor_step(model.b1, g.b1, state.m.b1, state.v.b1, cfg, bias1, bias2);
  adam_tensor_step(model.w2, g.w2, state.m.w2, state.v.w2, cfg, bias1, bias2);
  adam_tensor_step(model.b2, g.b2, state.m.b2, state.v.b2, cfg, bias1, bias2);
  adam_tensor_step(model.w3, g.w3, state.m.w3, state.v.w3, cfg, bias1, bias2);
  std::span<double> b3(&model.b3, 1);
  std::span<const double> gb3(&g.b3, 1);
  std::span<double> mb3(&state.m.b3, 1);
  std::span<double> vb3(&state.v.b3, 1);
  adam_tensor_step(b3, gb3, mb3, vb3, cfg, bias1, bias2);
}

inline void init_layer(std::span<double> tensor, int fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (double& w : tensor) w = rng.uniform(-bound, bound);
}

}  // namespace detail

// Freshly initialized, untrained model with identity standardization.
inline ProbeModel init_probe(int in_dim, std::uint64_t seed, int hidden1 = 200,
                             int hidden2 = 200) {
  if (in_dim < 1) throw std::invalid_argument("init_probe: in_dim must be >= 1");
  ProbeModel m;
  m.in_dim = in_dim;
  m.hidden1 = hidden1;
  m.hidden2 = hidden2;
  m.w1.resize(static_cast<std::size_t>(hidden1) * static_cast<std::size_t>(in_dim));
  m.b1.resize(static_cast<std::size_t>(hidden1));
  m.w2.resize(static_cast<std::size_t>(hidden2) * static_cast<std::size_t>(hidden1));
  m.b2.resize(static_cast<std::size_t>(hidden2));
  m.w3.resize(static_cast<std::size_t>(hidden2));
  m.feature_means.assign(static_cast<std::size_t>(in_dim), 0.0);
  m.feature_stds.assign(static_cast<std::size_t>(in_dim), 1.0);
  Rng rng(derive_seed(seed, 0x70726f6265ULL));
  detail::init_layer(m.w1, in_dim, rng);
  detail::init_layer(m.b1, in_dim, rng);
  detail::init_layer(m.w2, hidden1, rng);
  detail::init_layer(m.b2, hidden1, rng);
  detail::init_layer(m.w3, hidden2, rng);
  std::span<double> b3(&m.b3, 1);
  detail::init_layer(b3, hidden2, rng);
  return m;
}

// Train on soft labels with Adam + early stopping; returns the snapshot with
// the best validation loss (the untrained initialization counts as a
// candidate, so the result never validates worse than where it started).
// patience = k stops after k consecutive non-improving epochs; patience = 0
// stops after the first epoch.
inline ProbeModel train_probe(std::span<const TraceRecord> train_records,
                              std::span<const TraceRecord> val_records,
                              const TrainConfig& cfg, int embedding_dim = 0,
                              int hidden1 = 200, int hidden2 = 200) {
  cfg.validate();
  if (train_records.empty() || val_records.empty()) {
    throw std::invalid_argument("train_probe: train and validation must be nonempty");
  }
  const std::size_t in = train_records.front().features.size();
  if (in == 0) throw std::invalid_argument("train_probe: empty feature vectors");
  for (const auto& rec : train_records) {
    if (rec.features.size() != in) {
      throw std::invalid_argument("train_probe: inconsistent feature dimension");
    }
  }
  for (const auto& rec : val_records) {
    if (rec.features.size() != in) {
      throw std::invalid_argument("train_probe: inconsistent feature dimension");
    }
  }

  std::vector<std::vector<double>> x_train;
  std::vector<double> y_train;
  x_train.reserve(train_records.size());
  y_train.reserve(train_records.size());
  for (const auto& rec : train_records) {
    x_train.push_back(rec.features);
    y_train.push_back(rec.soft_label);
  }
  std::vector<std::vector<double>> x_val;
  std::vector<double> y_val;
  x_val.reserve(val_records.size());
  y_val.reserve(val_records.size());
  for (const auto& rec : val_records) {
    x_val.push_back(rec.features);
    y_val.push_back(rec.soft_label);
  }

  ProbeModel model = init_probe(static_cast<int>(in), cfg.seed, hidden1, hidden2);
  model.embedding_dim = embedding_dim > 0
                            ? embedding_dim
                            : static_cast<int>(in) - kContextualFeatures -
                                  kMethodFlagFeatures;

  // Standardization stats from the training split; zero-variance gets std 1.
  for (std::size_t j = 0; j < in; ++j) {
    double mean = 0.0;
    for (const auto& row : x_train) mean += row[j];
    mean /= static_cast<double>(x_train.size());
    double var = 0.0;
    for (const auto& row : x_train) {
      const double d = row[j] - mean;
      var += d * d;
    }
    var /= static_cast<double>(x_train.size());
    model.feature_means[j] = mean;
    model.feature_stds[j] = var > 0.0 ? std::sqrt(var) : 1.0;
  }

  ProbeModel best = model;
  double best_val = batch_loss(model, x_val, y_val);

  Rng shuffle_rng(derive_seed(cfg.seed, 0x73687566666cULL));
  std::vector<std::size_t> order(x_train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  detail::AdamState adam;
  adam.m.resize_zero(model);
  adam.v.resize_zero(model);
  ProbeGradients grads;
  std::vector<std::vector<double>> batch_x;
  std::vector<double> batch_y;

  int bad_epochs = 0;
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    // Fisher-Yates with the seeded stream; the only shuffling in training.
    for (std::size_t i = order.size(); i-- > 1;) {
      const std::size_t j = shuffle_rng.uniform_index(i + 1);
      std::swap(order[i], order[j]);
    }
    const auto batch = static_cast<std::size_t>(cfg.batch_size);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(start + batch, order.size());
      batch_x.clear();
      batch_y.clear();
      for (std::size_t k = start; k < end; ++k) {
        batch_x.push_back(x_train[order[k]]);
        batch_y.push_back(y_train[order[k]]);
      }
      const double loss = batch_loss_and_gradients(model, batch_x, batch_y, grads);
      if (!std::isfinite(loss)) {
        throw TrainingDivergenceError("train_probe: non-finite training loss at epoch " +
                                      std::to_string(epoch + 1));
      }
      detail::adam_step(model, grads, adam, cfg);
    }

    const double val_loss = batch_loss(model, x_val, y_val);
    if (!std::isfinite(val_loss)) {
      throw TrainingDivergenceError("train_probe: non-finite validation loss");
    }
    if (val_loss < best_val) {
      best_val = val_loss;
      best = model;
      bad_epochs = 0;
    } else {
      ++bad_epochs;
    }
    if (bad_epochs >= cfg.patience) break;
  }

  best.trained = true;
  return best;
}

inline double batch_loss_records(const ProbeModel& model,
                                 std::span<const TraceRecord> records) {
  if (records.empty()) throw std::invalid_argument("batch_loss_records: empty input");
  detail::MlpScratch s;
  s.resize(model);
  double total = 0.0;
  for (const auto& rec : records) {
    if (rec.features.size() != static_cast<std::size_t>(model.in_dim)) {
      throw std::invalid_argument("batch_loss_records: feature dimension mismatch");
    }
    total += bce_with_logits(detail::forward_scratch(model, rec.features, s),
                             rec.soft_label);
  }
  return total / static_cast<double>(records.size());
}

struct CalibrationResult {
  ProbeModel model;
  bool degenerate = false;  // all labels equal; Platt left at identity
  double ece_before = 0.0;
  double ece_after = 0.0;
};

namespace detail {

inline double platt_objective(std::span<const double> logits,
                              std::span<const double> labels, double a, double b) {
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    total += bce_with_logits(a * logits[i] + b, labels[i]);
  }
  return total / static_cast<double>(logits.size());
}

}  // namespace detail

// Fit (platt_a, platt_b) by Newton iteration on the calibration BCE.
// The problem is convex in (a, b); a tiny ridge keeps the Hessian invertible
// when the logits are degenerate (e.g. all equal).
inline CalibrationResult calibrate(const ProbeModel& model,
                                   std::span<const TraceRecord> records) {
  if (!model.trained) throw StateError("calibrate: model is not trained");
  if (records.empty()) throw std::invalid_argument("calibrate: empty calibration set");

  CalibrationResult result;
  result.model = model;

  std::vector<double> logits;
  std::vector<double> labels;
  logits.reserve(records.size());
  labels.reserve(records.size());
  for (const auto& rec : records) {
    logits.push_back(forward(model, rec.features));
    labels.push_back(rec.soft_label);
  }

  std::vector<double> before;
  before.reserve(logits.size());
  for (const double l : logits) before.push_back(sigmoid(l));
  result.ece_before = expected_calibration_error(before, labels);

  const auto [lo, hi] = std::minmax_element(labels.begin(), labels.end());
  if (*lo == *hi) {
    result.model.platt_a = 1.0;
    result.model.platt_b = 0.0;
    result.degenerate = true;
    result.ece_after = result.ece_before;
    return result;
  }

  double a = 1.0;
  double b = 0.0;
  const double n = static_cast<double>(logits.size());
  const double ridge = 1e-9;
  for (int iter = 0; iter < 200; ++iter) {
    double ga = 0.0, gb = 0.0, haa = ridge, hab = 0.0, hbb = ridge;
    for (std::size_t i = 0; i < logits.size(); ++i) {
      const double l = logits[i];
      const double p = sigmoid(a * l + b);
      const double r = p - labels[i];
      const double w = p * (1.0 - p);
      ga += r * l;
      gb += r;
      haa += w * l * l;
      hab += w * l;
      hbb += w;
    }
    ga /= n;
    gb /= n;
    haa /= n;
    hab /= n;
    hbb /= n;
    if (std::sqrt(ga * ga + gb * gb) < 1e-8) break;
    const double det = haa * hbb - hab * hab;
    double da = (hbb * ga - hab * gb) / det;
    double db = (haa * gb - hab * ga) / det;
    // Backtracking keeps Newton inside the convex basin.
    double step = 1.0;
    const double before = detail::platt_objective(logits, labels, a, b);
    while (step > 1e-6 &&
           detail::platt_objective(logits, labels, a - step * da, b - step * db) >
               before) {
      step *= 0.5;
    }
    a -= step * da;
    b -= step * db;
  }
  result.model.platt_a = a;
  result.model.platt_b = b;
  std::vector<double> after;
  after.reserve(logits.size());
  for (const double l : logits) after.push_back(sigmoid(a * l + b));
  result.ece_after = expected_calibration_error(after, labels);
  return result;
}

// Calibrated success probability, strictly inside (0, 1).
inline double predict(const ProbeModel& model, const QueryInstance& query,
                      const Strategy& strategy) {
  if (!model.trained) throw StateError("predict: model is not trained");
  const std::vector<double> features = assemble_features(query, strategy);
  const double logit = forward(model, features);
  const double p = sigmoid(model.platt_a * logit + model.platt_b);
  return std::clamp(p, std::numeric_limits<double>::min(),
                    std::nextafter(1.0, 0.0));
}

}  // namespace itsr
