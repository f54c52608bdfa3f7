#pragma once

// Multi-head logistic regression trained by full-batch gradient descent.
// Shared by the video-level candidate generator and the per-class baseline.

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "ccrl/matrix.hpp"

namespace ccrl {

inline double sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
inline double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

// Binary cross entropy of a logit: -[y log s(z) + (1-y) log(1 - s(z))].
inline double logit_bce(double z, double y) { return softplus(z) - y * z; }

// One labelled (input row, head) pair contributing weight * BCE to the objective.
struct HeadExample {
  std::size_t input = 0;
  std::size_t head = 0;
  double target = 0.0;
  double weight = 1.0;
};

struct LogisticHeads {
  Matrix weights;  // heads x d
  std::vector<double> bias;

  LogisticHeads() = default;
  LogisticHeads(std::size_t heads, std::size_t d) : weights(heads, d), bias(heads, 0.0) {}

  std::size_t heads() const { return weights.rows(); }
  std::size_t dim() const { return weights.cols(); }

  double logit(std::size_t head, std::span<const double> x) const {
    return dot(weights.row(head), x) + bias[head];
  }
  double predict(std::size_t head, std::span<const double> x) const { return sigmoid(logit(head, x)); }

  bool finite() const {
    for (double w : weights.data()) {
      if (!std::isfinite(w)) return false;
    }
    for (double b : bias) {
      if (!std::isfinite(b)) return false;
    }
    return true;
  }

  bool operator==(const LogisticHeads&) const = default;
};

// Objective: sum_i weight_i * BCE_i + (l2 / 2) * ||W||^2 (bias unpenalized).
inline double logistic_objective(const LogisticHeads& model, const Matrix& inputs,
                                 std::span<const HeadExample> examples, double l2) {
  double loss = 0.0;
  for (const auto& e : examples) {
    loss += e.weight * logit_bce(model.logit(e.head, inputs.row(e.input)), e.target);
  }
  double sq = 0.0;
  for (double w : model.weights.data()) sq += w * w;
  return loss + 0.5 * l2 * sq;
}

// Analytic gradient of logistic_objective; returns the objective value.
inline double logistic_gradient(const LogisticHeads& model, const Matrix& inputs,
                                std::span<const HeadExample> examples, double l2,
                                LogisticHeads& grad) {
  grad = LogisticHeads(model.heads(), model.dim());
  double loss = 0.0;
  for (const auto& e : examples) {
    const auto x = inputs.row(e.input);
    const double z = model.logit(e.head, x);
    loss += e.weight * logit_bce(z, e.target);
    const double r = e.weight * (sigmoid(z) - e.target);
    auto g = grad.weights.row(e.head);
    for (std::size_t j = 0; j < x.size(); ++j) {
      g[j] += r * x[j];
    }
    grad.bias[e.head] += r;
  }
  double sq = 0.0;
  const auto w = model.weights.data();
  auto gw = grad.weights.data();
  for (std::size_t i = 0; i < w.size(); ++i) {
    sq += w[i] * w[i];
    gw[i] += l2 * w[i];
  }
  return loss + 0.5 * l2 * sq;
}

struct LogisticTrainOptions {
  int epochs = 300;
  double learning_rate = 1.0;
  double l2 = 0.0;
};

// Zero-initialized full-batch gradient descent. `loss_history`, when given,
// receives the objective before each step and after the final one.
inline LogisticHeads train_logistic_heads(std::size_t heads, const Matrix& inputs,
                                          std::span<const HeadExample> examples,
                                          const LogisticTrainOptions& opts,
                                          std::vector<double>* loss_history = nullptr) {
  if (opts.epochs < 0) throw Error("epochs must be >= 0");
  if (!(opts.learning_rate > 0.0)) throw Error("learning_rate must be positive");
  if (!(opts.l2 >= 0.0)) throw Error("l2 must be nonnegative");

  LogisticHeads model(heads, inputs.cols());
  LogisticHeads grad;
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    const double loss = logistic_gradient(model, inputs, examples, opts.l2, grad);
    if (!std::isfinite(loss)) {
      throw Error("non-finite loss at epoch " + std::to_string(epoch) +
                  " (learning_rate too large?)");
    }
    if (loss_history) loss_history->push_back(loss);
    auto w = model.weights.data();
    const auto gw = grad.weights.data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      w[i] -= opts.learning_rate * gw[i];
    }
    for (std::size_t h = 0; h < heads; ++h) {
      model.bias[h] -= opts.learning_rate * grad.bias[h];
    }
  }
  const double final_loss = logistic_objective(model, inputs, examples, opts.l2);
  if (!std::isfinite(final_loss) || !model.finite()) {
    throw Error("non-finite loss after training (learning_rate too large?)");
  }
  if (loss_history) loss_history->push_back(final_loss);
  return model;
}

}  // namespace ccrl
