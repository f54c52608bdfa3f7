#pragma once

// Gradient-boosted regression trees for binary relevance, trained by Newton
// boosting on the logistic loss with exact greedy split search.
//
// Each round fits one tree to the per-row gradients g = p - y and hessians
// h = p (1 - p) of the current model. A split of a node's rows into L and R
// scores
//
//   gain = 1/2 [ G_L^2 / (H_L + lambda) + G_R^2 / (H_R + lambda)
//                - (G_L + G_R)^2 / (H_L + H_R + lambda) ]
//
// and a leaf outputs -G / (H + lambda). Numeric features are split at the
// midpoint between consecutive distinct sorted values (rows with value below
// the threshold go left). Categorical features are split by ordering the
// categories present at the node by G/H and trying every prefix; categories
// with an identical G/H ratio are kept on the same side, which loses nothing
// because the gain is convex along any such block and is therefore maximized
// at one of its ends. Ties between candidate splits keep the first one found,
// scanning features by increasing index and thresholds in increasing order.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "ccrl/logistic.hpp"
#include "ccrl/matrix.hpp"

namespace ccrl {

struct GbmHyper {
  int rounds = 200;
  int max_depth = 5;
  double learning_rate = 0.1;
  double lambda = 1.0;
  double min_child_weight = 1.0;
  // Training is fully deterministic; the seed is recorded for provenance only.
  std::uint64_t seed = 0;

  void validate() const {
    if (rounds < 0) throw Error("gbm: rounds must be >= 0");
    if (max_depth < 1) throw Error("gbm: max_depth must be >= 1");
    if (!(learning_rate > 0.0)) throw Error("gbm: learning_rate must be positive");
    if (!(lambda >= 0.0)) throw Error("gbm: lambda must be nonnegative");
    if (!(min_child_weight >= 0.0)) throw Error("gbm: min_child_weight must be nonnegative");
  }
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  bool categorical = false;
  double threshold = 0.0;
  std::vector<std::int64_t> left_categories;  // sorted; categorical splits only
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf output in logit units

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

inline std::int64_t category_of(double x) { return std::llround(x); }

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double eval(std::span<const double> x) const {
    int i = 0;
    while (!nodes[i].is_leaf()) {
      const auto& n = nodes[i];
      const double v = x[static_cast<std::size_t>(n.feature)];
      bool go_left = false;
      if (n.categorical) {
        go_left = std::binary_search(n.left_categories.begin(), n.left_categories.end(), category_of(v));
      } else {
        go_left = v < n.threshold;
      }
      i = go_left ? n.left : n.right;
    }
    return nodes[i].value;
  }

  bool operator==(const Tree&) const = default;
};

struct GbmModel {
  std::vector<Tree> trees;
  double learning_rate = 0.1;
  double base_logit = 0.0;
  std::size_t feature_count = 0;
  std::vector<std::size_t> categorical_features;

  double logit(std::span<const double> x) const {
    double s = 0.0;
    for (const auto& t : trees) s += t.eval(x);
    return base_logit + learning_rate * s;
  }

  bool operator==(const GbmModel&) const = default;
};

inline double predict_gbm(const GbmModel& model, std::span<const double> x) {
  if (x.size() != model.feature_count) {
    throw Error("predict_gbm: row has " + std::to_string(x.size()) + " features, model expects " +
                std::to_string(model.feature_count));
  }
  return sigmoid(model.logit(x));
}

// Mean binary cross entropy with predictions clamped to [1e-12, 1 - 1e-12].
inline double bce_loss(std::span<const double> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size()) {
    throw Error("bce_loss: " + std::to_string(predictions.size()) + " predictions vs " +
                std::to_string(labels.size()) + " labels");
  }
  if (predictions.empty()) {
    throw Error("bce_loss: empty input");
  }
  constexpr double eps = 1e-12;
  double sum = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double p = predictions[i];
    sum -= labels[i] ? std::log(std::max(p, eps)) : std::log(std::max(1.0 - p, eps));
  }
  return sum / static_cast<double>(predictions.size());
}

// First and second derivatives of the per-row logistic loss w.r.t. the logit.
inline void logistic_grad_hess(double logit, int label, double& g, double& h) {
  const double p = sigmoid(logit);
  g = p - static_cast<double>(label);
  h = p * (1.0 - p);
}

inline double split_gain(double gl, double hl, double gr, double hr, double lambda) {
  const double g = gl + gr;
  const double h = hl + hr;
  return 0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - g * g / (h + lambda));
}

struct SplitCandidate {
  bool valid = false;
  double gain = 0.0;
  std::size_t feature = 0;
  bool categorical = false;
  double threshold = 0.0;
  std::vector<std::int64_t> left_categories;
};

namespace detail {

inline void consider(SplitCandidate& best, double gain, std::size_t feature, bool categorical,
                     double threshold, const std::vector<std::int64_t>* cats) {
  if (!(gain > 0.0)) return;
  if (best.valid && !(gain > best.gain)) return;
  best.valid = true;
  best.gain = gain;
  best.feature = feature;
  best.categorical = categorical;
  best.threshold = threshold;
  if (cats) {
    best.left_categories = *cats;
    std::sort(best.left_categories.begin(), best.left_categories.end());
  } else {
    best.left_categories.clear();
  }
}

}  // namespace detail

namespace detail {

// Rows of one node, listed once per feature in ascending feature value, plus
// a final list in ascending row order used for every node total.
using SortedRows = std::vector<std::vector<std::size_t>>;

inline SortedRows sort_rows(const Matrix& x, std::span<const std::size_t> index) {
  std::vector<std::size_t> ordered(index.begin(), index.end());
  std::sort(ordered.begin(), ordered.end());
  SortedRows out(x.cols() + 1, ordered);
  for (std::size_t f = 0; f < x.cols(); ++f) {
    std::stable_sort(out[f].begin(), out[f].end(),
                     [&](std::size_t a, std::size_t b) { return x(a, f) < x(b, f); });
  }
  return out;
}

inline bool is_categorical(std::span<const std::size_t> categorical, std::size_t f) {
  return std::find(categorical.begin(), categorical.end(), f) != categorical.end();
}

inline SplitCandidate best_split_sorted(const Matrix& x, const SortedRows& sorted,
                                        std::span<const double> grad, std::span<const double> hess,
                                        const GbmHyper& hyper,
                                        std::span<const std::size_t> categorical) {
  SplitCandidate best;
  const auto& rows = sorted.back();
  const auto n = rows.size();
  double g_total = 0.0;
  double h_total = 0.0;
  for (auto i : rows) {
    g_total += grad[i];
    h_total += hess[i];
  }
  if (n < 2) return best;

  for (std::size_t f = 0; f < x.cols(); ++f) {
    if (!is_categorical(categorical, f)) {
      const auto& order = sorted[f];
      double gl = 0.0;
      double hl = 0.0;
      for (std::size_t k = 0; k + 1 < n; ++k) {
        gl += grad[order[k]];
        hl += hess[order[k]];
        const double lo = x(order[k], f);
        const double hi = x(order[k + 1], f);
        if (!(lo < hi)) continue;
        const double hr = h_total - hl;
        if (hl < hyper.min_child_weight || hr < hyper.min_child_weight) continue;
        double threshold = lo + (hi - lo) / 2.0;
        if (!(lo < threshold)) threshold = hi;
        consider(best, split_gain(gl, hl, g_total - gl, hr, hyper.lambda), f, false, threshold,
                 nullptr);
      }
      continue;
    }

    struct Stats {
      double g = 0.0;
      double h = 0.0;
    };
    std::map<std::int64_t, Stats> per_cat;
    for (auto i : rows) {
      auto& s = per_cat[category_of(x(i, f))];
      s.g += grad[i];
      s.h += hess[i];
    }
    if (per_cat.size() < 2) continue;

    // Categories with equal G/H move together; ordering by G/H makes the best
    // partition a prefix.
    struct Block {
      double ratio;
      double g = 0.0;
      double h = 0.0;
      std::vector<std::int64_t> cats;
    };
    // Within a block, summation follows (g, h) so results do not depend on
    // the numeric category labels.
    std::vector<std::tuple<double, double, double, std::int64_t>> ranked;
    for (const auto& [cat, s] : per_cat) {
      ranked.push_back({s.h > 0.0 ? s.g / s.h : 0.0, s.g, s.h, cat});
    }
    std::sort(ranked.begin(), ranked.end());
    std::vector<Block> blocks;
    for (const auto& entry : ranked) {
      const double ratio = std::get<0>(entry);
      const auto cat = std::get<3>(entry);
      if (blocks.empty() || blocks.back().ratio != ratio) {
        blocks.push_back({ratio});
      }
      auto& b = blocks.back();
      b.g += per_cat[cat].g;
      b.h += per_cat[cat].h;
      b.cats.push_back(cat);
    }
    double gl = 0.0;
    double hl = 0.0;
    std::vector<std::int64_t> left;
    for (std::size_t k = 0; k + 1 < blocks.size(); ++k) {
      gl += blocks[k].g;
      hl += blocks[k].h;
      left.insert(left.end(), blocks[k].cats.begin(), blocks[k].cats.end());
      const double hr = h_total - hl;
      if (hl < hyper.min_child_weight || hr < hyper.min_child_weight) continue;
      consider(best, split_gain(gl, hl, g_total - gl, hr, hyper.lambda), f, true, 0.0, &left);
    }
  }
  return best;
}

}  // namespace detail

// Best split of the rows `index` of X; invalid when no split has positive gain
// with both children meeting min_child_weight.
inline SplitCandidate find_best_split(const Matrix& x, std::span<const std::size_t> index,
                                      std::span<const double> grad, std::span<const double> hess,
                                      const GbmHyper& hyper,
                                      std::span<const std::size_t> categorical) {
  return detail::best_split_sorted(x, detail::sort_rows(x, index), grad, hess, hyper, categorical);
}

namespace detail {

inline bool goes_left(const TreeNode& node, double v) {
  return node.categorical ? std::binary_search(node.left_categories.begin(),
                                               node.left_categories.end(), category_of(v))
                          : v < node.threshold;
}

inline int grow(Tree& tree, const Matrix& x, SortedRows sorted, std::span<const double> grad,
                std::span<const double> hess, const GbmHyper& hyper,
                std::span<const std::size_t> categorical, int depth) {
  const int id = static_cast<int>(tree.nodes.size());
  tree.nodes.emplace_back();

  std::optional<SplitCandidate> split;
  if (depth < hyper.max_depth) {
    auto s = best_split_sorted(x, sorted, grad, hess, hyper, categorical);
    if (s.valid) split = std::move(s);
  }
  if (!split) {
    double g = 0.0;
    double h = 0.0;
    for (auto i : sorted.back()) {
      g += grad[i];
      h += hess[i];
    }
    tree.nodes[id].value = h + hyper.lambda > 0.0 ? -g / (h + hyper.lambda) : 0.0;
    return id;
  }

  TreeNode node;
  node.feature = static_cast<int>(split->feature);
  node.categorical = split->categorical;
  node.threshold = split->threshold;
  node.left_categories = split->left_categories;

  SortedRows left(sorted.size());
  SortedRows right(sorted.size());
  for (std::size_t f = 0; f < sorted.size(); ++f) {
    for (auto i : sorted[f]) {
      (goes_left(node, x(i, split->feature)) ? left[f] : right[f]).push_back(i);
    }
  }
  sorted.clear();
  sorted.shrink_to_fit();
  node.left = grow(tree, x, std::move(left), grad, hess, hyper, categorical, depth + 1);
  node.right = grow(tree, x, std::move(right), grad, hess, hyper, categorical, depth + 1);
  tree.nodes[id] = std::move(node);
  return id;
}

}  // namespace detail

// Fits one regression tree to the given gradients and hessians.
inline Tree grow_tree(const Matrix& x, std::span<const double> grad, std::span<const double> hess,
                      const GbmHyper& hyper, std::span<const std::size_t> categorical) {
  std::vector<std::size_t> index(x.rows());
  std::iota(index.begin(), index.end(), 0);
  Tree tree;
  detail::grow(tree, x, detail::sort_rows(x, index), grad, hess, hyper, categorical, 0);
  return tree;
}

namespace detail {

inline Tree grow_tree_sorted(const Matrix& x, const SortedRows& sorted,
                             std::span<const double> grad, std::span<const double> hess,
                             const GbmHyper& hyper, std::span<const std::size_t> categorical) {
  Tree tree;
  grow(tree, x, sorted, grad, hess, hyper, categorical, 0);
  return tree;
}

}  // namespace detail

// `loss_history`, when given, receives the training BCE before the first
// round and after every round.
inline GbmModel train_gbm(const Matrix& x, std::span<const int> labels, const GbmHyper& hyper,
                          std::vector<std::size_t> categorical,
                          std::vector<double>* loss_history = nullptr) {
  hyper.validate();
  if (x.rows() != labels.size()) {
    throw Error("train_gbm: " + std::to_string(x.rows()) + " rows vs " +
                std::to_string(labels.size()) + " labels");
  }
  if (x.rows() < 2) {
    throw Error("train_gbm: need at least 2 rows");
  }
  for (double v : x.data()) {
    if (!std::isfinite(v)) throw Error("train_gbm: non-finite feature value");
  }
  for (auto f : categorical) {
    if (f >= x.cols()) throw Error("train_gbm: categorical feature index out of range");
  }
  std::size_t positives = 0;
  for (int y : labels) {
    if (y != 0 && y != 1) throw Error("train_gbm: labels must be 0 or 1");
    positives += static_cast<std::size_t>(y);
  }
  if (positives == 0 || positives == labels.size()) {
    throw Error("train_gbm: degenerate labels (need both 0 and 1)");
  }
  std::sort(categorical.begin(), categorical.end());
  categorical.erase(std::unique(categorical.begin(), categorical.end()), categorical.end());

  const double mean = static_cast<double>(positives) / static_cast<double>(labels.size());
  GbmModel model;
  model.learning_rate = hyper.learning_rate;
  model.base_logit = std::log(mean / (1.0 - mean));
  model.feature_count = x.cols();
  model.categorical_features = categorical;

  const auto n = x.rows();
  std::vector<double> logits(n, model.base_logit);
  std::vector<double> grad(n);
  std::vector<double> hess(n);
  std::vector<double> probs(n);
  auto record = [&] {
    if (!loss_history) return;
    for (std::size_t i = 0; i < n; ++i) probs[i] = sigmoid(logits[i]);
    loss_history->push_back(bce_loss(probs, labels));
  };
  record();
  std::vector<std::size_t> index(n);
  std::iota(index.begin(), index.end(), 0);
  const auto sorted = detail::sort_rows(x, index);
  for (int round = 0; round < hyper.rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      logistic_grad_hess(logits[i], labels[i], grad[i], hess[i]);
    }
    auto tree = detail::grow_tree_sorted(x, sorted, grad, hess, hyper, model.categorical_features);
    for (std::size_t i = 0; i < n; ++i) {
      logits[i] += hyper.learning_rate * tree.eval(x.row(i));
    }
    model.trees.push_back(std::move(tree));
    record();
  }
  return model;
}

// JSON form: {"type": "gbm", "base_logit", "learning_rate", "feature_count",
// "categorical_features", "trees": [[node, ...], ...]} where a node is
// {"leaf": v} or {"feature", "threshold" | "categories", "left", "right"}.
inline nlohmann::json to_json(const GbmModel& m) {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : m.trees) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : t.nodes) {
      if (n.is_leaf()) {
        nodes.push_back({{"leaf", n.value}});
      } else if (n.categorical) {
        nodes.push_back({{"feature", n.feature},
                         {"categories", n.left_categories},
                         {"left", n.left},
                         {"right", n.right}});
      } else {
        nodes.push_back(
            {{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right}});
      }
    }
    trees.push_back(std::move(nodes));
  }
  return {{"type", "gbm"},
          {"base_logit", m.base_logit},
          {"learning_rate", m.learning_rate},
          {"feature_count", m.feature_count},
          {"categorical_features", m.categorical_features},
          {"trees", std::move(trees)}};
}

inline GbmModel gbm_from_json(const nlohmann::json& j) {
  try {
    if (j.at("type").get<std::string>() != "gbm") throw Error("not a gbm model");
    GbmModel m;
    m.base_logit = j.at("base_logit").get<double>();
    m.learning_rate = j.at("learning_rate").get<double>();
    m.feature_count = j.at("feature_count").get<std::size_t>();
    m.categorical_features = j.at("categorical_features").get<std::vector<std::size_t>>();
    for (const auto& jt : j.at("trees")) {
      Tree t;
      for (const auto& jn : jt) {
        TreeNode n;
        if (jn.contains("leaf")) {
          n.value = jn.at("leaf").get<double>();
          if (!std::isfinite(n.value)) throw Error("non-finite leaf value");
        } else {
          n.feature = jn.at("feature").get<int>();
          n.left = jn.at("left").get<int>();
          n.right = jn.at("right").get<int>();
          if (jn.contains("categories")) {
            n.categorical = true;
            n.left_categories = jn.at("categories").get<std::vector<std::int64_t>>();
            std::sort(n.left_categories.begin(), n.left_categories.end());
          } else {
            n.threshold = jn.at("threshold").get<double>();
          }
          if (n.feature < 0 || static_cast<std::size_t>(n.feature) >= m.feature_count) {
            throw Error("feature index out of range");
          }
        }
        t.nodes.push_back(std::move(n));
      }
      const auto size = static_cast<int>(t.nodes.size());
      if (size == 0) throw Error("empty tree");
      for (int i = 0; i < size; ++i) {
        const auto& n = t.nodes[i];
        if (!n.is_leaf() && (n.left <= i || n.right <= i || n.left >= size || n.right >= size)) {
          throw Error("bad child index");
        }
      }
      m.trees.push_back(std::move(t));
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed gbm model: ") + e.what());
  } catch (const Error& e) {
    throw Error(std::string("malformed gbm model: ") + e.what());
  }
}

}  // namespace ccrl
