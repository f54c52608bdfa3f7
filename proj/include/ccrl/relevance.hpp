#pragma once

// Relevance models over (segment, class) pairs: the cross-class boosted model,
// the per-class logistic baseline, and score averaging across models.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ccrl/candgen.hpp"
#include "ccrl/class_features.hpp"
#include "ccrl/gbm.hpp"
#include "ccrl/logistic.hpp"
#include "ccrl/prediction.hpp"

namespace ccrl {

// A single boosted model shared by all classes, with the class index as a
// categorical input.
inline GbmModel train_ccrl(std::span<const PairFeatureRow> rows, std::span<const int> labels,
                           const GbmHyper& hyper, std::vector<double>* loss_history = nullptr) {
  return train_gbm(feature_matrix(rows), labels, hyper, {columns::kClassId}, loss_history);
}

inline std::vector<double> predict_ccrl(const GbmModel& model, std::span<const PairFeatureRow> rows) {
  const auto x = feature_matrix(rows);
  std::vector<double> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out[i] = predict_gbm(model, x.row(i));
  }
  return out;
}

// Independent logistic head per class over segment encodings.
struct BaselineModel {
  LogisticHeads heads;

  bool operator==(const BaselineModel&) const = default;
};

struct BaselineTrainOptions {
  int epochs = 500;
  double learning_rate = 1.0;
  double l2 = 1e-3;
  std::uint64_t seed = 0;  // unused: zero initialization
};

// Inputs and examples for the baseline objective: each class's head sees only
// that class's labels, and its loss term is the mean BCE over them.
struct BaselineProblem {
  Matrix inputs;
  std::vector<HeadExample> examples;
};

inline BaselineProblem baseline_problem(const Corpus& corpus) {
  const auto& labels = corpus.segment_labels();
  BaselineProblem p;
  p.inputs = Matrix(labels.size(), corpus.dim());
  std::vector<std::size_t> per_class(static_cast<std::size_t>(corpus.num_classes()), 0);
  for (const auto& l : labels) ++per_class[l.class_id];
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto enc = segment_encoding(corpus, labels[i].segment);
    std::copy(enc.begin(), enc.end(), p.inputs.row(i).begin());
    const auto c = static_cast<std::size_t>(labels[i].class_id);
    p.examples.push_back({i, c, static_cast<double>(labels[i].label),
                          1.0 / static_cast<double>(per_class[c])});
  }
  return p;
}

inline BaselineModel train_baseline(const Corpus& corpus, const BaselineTrainOptions& opts,
                                    std::vector<double>* loss_history = nullptr) {
  if (corpus.segment_labels().empty()) {
    throw Error("train_baseline: corpus has no segment labels");
  }
  const auto p = baseline_problem(corpus);
  return {train_logistic_heads(static_cast<std::size_t>(corpus.num_classes()), p.inputs, p.examples,
                               {opts.epochs, opts.learning_rate, opts.l2}, loss_history)};
}

inline double predict_baseline(const BaselineModel& model, const PairFeatureRow& row) {
  if (row.encoding.size() != model.heads.dim()) {
    throw Error("predict_baseline: encoding has d=" + std::to_string(row.encoding.size()) +
                ", model expects " + std::to_string(model.heads.dim()));
  }
  if (row.class_id < 0 || static_cast<std::size_t>(row.class_id) >= model.heads.heads()) {
    throw Error("predict_baseline: class " + std::to_string(row.class_id) + " out of range");
  }
  return model.heads.predict(static_cast<std::size_t>(row.class_id), row.encoding);
}

inline std::vector<double> predict_baseline(const BaselineModel& model,
                                            std::span<const PairFeatureRow> rows) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(predict_baseline(model, r));
  return out;
}

inline Predictions to_predictions(std::span<const PairFeatureRow> rows, std::span<const double> scores) {
  if (rows.size() != scores.size()) {
    throw Error("to_predictions: row and score counts differ");
  }
  Predictions out;
  out.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.push_back({rows[i].class_id, rows[i].segment, scores[i]});
  }
  return out;
}

// Element-wise mean of score lists that cover the same (class, segment) keys in the same order.
inline Predictions ensemble_average(std::span<const Predictions> lists) {
  if (lists.empty()) {
    throw Error("ensemble_average: no score lists");
  }
  const auto& first = lists.front();
  Predictions out = first;
  for (std::size_t l = 1; l < lists.size(); ++l) {
    const auto& other = lists[l];
    if (other.size() != first.size()) {
      throw Error("ensemble_average: score lists have different lengths");
    }
    for (std::size_t i = 0; i < first.size(); ++i) {
      if (other[i].class_id != first[i].class_id || other[i].segment != first[i].segment) {
        throw Error("ensemble_average: misaligned keys at position " + std::to_string(i));
      }
      out[i].score += other[i].score;
    }
  }
  const double n = static_cast<double>(lists.size());
  for (auto& p : out) p.score /= n;
  return out;
}

inline nlohmann::json heads_to_json(const LogisticHeads& h) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t r = 0; r < h.heads(); ++r) {
    rows.push_back(std::vector<double>(h.weights.row(r).begin(), h.weights.row(r).end()));
  }
  return {{"weights", std::move(rows)}, {"bias", h.bias}};
}

inline LogisticHeads heads_from_json(const nlohmann::json& j) {
  const auto rows = j.at("weights").get<std::vector<std::vector<double>>>();
  LogisticHeads h;
  h.weights = Matrix::from_rows(rows);
  h.bias = j.at("bias").get<std::vector<double>>();
  if (h.bias.size() != h.weights.rows()) {
    throw Error("bias length does not match weight rows");
  }
  if (!h.finite()) {
    throw Error("non-finite parameters");
  }
  return h;
}

inline nlohmann::json to_json(const VideoModel& m) {
  auto j = heads_to_json(m.heads);
  j["type"] = "video_logistic";
  j["trained_epochs"] = m.trained_epochs;
  return j;
}

inline VideoModel video_model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("type").get<std::string>() != "video_logistic") throw Error("not a video model");
    return {heads_from_json(j), j.at("trained_epochs").get<int>()};
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed video model: ") + e.what());
  }
}

inline nlohmann::json to_json(const BaselineModel& m) {
  auto j = heads_to_json(m.heads);
  j["type"] = "baseline_logistic";
  return j;
}

inline BaselineModel baseline_from_json(const nlohmann::json& j) {
  try {
    if (j.at("type").get<std::string>() != "baseline_logistic") throw Error("not a baseline model");
    return {heads_from_json(j)};
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed baseline model: ") + e.what());
  }
}

}  // namespace ccrl
