#pragma once

// Ranked-list evaluation: per-class average precision, mean average
// precision over classes with at least one relevant segment, and recall of
// the capped ranked lists.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ccrl/candgen.hpp"
#include "ccrl/core_data.hpp"
#include "ccrl/prediction.hpp"

namespace ccrl {

inline constexpr std::size_t kDefaultCap = 100000;

struct RankedItem {
  SegmentRef segment;
  double score = 0.0;

  bool operator==(const RankedItem&) const = default;
};

struct RankedList {
  ClassId class_id = 0;
  std::size_t cap = kDefaultCap;
  std::vector<RankedItem> items;  // score descending, ties by (video_id, start)
};

// Per-class ranked lists (index = class id), truncated to `cap`.
inline std::vector<RankedList> rank_segments(std::span<const Prediction> predictions, int num_classes,
                                             std::size_t cap = kDefaultCap) {
  std::vector<RankedList> lists(static_cast<std::size_t>(num_classes));
  for (int c = 0; c < num_classes; ++c) {
    lists[c].class_id = c;
    lists[c].cap = cap;
  }
  for (const auto& p : predictions) {
    if (p.class_id < 0 || p.class_id >= num_classes) {
      throw Error("rank_segments: class " + std::to_string(p.class_id) + " out of range");
    }
    if (!std::isfinite(p.score)) {
      throw Error("rank_segments: non-finite score");
    }
    lists[p.class_id].items.push_back({p.segment, p.score});
  }
  for (auto& list : lists) {
    auto& items = list.items;
    std::sort(items.begin(), items.end(), [](const RankedItem& a, const RankedItem& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.segment < b.segment;
    });
    std::unordered_set<SegmentRef, SegmentRefHash> seen;
    for (const auto& it : items) {
      if (!seen.insert(it.segment).second) {
        throw Error("rank_segments: duplicate segment '" + it.segment.video_id + "'@" +
                    std::to_string(it.segment.start) + " for class " + std::to_string(list.class_id));
      }
    }
    if (items.size() > cap) items.resize(cap);
  }
  return lists;
}

// sum_i Prec(i) * rel(i) / n_c over a ranked relevance pattern.
inline double average_precision(std::span<const int> relevance, std::size_t n_c) {
  if (n_c == 0) {
    throw Error("average_precision: N_c = 0");
  }
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < relevance.size(); ++i) {
    if (relevance[i]) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(i + 1);
    }
  }
  return sum / static_cast<double>(n_c);
}

// AP of a ranked list; `relevant` holds every ground-truth positive of the
// class, including those missing from the list.
inline double average_precision(const RankedList& ranked,
                                const std::unordered_set<SegmentRef, SegmentRefHash>& relevant) {
  std::vector<int> pattern;
  pattern.reserve(ranked.items.size());
  for (const auto& it : ranked.items) pattern.push_back(relevant.contains(it.segment) ? 1 : 0);
  return average_precision(pattern, relevant.size());
}

// Neumaier-compensated sum.
inline double compensated_sum(std::span<const double> values) {
  double sum = 0.0;
  double comp = 0.0;
  for (double v : values) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      comp += (sum - t) + v;
    } else {
      comp += (v - t) + sum;
    }
    sum = t;
  }
  return sum + comp;
}

// Unweighted mean of AP over classes with n_c > 0.
inline double mean_average_precision(std::span<const double> ap, std::span<const std::size_t> n_c) {
  if (ap.size() != n_c.size()) {
    throw Error("mean_average_precision: AP and N_c lengths differ");
  }
  std::vector<double> kept;
  for (std::size_t c = 0; c < ap.size(); ++c) {
    if (n_c[c] > 0) kept.push_back(ap[c]);
  }
  if (kept.empty()) {
    throw Error("mean_average_precision: no class has a relevant segment");
  }
  return compensated_sum(kept) / static_cast<double>(kept.size());
}

struct ClassReport {
  ClassId class_id = 0;
  std::size_t n_c = 0;
  std::optional<double> ap;             // empty when n_c == 0
  std::optional<double> recall_at_cap;  // empty when n_c == 0
};

struct EvalReport {
  double map = 0.0;
  std::size_t cap = kDefaultCap;
  std::vector<ClassReport> per_class;
  std::vector<ClassId> classes_skipped;
};

using GroundTruthPositives = std::vector<std::pair<SegmentRef, ClassId>>;

inline EvalReport evaluate(std::span<const Prediction> predictions, const GroundTruthPositives& truth,
                           const Corpus& corpus, std::size_t cap = kDefaultCap) {
  const int C = corpus.num_classes();
  for (const auto& p : predictions) {
    if (!corpus.has_video(p.segment.video_id)) {
      throw Error("evaluate: prediction references unknown video '" + p.segment.video_id + "'");
    }
    if (p.class_id < 0 || p.class_id >= C) {
      throw Error("evaluate: prediction class " + std::to_string(p.class_id) + " out of range");
    }
  }
  std::vector<std::unordered_set<SegmentRef, SegmentRefHash>> relevant(static_cast<std::size_t>(C));
  for (const auto& [seg, c] : truth) {
    if (c < 0 || c >= C) {
      throw Error("evaluate: ground-truth class " + std::to_string(c) + " out of range");
    }
    relevant[c].insert(seg);
  }

  const auto lists = rank_segments(predictions, C, cap);

  CandidateSet retrieved;
  retrieved.k = cap;
  retrieved.classes.resize(static_cast<std::size_t>(C));
  for (int c = 0; c < C; ++c) {
    for (const auto& it : lists[c].items) retrieved.classes[c].segments.push_back(it.segment);
  }
  std::optional<RecallReport> recall;
  if (!truth.empty()) recall = candidate_recall(retrieved, truth);

  EvalReport report;
  report.cap = cap;
  std::vector<double> aps(static_cast<std::size_t>(C), 0.0);
  std::vector<std::size_t> counts(static_cast<std::size_t>(C), 0);
  for (int c = 0; c < C; ++c) {
    ClassReport cr;
    cr.class_id = c;
    cr.n_c = relevant[c].size();
    counts[c] = cr.n_c;
    if (cr.n_c == 0) {
      report.classes_skipped.push_back(c);
    } else {
      cr.ap = average_precision(lists[c], relevant[c]);
      aps[c] = *cr.ap;
      cr.recall_at_cap = recall->per_class[c];
    }
    report.per_class.push_back(cr);
  }
  report.map = mean_average_precision(aps, counts);
  return report;
}

inline nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json per_class = nlohmann::json::array();
  for (const auto& c : r.per_class) {
    nlohmann::json jc = {{"class_id", c.class_id}, {"n_c", c.n_c}};
    jc["ap"] = c.ap ? nlohmann::json(*c.ap) : nlohmann::json(nullptr);
    jc["recall_at_cap"] = c.recall_at_cap ? nlohmann::json(*c.recall_at_cap) : nlohmann::json(nullptr);
    per_class.push_back(std::move(jc));
  }
  return {{"map", r.map}, {"cap", r.cap}, {"per_class", std::move(per_class)},
          {"classes_skipped", r.classes_skipped}};
}

}  // namespace ccrl
