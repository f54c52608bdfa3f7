#pragma once

// Class-conditioned features for (segment, class) pairs. A segment is
// compared against every labelled positive and negative exemplar of the
// target class taken from *other* videos; the summed cosine similarities and
// the exemplar counts become model inputs alongside the class index, the
// video-level candidate score and the segment encoding.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ccrl/candgen.hpp"
#include "ccrl/core_data.hpp"

namespace ccrl {

// dot(a,b) / (|a| |b|), or 0 when either vector has zero norm.
inline double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error("cosine_similarity: dimension mismatch " + std::to_string(a.size()) + " vs " +
                std::to_string(b.size()));
  }
  const double na = std::sqrt(dot(a, a));
  const double nb = std::sqrt(dot(b, b));
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

struct Exemplar {
  std::string video_id;
  std::vector<double> encoding;
  double norm = 0.0;
};

// Encodings of all labelled segments, split per class by label value.
class LabeledStore {
public:
  LabeledStore() = default;

  explicit LabeledStore(const Corpus& corpus)
      : positives_(static_cast<std::size_t>(corpus.num_classes())),
        negatives_(static_cast<std::size_t>(corpus.num_classes())),
        dim_(corpus.dim()) {
    for (const auto& l : corpus.segment_labels()) {
      auto enc = segment_encoding(corpus, l.segment);
      const double norm = std::sqrt(dot(enc, enc));
      auto& bucket = l.label == 1 ? positives_ : negatives_;
      bucket[l.class_id].push_back({l.segment.video_id, std::move(enc), norm});
    }
  }

  std::size_t num_classes() const { return positives_.size(); }
  std::size_t dim() const { return dim_; }
  const std::vector<Exemplar>& positives(ClassId c) const { return positives_.at(c); }
  const std::vector<Exemplar>& negatives(ClassId c) const { return negatives_.at(c); }

private:
  std::vector<std::vector<Exemplar>> positives_;
  std::vector<std::vector<Exemplar>> negatives_;
  std::size_t dim_ = 0;
};

struct SimFeatures {
  double sim_pos = 0.0;
  double sim_neg = 0.0;
  std::size_t pos_count = 0;
  std::size_t neg_count = 0;

  bool operator==(const SimFeatures&) const = default;
};

namespace detail {

inline void accumulate_sims(std::span<const double> enc, double enc_norm, const std::string& own_video,
                            const std::vector<Exemplar>& exemplars, double& sum, std::size_t& count) {
  for (const auto& e : exemplars) {
    if (e.video_id == own_video) continue;
    double cos = 0.0;
    if (enc_norm != 0.0 && e.norm != 0.0) {
      cos = std::clamp(dot(enc, e.encoding) / (enc_norm * e.norm), -1.0, 1.0);
    }
    sum += cos;
    ++count;
  }
}

}  // namespace detail

// Similarity sums of an encoding from `own_video` to class c's exemplars in other videos.
inline SimFeatures sim_features(std::span<const double> encoding, const std::string& own_video,
                                ClassId c, const LabeledStore& store) {
  if (c < 0 || static_cast<std::size_t>(c) >= store.num_classes()) {
    throw Error("sim_features: class " + std::to_string(c) + " out of range");
  }
  SimFeatures out;
  const double norm = std::sqrt(dot(encoding, encoding));
  detail::accumulate_sims(encoding, norm, own_video, store.positives(c), out.sim_pos, out.pos_count);
  detail::accumulate_sims(encoding, norm, own_video, store.negatives(c), out.sim_neg, out.neg_count);
  return out;
}

inline SimFeatures sim_features(const SegmentRef& segment, ClassId c, const LabeledStore& store,
                                const Corpus& corpus) {
  return sim_features(segment_encoding(corpus, segment), segment.video_id, c, store);
}

// Model input for one (segment, class) pair.
struct PairFeatureRow {
  SegmentRef segment;
  ClassId class_id = 0;
  double candidate_score = 0.0;
  SimFeatures sim;
  std::vector<double> encoding;

  bool operator==(const PairFeatureRow&) const = default;
};

// Column layout of the numeric feature vector handed to the relevance models.
namespace columns {
inline constexpr std::size_t kClassId = 0;
inline constexpr std::size_t kCandidateScore = 1;
inline constexpr std::size_t kSimPos = 2;
inline constexpr std::size_t kSimNeg = 3;
inline constexpr std::size_t kPosCount = 4;
inline constexpr std::size_t kNegCount = 5;
inline constexpr std::size_t kEncodingBegin = 6;
}  // namespace columns

inline std::size_t feature_width(std::size_t d) { return columns::kEncodingBegin + d; }

inline void write_features(const PairFeatureRow& row, std::span<double> out) {
  out[columns::kClassId] = static_cast<double>(row.class_id);
  out[columns::kCandidateScore] = row.candidate_score;
  out[columns::kSimPos] = row.sim.sim_pos;
  out[columns::kSimNeg] = row.sim.sim_neg;
  out[columns::kPosCount] = static_cast<double>(row.sim.pos_count);
  out[columns::kNegCount] = static_cast<double>(row.sim.neg_count);
  std::copy(row.encoding.begin(), row.encoding.end(), out.begin() + columns::kEncodingBegin);
}

// n x (d + 6) matrix; column 0 is the categorical class index.
inline Matrix feature_matrix(std::span<const PairFeatureRow> rows) {
  if (rows.empty()) return {};
  const auto d = rows.front().encoding.size();
  Matrix m(rows.size(), feature_width(d));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].encoding.size() != d) {
      throw Error("feature_matrix: inconsistent encoding width");
    }
    write_features(rows[i], m.row(i));
  }
  return m;
}

// Ablation: drop the similarity signal while keeping the row layout.
inline void zero_similarity_columns(std::vector<PairFeatureRow>& rows) {
  for (auto& r : rows) {
    r.sim.sim_pos = 0.0;
    r.sim.sim_neg = 0.0;
  }
}

// One row per (candidate segment, class), ordered by (class, video id, start).
inline std::vector<PairFeatureRow> build_pair_rows(const CandidateSet& candidates,
                                                   const Matrix& video_scores,
                                                   const LabeledStore& store, const Corpus& corpus) {
  if (candidates.pair_count() == 0) {
    throw Error("build_pair_rows: candidate set is empty");
  }
  if (video_scores.rows() != corpus.videos().size() ||
      video_scores.cols() < candidates.classes.size()) {
    throw Error("build_pair_rows: video score matrix does not cover the candidate set");
  }
  std::vector<PairFeatureRow> rows;
  rows.reserve(candidates.pair_count());
  for (std::size_t c = 0; c < candidates.classes.size(); ++c) {
    auto segments = candidates.classes[c].segments;
    std::sort(segments.begin(), segments.end());
    const auto cls = static_cast<ClassId>(c);
    for (const auto& seg : segments) {
      if (!corpus.has_video(seg.video_id)) {
        throw Error("build_pair_rows: no video score for '" + seg.video_id + "'");
      }
      PairFeatureRow row;
      row.segment = seg;
      row.class_id = cls;
      row.candidate_score = video_scores(corpus.video_index(seg.video_id), c);
      row.encoding = segment_encoding(corpus, seg);
      row.sim = sim_features(row.encoding, seg.video_id, cls, store);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

struct TrainingRows {
  std::vector<PairFeatureRow> rows;
  std::vector<int> labels;
};

// One labelled row per segment label, in corpus label order.
inline TrainingRows build_training_rows(const Corpus& corpus, const LabeledStore& store,
                                        const Matrix& video_scores) {
  const auto& labels = corpus.segment_labels();
  if (labels.empty()) {
    throw Error("build_training_rows: corpus has no segment labels");
  }
  const bool any_pos = std::any_of(labels.begin(), labels.end(), [](auto& l) { return l.label == 1; });
  const bool any_neg = std::any_of(labels.begin(), labels.end(), [](auto& l) { return l.label == 0; });
  if (!any_pos || !any_neg) {
    throw Error("build_training_rows: degenerate labels (all segment labels are identical)");
  }
  if (video_scores.rows() != corpus.videos().size() ||
      video_scores.cols() != static_cast<std::size_t>(corpus.num_classes())) {
    throw Error("build_training_rows: video score matrix does not match corpus");
  }
  TrainingRows out;
  out.rows.reserve(labels.size());
  for (const auto& l : labels) {
    PairFeatureRow row;
    row.segment = l.segment;
    row.class_id = l.class_id;
    row.candidate_score = video_scores(corpus.video_index(l.segment.video_id), l.class_id);
    row.encoding = segment_encoding(corpus, l.segment);
    row.sim = sim_features(row.encoding, l.segment.video_id, l.class_id, store);
    out.rows.push_back(std::move(row));
    out.labels.push_back(l.label);
  }
  return out;
}

}  // namespace ccrl
