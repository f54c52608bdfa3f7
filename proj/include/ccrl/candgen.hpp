#pragma once

// Video-level candidate generation: a multi-label logistic model scores every
// video for every class, and all segments of the top-K videos of a class
// become that class's candidates.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "ccrl/core_data.hpp"
#include "ccrl/logistic.hpp"

namespace ccrl {

struct SegmentRefHash {
  std::size_t operator()(const SegmentRef& s) const noexcept {
    std::size_t h = std::hash<std::string>{}(s.video_id);
    h ^= std::hash<std::size_t>{}(s.start) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h ^= std::hash<std::size_t>{}(s.length) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
  }
};

struct VideoModel {
  LogisticHeads heads;  // one head per class over mean-pooled video frames
  int trained_epochs = 0;

  std::size_t num_classes() const { return heads.heads(); }
  std::size_t dim() const { return heads.dim(); }

  bool operator==(const VideoModel&) const = default;
};

// Mean-pooled encoding of every video, in corpus order (V x d).
inline Matrix pooled_videos(const Corpus& corpus) {
  Matrix out(corpus.videos().size(), corpus.dim());
  for (std::size_t v = 0; v < corpus.videos().size(); ++v) {
    const auto enc = video_encoding(corpus.videos()[v]);
    std::copy(enc.begin(), enc.end(), out.row(v).begin());
  }
  return out;
}

// Each labelled (video, class) pair weighted 1/N so the objective is mean BCE.
inline std::vector<HeadExample> video_examples(const Corpus& corpus) {
  std::vector<HeadExample> out;
  const double w = 1.0 / static_cast<double>(corpus.video_labels().size());
  for (const auto& l : corpus.video_labels()) {
    out.push_back({corpus.video_index(l.video_id), static_cast<std::size_t>(l.class_id),
                   static_cast<double>(l.label), w});
  }
  return out;
}

struct VideoTrainOptions {
  int epochs = 1000;
  // Large because the objective averages over all V x C labelled pairs.
  double learning_rate = 50.0;
  double l2 = 0.0;
  // Accepted for interface symmetry; zero initialization makes training seed-free.
  std::uint64_t seed = 0;
};

inline VideoModel train_video_model(const Corpus& corpus, const VideoTrainOptions& opts,
                                    std::vector<double>* loss_history = nullptr) {
  if (corpus.video_labels().empty()) {
    throw Error("train_video_model: corpus has no video labels");
  }
  const auto inputs = pooled_videos(corpus);
  const auto examples = video_examples(corpus);
  VideoModel model;
  model.heads = train_logistic_heads(static_cast<std::size_t>(corpus.num_classes()), inputs,
                                     examples, {opts.epochs, opts.learning_rate, opts.l2},
                                     loss_history);
  model.trained_epochs = opts.epochs;
  return model;
}

// V x C matrix of probabilities, rows in corpus order.
inline Matrix predict_video_scores(const VideoModel& model, const Corpus& corpus) {
  if (model.dim() != corpus.dim()) {
    throw Error("predict_video_scores: model d=" + std::to_string(model.dim()) +
                " but corpus d=" + std::to_string(corpus.dim()));
  }
  if (model.num_classes() != static_cast<std::size_t>(corpus.num_classes())) {
    throw Error("predict_video_scores: model has " + std::to_string(model.num_classes()) +
                " classes, corpus has " + std::to_string(corpus.num_classes()));
  }
  Matrix scores(corpus.videos().size(), model.num_classes());
  for (std::size_t v = 0; v < corpus.videos().size(); ++v) {
    const auto x = video_encoding(corpus.videos()[v]);
    for (std::size_t c = 0; c < model.num_classes(); ++c) {
      scores(v, c) = model.heads.predict(c, x);
    }
  }
  return scores;
}

struct ClassCandidates {
  std::vector<std::string> videos;     // selected videos, best score first
  std::vector<SegmentRef> segments;    // ordered by (video id, start)
};

struct CandidateSet {
  std::size_t k = 0;
  bool clamped = false;  // requested K exceeded the number of videos
  std::vector<ClassCandidates> classes;

  std::size_t pair_count() const {
    std::size_t n = 0;
    for (const auto& c : classes) n += c.segments.size();
    return n;
  }
};

namespace detail {

inline std::vector<SegmentRef> segments_of(const Corpus& corpus, std::vector<std::string> video_ids,
                                           std::size_t length, std::size_t stride) {
  std::sort(video_ids.begin(), video_ids.end());
  std::vector<SegmentRef> out;
  for (const auto& id : video_ids) {
    auto segs = enumerate_segments(corpus.video(id), length, stride);
    out.insert(out.end(), segs.begin(), segs.end());
  }
  return out;
}

}  // namespace detail

// Per class, top-K videos by score (ties: lower video id first) and all their segments.
inline CandidateSet select_candidates(const Matrix& scores, const Corpus& corpus, std::size_t k,
                                      std::size_t length, std::size_t stride) {
  if (k == 0) {
    throw Error("select_candidates: K must be >= 1");
  }
  const auto V = corpus.videos().size();
  if (scores.rows() != V || scores.cols() != static_cast<std::size_t>(corpus.num_classes())) {
    throw Error("select_candidates: score matrix shape does not match corpus");
  }
  CandidateSet out;
  out.clamped = k > V;
  out.k = std::min(k, V);
  out.classes.resize(scores.cols());

  std::vector<std::size_t> order(V);
  for (std::size_t c = 0; c < scores.cols(); ++c) {
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(out.k), order.end(),
                      [&](std::size_t a, std::size_t b) {
                        if (scores(a, c) != scores(b, c)) return scores(a, c) > scores(b, c);
                        return corpus.videos()[a].id < corpus.videos()[b].id;
                      });
    auto& cls = out.classes[c];
    for (std::size_t i = 0; i < out.k; ++i) {
      cls.videos.push_back(corpus.videos()[order[i]].id);
    }
    cls.segments = detail::segments_of(corpus, cls.videos, length, stride);
  }
  return out;
}

// Every segment of every video for every class: scoring without pruning.
inline CandidateSet all_candidates(const Corpus& corpus, std::size_t length, std::size_t stride) {
  CandidateSet out;
  out.k = corpus.videos().size();
  out.classes.resize(static_cast<std::size_t>(corpus.num_classes()));
  std::vector<std::string> ids;
  for (const auto& v : corpus.videos()) ids.push_back(v.id);
  const auto segments = detail::segments_of(corpus, ids, length, stride);
  std::sort(ids.begin(), ids.end());
  for (auto& cls : out.classes) {
    cls.videos = ids;
    cls.segments = segments;
  }
  return out;
}

struct RecallReport {
  std::vector<std::optional<double>> per_class;  // empty for classes without positives
  std::vector<std::size_t> positives;
  double mean = 0.0;
};

// Fraction of true positives per class that appear among the class's candidates.
inline RecallReport candidate_recall(const CandidateSet& candidates,
                                     const std::vector<std::pair<SegmentRef, ClassId>>& truth) {
  const auto C = candidates.classes.size();
  RecallReport report;
  report.per_class.assign(C, std::nullopt);
  report.positives.assign(C, 0);
  std::vector<std::size_t> hits(C, 0);
  std::vector<std::unordered_set<SegmentRef, SegmentRefHash>> sets(C);
  for (std::size_t c = 0; c < C; ++c) {
    sets[c].insert(candidates.classes[c].segments.begin(), candidates.classes[c].segments.end());
  }
  for (const auto& [seg, cls] : truth) {
    if (cls < 0 || static_cast<std::size_t>(cls) >= C) {
      throw Error("candidate_recall: ground-truth class " + std::to_string(cls) + " out of range");
    }
    ++report.positives[cls];
    if (sets[cls].contains(seg)) ++hits[cls];
  }
  std::size_t evaluable = 0;
  double sum = 0.0;
  for (std::size_t c = 0; c < C; ++c) {
    if (report.positives[c] == 0) continue;
    const double r = static_cast<double>(hits[c]) / static_cast<double>(report.positives[c]);
    report.per_class[c] = r;
    sum += r;
    ++evaluable;
  }
  if (evaluable == 0) {
    throw Error("candidate_recall: ground truth has no positives");
  }
  report.mean = sum / static_cast<double>(evaluable);
  return report;
}

}  // namespace ccrl
