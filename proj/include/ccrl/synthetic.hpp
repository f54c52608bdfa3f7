#pragma once

// Seeded synthetic corpora with a two-level class hierarchy.
//
// Classes are grouped into clusters. Each class prototype is its cluster
// prototype plus a fixed-norm offset, so sibling classes are close to each
// other and far from other clusters. Every video is about one primary class
// and optionally one sibling; its segments are either drawn around one of
// those class prototypes (a true positive) or are zero-mean background
// noise. Segment labels are a sparse sample of (segment, class) pairs
// restricted to the segment's own cluster, so labelled negatives are mostly
// hard sibling negatives.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ccrl/core_data.hpp"
#include "ccrl/random.hpp"

namespace ccrl {

struct GeneratorSpec {
  int num_videos = 500;
  int frames_per_video = 25;
  int segment_length = 5;
  int d = 16;
  int num_classes = 20;
  int clusters = 5;
  double noise_sigma = 0.3;
  double positive_segment_rate = 0.4;
  double label_rate = 0.2;
  // Probability that a video also contains a sibling class.
  double secondary_class_rate = 0.3;
  // Class offset norm as a fraction of the smallest inter-cluster distance.
  double class_offset_ratio = 0.2;
  std::uint64_t seed = 7;

  void validate() const {
    if (num_videos <= 0 || frames_per_video <= 0 || segment_length <= 0 || d <= 0 ||
        num_classes <= 0 || clusters <= 0) {
      throw Error("generator: all counts must be positive");
    }
    if (num_classes % clusters != 0) {
      throw Error("generator: clusters must divide num_classes");
    }
    if (frames_per_video < segment_length) {
      throw Error("generator: frames_per_video must be >= segment_length");
    }
    if (!(noise_sigma >= 0.0)) {
      throw Error("generator: noise_sigma must be nonnegative");
    }
    if (!(positive_segment_rate > 0.0 && positive_segment_rate < 1.0)) {
      throw Error("generator: positive_segment_rate must be in (0, 1)");
    }
    if (!(label_rate > 0.0 && label_rate <= 1.0)) {
      throw Error("generator: label_rate must be in (0, 1]");
    }
    if (!(secondary_class_rate >= 0.0 && secondary_class_rate <= 1.0)) {
      throw Error("generator: secondary_class_rate must be in [0, 1]");
    }
    if (!(class_offset_ratio > 0.0 && class_offset_ratio < 0.25)) {
      throw Error("generator: class_offset_ratio must be in (0, 0.25)");
    }
  }

  int classes_per_cluster() const { return num_classes / clusters; }
  int segments_per_video() const { return frames_per_video / segment_length; }
};

struct GroundTruth {
  // Every true (segment, class) positive, ordered by video then start.
  std::vector<std::pair<SegmentRef, ClassId>> positives;
  Matrix class_prototypes;   // C x d
  Matrix cluster_prototypes; // clusters x d
  std::vector<int> cluster_of_class;
};

struct GeneratedCorpus {
  Corpus corpus;
  GroundTruth truth;
};

inline std::string synthetic_video_id(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "v%05d", index);
  return buf;
}

namespace detail {

enum Stream : std::uint64_t {
  kClusterStream = 1,
  kOffsetStream,
  kVideoClassStream,
  kSegmentStream,
  kNoiseStream,
  kLabelStream,
};

inline double narrow(double x) { return static_cast<double>(static_cast<float>(x)); }

}  // namespace detail

inline GeneratedCorpus generate(const GeneratorSpec& spec) {
  spec.validate();
  using detail::narrow;
  const auto d = static_cast<std::size_t>(spec.d);
  const int C = spec.num_classes;
  const int per_cluster = spec.classes_per_cluster();

  GroundTruth truth;
  truth.cluster_prototypes = Matrix(spec.clusters, d);
  const CounterRng cluster_rng(spec.seed, detail::kClusterStream);
  for (int k = 0; k < spec.clusters; ++k) {
    for (std::size_t j = 0; j < d; ++j) {
      truth.cluster_prototypes(k, j) = cluster_rng.normal(counter_of(k, j));
    }
  }

  double reference = std::numeric_limits<double>::infinity();
  for (int a = 0; a < spec.clusters; ++a) {
    for (int b = a + 1; b < spec.clusters; ++b) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double diff = truth.cluster_prototypes(a, j) - truth.cluster_prototypes(b, j);
        s += diff * diff;
      }
      reference = std::min(reference, std::sqrt(s));
    }
  }
  if (spec.clusters == 1) {
    reference = std::sqrt(dot(truth.cluster_prototypes.row(0), truth.cluster_prototypes.row(0)));
  }
  const double offset_norm = spec.class_offset_ratio * reference;

  truth.class_prototypes = Matrix(C, d);
  truth.cluster_of_class.resize(C);
  const CounterRng offset_rng(spec.seed, detail::kOffsetStream);
  for (int c = 0; c < C; ++c) {
    const int k = c / per_cluster;
    truth.cluster_of_class[c] = k;
    std::vector<double> dir(d);
    double norm = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      dir[j] = offset_rng.normal(counter_of(c, j));
      norm += dir[j] * dir[j];
    }
    norm = std::sqrt(norm);
    for (std::size_t j = 0; j < d; ++j) {
      truth.class_prototypes(c, j) =
          narrow(truth.cluster_prototypes(k, j) + offset_norm * dir[j] / norm);
    }
  }

  const int S = spec.segments_per_video();
  const auto L = static_cast<std::size_t>(spec.segment_length);
  const CounterRng class_rng(spec.seed, detail::kVideoClassStream);
  const CounterRng segment_rng(spec.seed, detail::kSegmentStream);
  const CounterRng noise_rng(spec.seed, detail::kNoiseStream);
  const CounterRng label_rng(spec.seed, detail::kLabelStream);

  std::vector<Video> videos;
  std::vector<VideoLabel> video_labels;
  videos.reserve(spec.num_videos);

  struct PoolEntry {
    std::uint64_t key;
    std::size_t video;
    int segment;
    ClassId cls;
    int label;
  };
  std::vector<PoolEntry> pool;

  for (int v = 0; v < spec.num_videos; ++v) {
    const auto vu = static_cast<std::uint64_t>(v);
    const ClassId primary =
        static_cast<ClassId>(class_rng.bits(counter_of(vu, 0)) % static_cast<std::uint64_t>(C));
    const int cluster = truth.cluster_of_class[primary];
    ClassId secondary = -1;
    if (per_cluster > 1 && S > 1 && class_rng.uniform(counter_of(vu, 1)) < spec.secondary_class_rate) {
      const auto shift = 1 + class_rng.bits(counter_of(vu, 2)) % (per_cluster - 1);
      secondary = cluster * per_cluster +
                  static_cast<ClassId>((primary - cluster * per_cluster + shift) % per_cluster);
    }

    // Class owning each segment, -1 for background.
    std::vector<ClassId> owner(S, -1);
    for (int s = 0; s < S; ++s) {
      const auto su = static_cast<std::uint64_t>(s);
      if (segment_rng.uniform(counter_of(vu, su, 0)) < spec.positive_segment_rate) {
        owner[s] = (secondary >= 0 && segment_rng.uniform(counter_of(vu, su, 1)) < 0.5) ? secondary
                                                                                         : primary;
      }
    }
    const int forced_primary = static_cast<int>(segment_rng.bits(counter_of(vu, 1000)) % S);
    owner[forced_primary] = primary;
    if (secondary >= 0) {
      const int forced_secondary =
          (forced_primary + 1 + static_cast<int>(segment_rng.bits(counter_of(vu, 1001)) % (S - 1))) % S;
      owner[forced_secondary] = secondary;
    }

    Video video{synthetic_video_id(v), Matrix(spec.frames_per_video, d)};
    for (int f = 0; f < spec.frames_per_video; ++f) {
      const int s = f / spec.segment_length;
      const ClassId o = s < S ? owner[s] : -1;
      for (std::size_t j = 0; j < d; ++j) {
        const double base = o >= 0 ? truth.class_prototypes(o, j) : 0.0;
        const double noise =
            spec.noise_sigma > 0.0 ? spec.noise_sigma * noise_rng.normal(counter_of(vu, f, j)) : 0.0;
        video.frames(f, j) = narrow(base + noise);
      }
    }

    std::vector<bool> has_class(C, false);
    for (int s = 0; s < S; ++s) {
      if (owner[s] >= 0) {
        has_class[owner[s]] = true;
        truth.positives.push_back({{video.id, s * L, L}, owner[s]});
      }
    }
    for (ClassId c = 0; c < C; ++c) {
      video_labels.push_back({video.id, c, has_class[c] ? 1 : 0});
    }

    for (int s = 0; s < S; ++s) {
      for (int i = 0; i < per_cluster; ++i) {
        const ClassId c = cluster * per_cluster + i;
        pool.push_back({label_rng.bits(counter_of(vu, s, c)), videos.size(), s, c,
                        owner[s] == c ? 1 : 0});
      }
    }
    videos.push_back(std::move(video));
  }

  const auto n_labels = static_cast<std::size_t>(std::llround(spec.label_rate * static_cast<double>(pool.size())));
  auto by_key = [](const PoolEntry& a, const PoolEntry& b) {
    return std::tie(a.key, a.video, a.segment, a.cls) < std::tie(b.key, b.video, b.segment, b.cls);
  };
  std::nth_element(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_labels), pool.end(), by_key);
  pool.resize(n_labels);
  std::sort(pool.begin(), pool.end(), [](const PoolEntry& a, const PoolEntry& b) {
    return std::tie(a.video, a.segment, a.cls) < std::tie(b.video, b.segment, b.cls);
  });

  std::vector<SegmentLabel> segment_labels;
  segment_labels.reserve(pool.size());
  for (const auto& e : pool) {
    segment_labels.push_back({{videos[e.video].id, e.segment * L, L}, e.cls, e.label});
  }

  Corpus corpus(std::move(videos), C, std::move(video_labels), std::move(segment_labels), L);
  return {std::move(corpus), std::move(truth)};
}

}  // namespace ccrl
