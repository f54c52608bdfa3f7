#pragma once

// Small corpora and helpers shared by the unit tests.

#include <filesystem>
#include <optional>
#include <set>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "ccrl/ccrl.hpp"
#include "oracles.hpp"

namespace ccrl::testing {

inline Video make_video(std::string id, std::vector<std::vector<double>> frames) {
  return {std::move(id), Matrix::from_rows(frames)};
}

// Video whose frames are all equal to `frame`.
inline Video constant_video(std::string id, std::size_t n, std::vector<double> frame) {
  return make_video(std::move(id), std::vector<std::vector<double>>(n, std::move(frame)));
}

inline SegmentLabel seg_label(std::string vid, std::size_t start, std::size_t length, ClassId c,
                              int label) {
  return {{std::move(vid), start, length}, c, label};
}

// Fresh directory under the system temp path, removed on destruction.
class TempDir {
public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("ccrl_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

private:
  std::filesystem::path path_;
};

inline GeneratorSpec small_spec(std::uint64_t seed = 3) {
  GeneratorSpec s;
  s.num_videos = 60;
  s.frames_per_video = 15;
  s.d = 6;
  s.num_classes = 6;
  s.clusters = 2;
  s.label_rate = 0.3;
  s.seed = seed;
  return s;
}

inline std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n, double lo = -1.0,
                                         double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

// Random ranking problem over one video's length-1 segments, so that the
// (video_id, start) tie-break is the segment index.
struct MapInstance {
  Corpus corpus;
  Predictions predictions;
  GroundTruthPositives truth;
  std::size_t cap = 0;
};

inline MapInstance random_map_instance(std::mt19937_64& rng, std::size_t max_segments = 20,
                                       int max_classes = 5) {
  const std::size_t n = 1 + rng() % max_segments;
  const int C = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(max_classes));
  MapInstance in{Corpus({constant_video("v", n, {1.0})}, C, {}, {}, 1), {}, {}, 1 + rng() % (n + 3)};
  for (int c = 0; c < C; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      if (rng() % 4 == 0) in.truth.push_back({{"v", i, 1}, c});
      // Few distinct scores so ties are frequent; some pairs are never scored.
      if (rng() % 5 != 0) {
        in.predictions.push_back({c, {"v", i, 1}, static_cast<double>(rng() % 6) / 5.0});
      }
    }
  }
  return in;
}

// mAP of an instance computed by the literal oracle; nullopt when no class
// has a relevant segment.
inline std::optional<double> oracle_map(const MapInstance& in) {
  const int C = in.corpus.num_classes();
  double sum = 0.0;
  int counted = 0;
  for (int c = 0; c < C; ++c) {
    std::set<std::size_t> relevant;
    for (const auto& [seg, cls] : in.truth) {
      if (cls == c) relevant.insert(seg.start);
    }
    if (relevant.empty()) continue;
    std::vector<oracle::Scored> items;
    for (const auto& p : in.predictions) {
      if (p.class_id != c) continue;
      const int key = static_cast<int>(p.segment.start);
      items.push_back({p.score, key, relevant.contains(p.segment.start) ? 1 : 0});
    }
    sum += oracle::average_precision(oracle::ranked_pattern(items, in.cap), relevant.size());
    ++counted;
  }
  if (counted == 0) return std::nullopt;
  return sum / counted;
}

}  // namespace ccrl::testing
