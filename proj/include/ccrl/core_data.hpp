#pragma once

#include <cmath>
#include <compare>
#include <cstddef>
#include <set>
#include <string>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ccrl/matrix.hpp"

namespace ccrl {

using ClassId = int;

struct Video {
  std::string id;
  Matrix frames;  // F_v x d

  std::size_t frame_count() const { return frames.rows(); }
  std::size_t dim() const { return frames.cols(); }

  bool operator==(const Video&) const = default;
};

// Window of `length` consecutive frames starting at `start`.
struct SegmentRef {
  std::string video_id;
  std::size_t start = 0;
  std::size_t length = 1;

  std::size_t end() const { return start + length; }

  auto operator<=>(const SegmentRef&) const = default;
  bool operator==(const SegmentRef&) const = default;
};

struct SegmentLabel {
  SegmentRef segment;
  ClassId class_id = 0;
  int label = 0;

  bool operator==(const SegmentLabel&) const = default;
};

struct VideoLabel {
  std::string video_id;
  ClassId class_id = 0;
  int label = 0;

  bool operator==(const VideoLabel&) const = default;
};

inline constexpr std::size_t kDefaultSegmentLength = 5;
inline constexpr std::size_t kDefaultStride = 5;

// Immutable, validated collection of videos and their labels.
class Corpus {
public:
  Corpus() = default;

  // Validates every invariant; throws Error describing the first violation.
  Corpus(std::vector<Video> videos, int num_classes, std::vector<VideoLabel> video_labels,
         std::vector<SegmentLabel> segment_labels,
         std::size_t segment_length = kDefaultSegmentLength)
      : videos_(std::move(videos)),
        num_classes_(num_classes),
        video_labels_(std::move(video_labels)),
        segment_labels_(std::move(segment_labels)),
        segment_length_(segment_length) {
    validate();
  }

  const std::vector<Video>& videos() const { return videos_; }
  int num_classes() const { return num_classes_; }
  const std::vector<VideoLabel>& video_labels() const { return video_labels_; }
  const std::vector<SegmentLabel>& segment_labels() const { return segment_labels_; }
  std::size_t segment_length() const { return segment_length_; }
  std::size_t dim() const { return dim_; }

  bool has_video(const std::string& id) const { return index_.contains(id); }

  std::size_t video_index(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) {
      throw Error("unknown video '" + id + "'");
    }
    return it->second;
  }

  const Video& video(const std::string& id) const { return videos_[video_index(id)]; }

  // Throws when the segment does not lie inside its video.
  void check_segment_bounds(const SegmentRef& s) const {
    const auto& v = video(s.video_id);
    if (s.length == 0 || s.start + s.length > v.frame_count()) {
      throw Error("segment out of bounds: '" + s.video_id + "' start=" + std::to_string(s.start) +
                  " length=" + std::to_string(s.length) + " frames=" +
                  std::to_string(v.frame_count()));
    }
  }

  bool operator==(const Corpus& o) const {
    return videos_ == o.videos_ && num_classes_ == o.num_classes_ &&
           video_labels_ == o.video_labels_ && segment_labels_ == o.segment_labels_ &&
           segment_length_ == o.segment_length_;
  }

private:
  void validate() {
    if (num_classes_ <= 0) {
      throw Error("num_classes must be positive");
    }
    if (segment_length_ == 0) {
      throw Error("segment length must be >= 1");
    }
    for (std::size_t i = 0; i < videos_.size(); ++i) {
      const auto& v = videos_[i];
      if (v.frame_count() == 0) {
        throw Error("video '" + v.id + "' has no frames");
      }
      if (i == 0) {
        dim_ = v.dim();
      } else if (v.dim() != dim_) {
        throw Error("dimension mismatch: video '" + v.id + "' has d=" + std::to_string(v.dim()) +
                    ", expected " + std::to_string(dim_));
      }
      for (double x : v.frames.data()) {
        if (!std::isfinite(x)) {
          throw Error("video '" + v.id + "' has a non-finite frame value");
        }
      }
      if (!index_.emplace(v.id, i).second) {
        throw Error("duplicate video id '" + v.id + "'");
      }
    }
    if (dim_ == 0 && !videos_.empty()) {
      throw Error("frame dimension must be >= 1");
    }

    std::set<std::pair<std::string, ClassId>> seen_video;
    for (const auto& l : video_labels_) {
      check_label_common(l.video_id, l.class_id, l.label);
      if (!seen_video.emplace(l.video_id, l.class_id).second) {
        throw Error("duplicate label for video '" + l.video_id + "' class " +
                    std::to_string(l.class_id));
      }
    }

    std::set<std::tuple<std::string, std::size_t, std::size_t, ClassId>> seen_segment;
    for (const auto& l : segment_labels_) {
      check_label_common(l.segment.video_id, l.class_id, l.label);
      check_segment_bounds(l.segment);
      if (!seen_segment
               .emplace(l.segment.video_id, l.segment.start, l.segment.length, l.class_id)
               .second) {
        throw Error("duplicate label for segment '" + l.segment.video_id + "'@" +
                    std::to_string(l.segment.start) + " class " + std::to_string(l.class_id));
      }
    }
  }

  void check_label_common(const std::string& video_id, ClassId c, int label) const {
    if (!has_video(video_id)) {
      throw Error("label references unknown video '" + video_id + "'");
    }
    if (c < 0 || c >= num_classes_) {
      throw Error("class_id " + std::to_string(c) + " out of range [0, " +
                  std::to_string(num_classes_) + ")");
    }
    if (label != 0 && label != 1) {
      throw Error("label must be 0 or 1");
    }
  }

  std::vector<Video> videos_;
  int num_classes_ = 0;
  std::vector<VideoLabel> video_labels_;
  std::vector<SegmentLabel> segment_labels_;
  std::size_t segment_length_ = kDefaultSegmentLength;
  std::size_t dim_ = 0;
  std::unordered_map<std::string, std::size_t> index_;
};

// Full windows at starts 0, stride, 2*stride, ...; the incomplete tail is dropped.
inline std::vector<SegmentRef> enumerate_segments(const Video& video, std::size_t length,
                                                  std::size_t stride) {
  if (length == 0 || stride == 0) {
    throw Error("segment length and stride must be >= 1");
  }
  std::vector<SegmentRef> out;
  const auto frames = video.frame_count();
  for (std::size_t start = 0; start + length <= frames; start += stride) {
    out.push_back({video.id, start, length});
  }
  return out;
}

// Column means of an n x d block stored row-major.
inline std::vector<double> mean_pool(std::span<const double> rows, std::size_t n, std::size_t d) {
  if (n == 0) {
    throw Error("mean_pool of empty input");
  }
  assert(rows.size() == n * d);
  std::vector<double> out(d, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      out[c] += rows[r * d + c];
    }
  }
  for (auto& x : out) {
    x /= static_cast<double>(n);
  }
  return out;
}

inline std::vector<double> mean_pool(const Matrix& rows) {
  return mean_pool(rows.data(), rows.rows(), rows.cols());
}

inline std::vector<double> segment_encoding(const Corpus& corpus, const SegmentRef& segment) {
  corpus.check_segment_bounds(segment);
  const auto& v = corpus.video(segment.video_id);
  return mean_pool(v.frames.rows_block(segment.start, segment.length), segment.length, v.dim());
}

inline std::vector<double> video_encoding(const Video& video) { return mean_pool(video.frames); }

}  // namespace ccrl
