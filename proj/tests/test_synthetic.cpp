#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <sstream>

#include "support.hpp"

using namespace ccrl;
using namespace ccrl::testing;
using Catch::Matchers::WithinAbs;

namespace {

std::string serialize(const Corpus& c) {
  std::ostringstream out;
  write_videos(out, c.videos());
  write_video_labels(out, c.video_labels());
  write_segment_labels(out, c.segment_labels());
  return out.str();
}

std::size_t total_segments(const Corpus& c, std::size_t length) {
  std::size_t n = 0;
  for (const auto& v : c.videos()) n += enumerate_segments(v, length, length).size();
  return n;
}

}  // namespace

TEST_CASE("same seed gives byte-identical corpora", "[synthetic]") {
  const auto a = generate(small_spec(5));
  const auto b = generate(small_spec(5));
  CHECK(serialize(a.corpus) == serialize(b.corpus));
  CHECK(a.truth.positives == b.truth.positives);
  CHECK(a.truth.class_prototypes == b.truth.class_prototypes);
  CHECK(serialize(generate(small_spec(6)).corpus) != serialize(a.corpus));
}

TEST_CASE("100 videos of 25 frames give 500 segments", "[synthetic]") {
  GeneratorSpec s;
  s.num_videos = 100;
  s.frames_per_video = 25;
  s.segment_length = 5;
  const auto g = generate(s);
  CHECK(total_segments(g.corpus, 5) == 500);
}

TEST_CASE("zero noise positives equal their class prototype", "[synthetic]") {
  GeneratorSpec s = small_spec();
  s.noise_sigma = 0.0;
  s.clusters = 1;
  s.num_classes = 1;
  const auto g = generate(s);
  REQUIRE_FALSE(g.truth.positives.empty());
  const auto proto = g.truth.class_prototypes.row(0);
  for (const auto& [seg, c] : g.truth.positives) {
    const auto enc = segment_encoding(g.corpus, seg);
    for (std::size_t j = 0; j < enc.size(); ++j) REQUIRE(enc[j] == proto[j]);
  }
}

TEST_CASE("zero noise positives of one class have cosine 1", "[synthetic][property]") {
  GeneratorSpec s = small_spec();
  s.noise_sigma = 0.0;
  const auto g = generate(s);
  std::vector<std::vector<double>> first(s.num_classes);
  for (const auto& [seg, c] : g.truth.positives) {
    const auto enc = segment_encoding(g.corpus, seg);
    if (first[c].empty()) {
      first[c] = enc;
    } else {
      REQUIRE_THAT(cosine_similarity(first[c], enc), WithinAbs(1.0, 1e-12));
    }
  }
}

TEST_CASE("ground truth agrees with video labels", "[synthetic][property]") {
  for (std::uint64_t seed : {1, 2, 3, 4}) {
    const auto g = generate(small_spec(seed));
    std::set<std::pair<std::string, ClassId>> positive_videos;
    for (const auto& l : g.corpus.video_labels()) {
      if (l.label == 1) positive_videos.insert({l.video_id, l.class_id});
    }
    std::set<std::pair<std::string, ClassId>> from_truth;
    for (const auto& [seg, c] : g.truth.positives) {
      REQUIRE(positive_videos.contains({seg.video_id, c}));
      from_truth.insert({seg.video_id, c});
    }
    CHECK(from_truth == positive_videos);
    CHECK(g.corpus.video_labels().size() == g.corpus.videos().size() * g.corpus.num_classes());
  }
}

TEST_CASE("segment labels are a cluster-local sample of the requested size", "[synthetic][property]") {
  for (double rate : {0.02, 0.1, 0.3, 1.0}) {
    auto s = small_spec(9);
    s.label_rate = rate;
    const auto g = generate(s);
    const double pool = static_cast<double>(s.num_videos) * s.segments_per_video() *
                        s.classes_per_cluster();
    const double expected = rate * pool;
    CHECK(std::abs(static_cast<double>(g.corpus.segment_labels().size()) - expected) <= 1.0);

    std::set<std::pair<SegmentRef, ClassId>> positives(g.truth.positives.begin(),
                                                       g.truth.positives.end());
    std::map<std::string, int> cluster_of_video;
    for (const auto& [seg, c] : g.truth.positives) {
      cluster_of_video[seg.video_id] = g.truth.cluster_of_class[c];
    }
    for (const auto& l : g.corpus.segment_labels()) {
      REQUIRE(g.truth.cluster_of_class[l.class_id] == cluster_of_video.at(l.segment.video_id));
      REQUIRE(l.label == (positives.contains({l.segment, l.class_id}) ? 1 : 0));
    }
  }
}

TEST_CASE("every video holds a positive of its class", "[synthetic]") {
  const auto g = generate(small_spec());
  std::set<std::string> with_positive;
  for (const auto& [seg, c] : g.truth.positives) with_positive.insert(seg.video_id);
  CHECK(with_positive.size() == g.corpus.videos().size());
}

TEST_CASE("generator rejects invalid specs", "[synthetic]") {
  auto bad = small_spec();
  bad.clusters = 4;  // does not divide 6
  CHECK_THROWS(generate(bad));
  bad = small_spec();
  bad.label_rate = 0.0;
  CHECK_THROWS(generate(bad));
  bad = small_spec();
  bad.noise_sigma = -1.0;
  CHECK_THROWS(generate(bad));
  bad = small_spec();
  bad.class_offset_ratio = 0.3;
  CHECK_THROWS(generate(bad));
  bad = small_spec();
  bad.frames_per_video = 3;
  bad.segment_length = 5;
  CHECK_THROWS(generate(bad));
}
