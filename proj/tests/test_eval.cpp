#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "support.hpp"

using namespace ccrl;
using namespace ccrl::testing;
using Catch::Matchers::WithinAbs;

namespace {

const Corpus& line_corpus() {
  static const Corpus c({constant_video("a", 10, {1.0}), constant_video("b", 10, {1.0})}, 3, {}, {}, 1);
  return c;
}

std::vector<std::size_t> starts(const RankedList& l) {
  std::vector<std::size_t> out;
  for (const auto& it : l.items) out.push_back(it.segment.start);
  return out;
}

}  // namespace

TEST_CASE("ranking order, ties and cap", "[eval]") {
  const Predictions p{{0, {"a", 0, 1}, 0.1}, {0, {"a", 1, 1}, 0.9}, {0, {"a", 2, 1}, 0.5}};
  CHECK(starts(rank_segments(p, 1)[0]) == std::vector<std::size_t>{1, 2, 0});

  const Predictions tied{{0, {"b", 0, 1}, 0.7}, {0, {"a", 3, 1}, 0.7}, {0, {"a", 1, 1}, 0.7}};
  const auto l = rank_segments(tied, 1)[0];
  CHECK(l.items[0].segment == SegmentRef{"a", 1, 1});
  CHECK(l.items[1].segment == SegmentRef{"a", 3, 1});
  CHECK(l.items[2].segment == SegmentRef{"b", 0, 1});

  Predictions five;
  for (std::size_t i = 0; i < 5; ++i) five.push_back({0, {"a", i, 1}, static_cast<double>(i)});
  CHECK(starts(rank_segments(five, 1, 3)[0]) == std::vector<std::size_t>{4, 3, 2});
}

TEST_CASE("ranking rejects bad predictions", "[eval]") {
  CHECK_THROWS(rank_segments(Predictions{{0, {"a", 0, 1}, 0.1}, {0, {"a", 0, 1}, 0.2}}, 1));
  CHECK_THROWS(rank_segments(Predictions{{0, {"a", 0, 1}, std::nan("")}}, 1));
  CHECK_THROWS(rank_segments(Predictions{{2, {"a", 0, 1}, 0.1}}, 2));
}

TEST_CASE("average precision examples", "[eval]") {
  CHECK(average_precision(std::vector<int>{1, 1, 0}, 2) == 1.0);
  CHECK_THAT(average_precision(std::vector<int>{1, 0, 1, 0}, 2), WithinAbs(5.0 / 6.0, 1e-15));
  CHECK(average_precision(std::vector<int>{1}, 2) == 0.5);
  CHECK(average_precision(std::vector<int>{}, 3) == 0.0);
  CHECK_THROWS(average_precision(std::vector<int>{1}, 0));
}

TEST_CASE("mean average precision", "[eval]") {
  CHECK(mean_average_precision(std::vector<double>{0.4}, std::vector<std::size_t>{2}) == 0.4);
  CHECK(mean_average_precision(std::vector<double>{1.0, 0.5}, std::vector<std::size_t>{1, 3}) == 0.75);
  CHECK(mean_average_precision(std::vector<double>{1.0, 0.0}, std::vector<std::size_t>{1, 0}) == 1.0);
  CHECK_THROWS(mean_average_precision(std::vector<double>{0.0}, std::vector<std::size_t>{0}));
  CHECK(compensated_sum(std::vector<double>{1e16, 1.0, -1e16}) == 1.0);
}

TEST_CASE("evaluate end to end", "[eval]") {
  const GroundTruthPositives truth{{{"a", 0, 1}, 0}, {{"b", 2, 1}, 0}, {{"a", 4, 1}, 1}};
  Predictions perfect;
  for (const auto& [seg, c] : truth) perfect.push_back({c, seg, 1.0});
  const auto r = evaluate(perfect, truth, line_corpus());
  CHECK(r.map == 1.0);
  CHECK(r.classes_skipped == std::vector<ClassId>{2});
  CHECK(*r.per_class[0].recall_at_cap == 1.0);
  CHECK_FALSE(r.per_class[2].ap.has_value());

  const Predictions only_class0{{0, {"a", 0, 1}, 1.0}};
  const auto partial = evaluate(only_class0, truth, line_corpus());
  CHECK(*partial.per_class[1].ap == 0.0);
  CHECK(*partial.per_class[0].ap == 0.5);
  CHECK(partial.map == 0.25);

  CHECK_THROWS(evaluate(Predictions{{0, {"zz", 0, 1}, 1.0}}, truth, line_corpus()));
  CHECK_THROWS(evaluate(perfect, {{{"a", 0, 1}, 7}}, line_corpus()));
}

TEST_CASE("evaluate matches the literal oracle", "[eval][property]") {
  std::mt19937_64 rng(42);
  int compared = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const auto in = random_map_instance(rng, 12, 3);
    const auto expected = oracle_map(in);
    if (!expected) {
      CHECK_THROWS(evaluate(in.predictions, in.truth, in.corpus, in.cap));
      continue;
    }
    const auto got = evaluate(in.predictions, in.truth, in.corpus, in.cap);
    REQUIRE_THAT(got.map, WithinAbs(*expected, 1e-12));
    ++compared;
  }
  CHECK(compared > 200);
}

TEST_CASE("AP depends only on the ranking", "[eval][property]") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    auto in = random_map_instance(rng);
    if (!oracle_map(in)) continue;
    const auto base = evaluate(in.predictions, in.truth, in.corpus, in.cap);
    for (auto transform : {+[](double s) { return 3.0 * s - 1.0; }, +[](double s) { return std::exp(5.0 * s); },
                           +[](double s) { return s * s * s + s; }}) {
      auto moved = in.predictions;
      for (auto& p : moved) p.score = transform(p.score);
      REQUIRE(evaluate(moved, in.truth, in.corpus, in.cap).map == base.map);
    }
  }
}

TEST_CASE("moving a relevant item up never lowers AP", "[eval][property]") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + rng() % 15;
    std::vector<int> rel(n);
    std::size_t hits = 0;
    for (auto& r : rel) hits += (r = static_cast<int>(rng() % 2));
    const std::size_t n_c = hits + rng() % 3;
    if (n_c == 0) continue;
    const double before = average_precision(rel, n_c);
    for (std::size_t i = 1; i < n; ++i) {
      if (rel[i] == 1 && rel[i - 1] == 0) {
        auto swapped = rel;
        std::swap(swapped[i], swapped[i - 1]);
        REQUIRE(average_precision(swapped, n_c) >= before);
      }
    }
  }
}

TEST_CASE("mAP ignores class relabeling and AP is bounded by recall", "[eval][property]") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    auto in = random_map_instance(rng);
    if (!oracle_map(in)) continue;
    const auto base = evaluate(in.predictions, in.truth, in.corpus, in.cap);
    for (const auto& c : base.per_class) {
      if (c.ap) REQUIRE(*c.ap <= *c.recall_at_cap + 1e-15);
    }
    const int C = in.corpus.num_classes();
    std::vector<int> perm(static_cast<std::size_t>(C));
    for (int c = 0; c < C; ++c) perm[c] = c;
    std::shuffle(perm.begin(), perm.end(), rng);
    auto preds = in.predictions;
    for (auto& p : preds) p.class_id = perm[p.class_id];
    auto truth = in.truth;
    for (auto& t : truth) t.second = perm[t.second];
    REQUIRE_THAT(evaluate(preds, truth, in.corpus, in.cap).map, WithinAbs(base.map, 1e-15));
  }
}

TEST_CASE("report JSON shape", "[eval]") {
  const GroundTruthPositives truth{{{"a", 0, 1}, 0}};
  const auto j = to_json(evaluate(Predictions{{0, {"a", 0, 1}, 1.0}}, truth, line_corpus(), 5));
  CHECK(j["map"] == 1.0);
  CHECK(j["cap"] == 5);
  CHECK(j["per_class"].size() == 3);
  CHECK(j["per_class"][1]["ap"].is_null());
  CHECK(j["classes_skipped"] == nlohmann::json{1, 2});
}
