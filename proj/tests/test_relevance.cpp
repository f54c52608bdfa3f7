#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "support.hpp"

using namespace ccrl;
using namespace ccrl::testing;
using Catch::Matchers::WithinAbs;

namespace {

struct Instance {
  Matrix x;
  std::vector<double> g, h;
};

// Random node statistics; columns in `categorical` hold small integer codes.
Instance random_instance(std::mt19937_64& rng, std::size_t rows, std::size_t cols,
                         const std::vector<std::size_t>& categorical = {}) {
  Instance in{Matrix(rows, cols), std::vector<double>(rows), std::vector<double>(rows)};
  std::uniform_int_distribution<int> small(0, 5);
  std::uniform_real_distribution<double> u(0.02, 0.98);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t f = 0; f < cols; ++f) {
      const bool cat = std::find(categorical.begin(), categorical.end(), f) != categorical.end();
      // Coarse values so that ties between rows are common.
      in.x(i, f) = cat ? small(rng) : static_cast<double>(small(rng)) * 0.5 + (rng() % 3 == 0 ? 0.25 : 0.0);
    }
    const double p = u(rng);
    const int y = static_cast<int>(rng() % 2);
    in.g[i] = p - y;
    in.h[i] = p * (1 - p);
  }
  return in;
}

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  return idx;
}

// Labelled rows from a small synthetic corpus.
TrainingRows synthetic_training(std::uint64_t seed) {
  const auto g = generate(small_spec(seed));
  const auto m = train_video_model(g.corpus, {.epochs = 50, .learning_rate = 10.0});
  return build_training_rows(g.corpus, LabeledStore(g.corpus), predict_video_scores(m, g.corpus));
}

Corpus separable_segments() {
  std::vector<Video> videos;
  std::vector<SegmentLabel> labels;
  for (int i = 0; i < 6; ++i) {
    const auto id = "v" + std::to_string(i);
    const double sign = i % 2 ? 1.0 : -1.0;
    videos.push_back(constant_video(id, 5, {sign * (1.0 + 0.1 * i), 0.5}));
    labels.push_back(seg_label(id, 0, 5, 0, i % 2));
  }
  return Corpus(videos, 2, {}, labels);
}

}  // namespace

TEST_CASE("binary cross-entropy values", "[gbm]") {
  CHECK(bce_loss(std::vector<double>{1.0}, std::vector<int>{1}) == 0.0);
  CHECK_THAT(bce_loss(std::vector<double>{0.5}, std::vector<int>{1}), WithinAbs(std::log(2.0), 1e-12));
  CHECK_THAT(bce_loss(std::vector<double>{0.9, 0.2}, std::vector<int>{1, 0}),
             WithinAbs((-std::log(0.9) - std::log(0.8)) / 2, 1e-12));
  CHECK_THAT(bce_loss(std::vector<double>{0.9, 0.2}, std::vector<int>{1, 0}), WithinAbs(0.164252, 1e-6));
  CHECK(std::isfinite(bce_loss(std::vector<double>{0.0}, std::vector<int>{1})));
}

TEST_CASE("zero rounds predict the label mean", "[gbm]") {
  const auto x = Matrix::from_rows({{0.0}, {1.0}, {2.0}, {3.0}});
  const std::vector<int> y{1, 0, 0, 0};
  const auto m = train_gbm(x, y, {.rounds = 0}, {});
  for (std::size_t i = 0; i < 4; ++i) CHECK_THAT(predict_gbm(m, x.row(i)), WithinAbs(0.25, 1e-15));
}

TEST_CASE("one-row Newton step", "[gbm]") {
  const auto x = Matrix::from_rows({{1.0}});
  double g = 0, h = 0;
  logistic_grad_hess(0.0, 1, g, h);
  CHECK(g == -0.5);
  CHECK(h == 0.25);
  const auto tree = grow_tree(x, std::vector<double>{g}, std::vector<double>{h},
                              {.max_depth = 1, .lambda = 1.0}, {});
  REQUIRE(tree.nodes.size() == 1);
  CHECK_THAT(tree.nodes[0].value, WithinAbs(0.4, 1e-15));
  GbmModel m{{tree}, 1.0, 0.0, 1, {}};
  CHECK_THAT(predict_gbm(m, x.row(0)), WithinAbs(0.598687660112452, 1e-12));

  GbmModel empty{{}, 0.1, 0.0, 1, {}};
  CHECK(predict_gbm(empty, x.row(0)) == 0.5);
  CHECK_THROWS(predict_gbm(empty, std::vector<double>{1.0, 2.0}));
}

TEST_CASE("two rows split on the separating feature", "[gbm]") {
  const auto x = Matrix::from_rows({{5.0, 0.0}, {5.0, 1.0}});
  const std::vector<int> y{0, 1};
  const auto m = train_gbm(x, y, {.rounds = 1, .max_depth = 1, .min_child_weight = 0.0}, {});
  REQUIRE(m.trees.size() == 1);
  const auto& root = m.trees[0].nodes[0];
  CHECK(root.feature == 1);
  CHECK(root.threshold == 0.5);
  CHECK(predict_gbm(m, x.row(1)) > predict_gbm(m, x.row(0)));

  std::vector<double> g(2), h(2);
  for (int i = 0; i < 2; ++i) logistic_grad_hess(0.0, y[i], g[i], h[i]);
  const auto s = find_best_split(x, all_rows(2), g, h, {.min_child_weight = 0.0}, {});
  CHECK_THAT(s.gain, WithinAbs(oracle::best_gain(x, g, h, 1.0, 0.0), 1e-15));
}

TEST_CASE("exact greedy matches brute force on numeric features", "[gbm][property]") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng() % 63;
    const std::size_t f = 1 + rng() % 8;
    const auto in = random_instance(rng, n, f);
    const GbmHyper hyper{.lambda = (trial % 3) * 0.5, .min_child_weight = (trial % 4) * 0.2};
    const auto s = find_best_split(in.x, all_rows(n), in.g, in.h, hyper, {});
    const double brute = oracle::best_gain(in.x, in.g, in.h, hyper.lambda, hyper.min_child_weight);
    if (!(brute > 0.0)) {
      REQUIRE_FALSE(s.valid);
      continue;
    }
    REQUIRE(s.valid);
    REQUIRE_THAT(s.gain, WithinAbs(brute, 1e-12));
  }
}

TEST_CASE("categorical partitioning matches exhaustive subsets", "[gbm][property]") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng() % 40;
    const std::size_t f = 1 + rng() % 3;
    const auto in = random_instance(rng, n, f, {0});
    const GbmHyper hyper{.lambda = (trial % 2) * 1.0, .min_child_weight = 0.0};
    const auto s = find_best_split(in.x, all_rows(n), in.g, in.h, hyper, std::vector<std::size_t>{0});
    const double brute = oracle::best_gain(in.x, in.g, in.h, hyper.lambda, 0.0, {0});
    if (!(brute > 1e-12)) continue;
    REQUIRE(s.valid);
    REQUIRE_THAT(s.gain, WithinAbs(brute, 1e-12));
  }
}

TEST_CASE("split ties resolve to the lowest feature then threshold", "[gbm]") {
  // Columns 0 and 1 are identical, so every split gain ties.
  const auto x = Matrix::from_rows({{0.0, 0.0}, {1.0, 1.0}, {2.0, 2.0}, {3.0, 3.0}});
  const std::vector<double> g{-1, -1, 1, 1}, h{1, 1, 1, 1};
  const auto s = find_best_split(x, all_rows(4), g, h, {.lambda = 1.0, .min_child_weight = 0.0}, {});
  CHECK(s.feature == 0);
  CHECK(s.threshold == 1.5);
  // Symmetric pattern: splits at 0.5 and 2.5 tie; the lower threshold wins.
  const std::vector<double> g2{-1, 0, 0, 1}, h2{1, 0.25, 0.25, 1};
  const auto t = find_best_split(x, all_rows(4), g2, h2, {.lambda = 0.0, .min_child_weight = 0.0}, {});
  CHECK(t.feature == 0);
  CHECK(t.threshold == 0.5);
}

TEST_CASE("training loss is non-increasing", "[gbm][property]") {
  for (std::uint64_t seed : {1, 2}) {
    const auto tr = synthetic_training(seed);
    std::vector<double> history;
    train_ccrl(tr.rows, tr.labels, {.rounds = 20}, &history);
    REQUIRE(history.size() == 21);
    for (std::size_t i = 1; i < history.size(); ++i) REQUIRE(history[i] <= history[i - 1] + 1e-9);
  }
}

TEST_CASE("boosting gradient and hessian match finite differences", "[gbm][property]") {
  std::mt19937_64 rng(3);
  const double step = 1e-6;
  for (int point = 0; point < 20; ++point) {
    const double z = std::uniform_real_distribution<double>(-4, 4)(rng);
    const int y = point % 2;
    auto loss = [&](double t) { return bce_loss(std::vector<double>{sigmoid(t)}, std::vector<int>{y}); };
    double g = 0, h = 0;
    logistic_grad_hess(z, y, g, h);
    const double fd_g = (loss(z + step) - loss(z - step)) / (2 * step);
    double gp = 0, gm = 0, unused = 0;
    logistic_grad_hess(z + step, y, gp, unused);
    logistic_grad_hess(z - step, y, gm, unused);
    const double fd_h = (gp - gm) / (2 * step);
    REQUIRE(std::abs(g - fd_g) / std::max(std::abs(g), 1e-8) < 1e-4);
    REQUIRE(std::abs(h - fd_h) / std::max(std::abs(h), 1e-8) < 1e-4);
  }
}

TEST_CASE("predictions ignore class relabeling", "[gbm][property]") {
  const auto tr = synthetic_training(4);
  std::vector<int> perm{3, 5, 0, 4, 1, 2};
  auto relabeled = tr.rows;
  for (auto& r : relabeled) r.class_id = perm[static_cast<std::size_t>(r.class_id)];
  const auto a = train_ccrl(tr.rows, tr.labels, {.rounds = 30});
  const auto b = train_ccrl(relabeled, tr.labels, {.rounds = 30});
  CHECK(predict_ccrl(a, tr.rows) == predict_ccrl(b, relabeled));
}

TEST_CASE("unused features do not affect predictions", "[gbm]") {
  const auto tr = synthetic_training(5);
  const auto m = train_ccrl(tr.rows, tr.labels, {.rounds = 10, .max_depth = 2});
  std::vector<bool> used(m.feature_count, false);
  for (const auto& t : m.trees) {
    for (const auto& n : t.nodes) {
      if (!n.is_leaf()) used[static_cast<std::size_t>(n.feature)] = true;
    }
  }
  const auto x = feature_matrix(tr.rows);
  std::size_t changed = 0;
  for (std::size_t f = 0; f < m.feature_count; ++f) {
    if (used[f]) continue;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      std::vector<double> row(x.row(i).begin(), x.row(i).end());
      const double before = predict_gbm(m, row);
      row[f] += 123.0;
      REQUIRE(predict_gbm(m, row) == before);
      ++changed;
    }
  }
  CHECK(changed > 0);
}

TEST_CASE("training is deterministic and serializes losslessly", "[gbm]") {
  const auto tr = synthetic_training(6);
  const auto a = train_ccrl(tr.rows, tr.labels, {.rounds = 15});
  const auto b = train_ccrl(tr.rows, tr.labels, {.rounds = 15});
  CHECK(to_json(a).dump() == to_json(b).dump());
  const auto back = gbm_from_json(nlohmann::json::parse(to_json(a).dump()));
  CHECK(back == a);
  CHECK(predict_ccrl(back, tr.rows) == predict_ccrl(a, tr.rows));
  CHECK_THROWS(gbm_from_json(nlohmann::json{{"type", "baseline_logistic"}}));
}

TEST_CASE("degenerate and invalid training input", "[gbm]") {
  const auto x = Matrix::from_rows({{0.0}, {1.0}});
  CHECK_THROWS(train_gbm(x, std::vector<int>{1, 1}, {}, {}));
  CHECK_THROWS(train_gbm(x, std::vector<int>{1}, {}, {}));
  CHECK_THROWS(train_gbm(x, std::vector<int>{0, 1}, {.max_depth = 0}, {}));
  CHECK_THROWS(train_gbm(x, std::vector<int>{0, 1}, {.learning_rate = 0.0}, {}));
}

TEST_CASE("baseline heads", "[baseline]") {
  const auto corpus = separable_segments();
  const auto m = train_baseline(corpus, {});
  const auto rows = build_pair_rows(all_candidates(corpus, 5, 5),
                                    Matrix(corpus.videos().size(), 2, 0.5), LabeledStore(corpus), corpus);
  std::size_t correct = 0, total = 0;
  for (const auto& r : rows) {
    const double p = predict_baseline(m, r);
    if (r.class_id == 1) {
      CHECK(p == 0.5);  // class without labels keeps its zero head
      continue;
    }
    const bool positive = r.segment.video_id.back() % 2 == 1;
    correct += (p > 0.5) == positive ? 1 : 0;
    ++total;
  }
  CHECK(correct == total);
}

TEST_CASE("baseline gradient matches finite differences", "[baseline][property]") {
  const auto g = generate(small_spec(2));
  const auto problem = baseline_problem(g.corpus);
  std::mt19937_64 rng(17);
  const double step = 1e-6, l2 = 1e-3;
  for (int point = 0; point < 20; ++point) {
    LogisticHeads m(static_cast<std::size_t>(g.corpus.num_classes()), g.corpus.dim());
    for (auto& w : m.weights.data()) w = std::uniform_real_distribution<double>(-0.5, 0.5)(rng);
    LogisticHeads grad;
    logistic_gradient(m, problem.inputs, problem.examples, l2, grad);
    const std::size_t i = rng() % m.weights.data().size();
    auto plus = m, minus = m;
    plus.weights.data()[i] += step;
    minus.weights.data()[i] -= step;
    const double fd = (logistic_objective(plus, problem.inputs, problem.examples, l2) -
                       logistic_objective(minus, problem.inputs, problem.examples, l2)) / (2 * step);
    const double a = grad.weights.data()[i];
    REQUIRE(std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-8}) < 1e-4);
  }
}

TEST_CASE("baseline loss is non-increasing at lr 0.1", "[baseline][property]") {
  std::vector<double> history;
  train_baseline(separable_segments(), {.epochs = 200, .learning_rate = 0.1}, &history);
  for (std::size_t i = 1; i < history.size(); ++i) REQUIRE(history[i] <= history[i - 1] + 1e-12);
}

TEST_CASE("baseline serialization", "[baseline]") {
  const auto m = train_baseline(separable_segments(), {.epochs = 20});
  CHECK(baseline_from_json(nlohmann::json::parse(to_json(m).dump())) == m);
}

TEST_CASE("ensemble averaging", "[ensemble]") {
  const Predictions a{{0, {"v", 0, 5}, 0.2}, {0, {"v", 5, 5}, 0.8}};
  const Predictions b{{0, {"v", 0, 5}, 0.4}, {0, {"v", 5, 5}, 0.6}};
  const Predictions one[] = {a};
  CHECK(ensemble_average(one) == a);
  const Predictions same[] = {a, a};
  CHECK(ensemble_average(same) == a);
  const Predictions pair[] = {a, b};
  const auto avg = ensemble_average(pair);
  CHECK_THAT(avg[0].score, WithinAbs(0.3, 1e-15));
  CHECK_THAT(avg[1].score, WithinAbs(0.7, 1e-15));

  const Predictions shifted{{0, {"v", 5, 5}, 0.4}, {0, {"v", 0, 5}, 0.6}};
  const Predictions bad[] = {a, shifted};
  CHECK_THROWS(ensemble_average(bad));
  CHECK_THROWS(ensemble_average(std::span<const Predictions>{}));
}
