#pragma once

// End-to-end localization pipeline:
//   corpus (generated or loaded) -> video model -> candidates -> pair features
//   -> CCRL + baseline -> predictions -> evaluation.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>

#include <json.hpp>

#include "ccrl/candgen.hpp"
#include "ccrl/class_features.hpp"
#include "ccrl/eval.hpp"
#include "ccrl/io.hpp"
#include "ccrl/relevance.hpp"
#include "ccrl/synthetic.hpp"

namespace ccrl {

enum class CandidateMode { kWithCg, kWithoutCg };

inline std::string to_string(CandidateMode m) {
  return m == CandidateMode::kWithCg ? "with_cg" : "without_cg";
}

inline CandidateMode parse_mode(const std::string& s) {
  if (s == "with_cg") return CandidateMode::kWithCg;
  if (s == "without_cg") return CandidateMode::kWithoutCg;
  throw Error("unknown mode '" + s + "' (expected with_cg or without_cg)");
}

struct PipelineConfig {
  std::filesystem::path out_dir = "ccrl_run";
  // Either a generator spec or an existing corpus directory plus ground truth.
  std::optional<GeneratorSpec> generator = GeneratorSpec{};
  std::filesystem::path corpus_dir;
  std::filesystem::path ground_truth;
  int num_classes = 0;

  std::size_t segment_length = kDefaultSegmentLength;
  std::size_t stride = kDefaultStride;
  std::size_t k = 10;
  CandidateMode mode = CandidateMode::kWithCg;
  std::size_t cap = kDefaultCap;
  bool ablate_similarity = false;

  VideoTrainOptions video;
  GbmHyper gbm;
  BaselineTrainOptions baseline;
  std::uint64_t seed = 7;

  // Pushes the top-level seed and segment length into every stage.
  void propagate() {
    if (generator) {
      generator->seed = seed;
      generator->segment_length = static_cast<int>(segment_length);
    }
    video.seed = seed;
    gbm.seed = seed;
    baseline.seed = seed;
  }
};

class StageError : public Error {
public:
  StageError(const std::string& stage, const std::string& what)
      : Error("stage '" + stage + "': " + what), stage_(stage) {}
  const std::string& stage() const { return stage_; }

private:
  std::string stage_;
};

template <class F>
auto run_stage(const std::string& name, F&& f) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

// Everything a run produces, kept in memory.
struct PipelineArtifacts {
  VideoModel video_model;
  Matrix video_scores;
  CandidateSet candidates;
  RecallReport candidate_recall;
  TrainingRows training;
  GbmModel ccrl;
  BaselineModel baseline;
  std::vector<PairFeatureRow> pair_rows;
  Predictions ccrl_predictions;
  Predictions baseline_predictions;
  Predictions ensemble_predictions;
  EvalReport ccrl_report;
  EvalReport baseline_report;
  EvalReport ensemble_report;
};

// Runs every stage after corpus acquisition without touching the filesystem.
inline PipelineArtifacts run_stages(const PipelineConfig& cfg, const Corpus& corpus,
                                    const GroundTruthPositives& truth) {
  PipelineArtifacts a;
  a.video_model = run_stage("train-video", [&] { return train_video_model(corpus, cfg.video); });
  a.video_scores = run_stage("train-video", [&] { return predict_video_scores(a.video_model, corpus); });
  a.candidates = run_stage("candidates", [&] {
    return cfg.mode == CandidateMode::kWithCg
               ? select_candidates(a.video_scores, corpus, cfg.k, cfg.segment_length, cfg.stride)
               : all_candidates(corpus, cfg.segment_length, cfg.stride);
  });
  a.candidate_recall = run_stage("candidates", [&] { return candidate_recall(a.candidates, truth); });

  const LabeledStore store = run_stage("build-features", [&] { return LabeledStore(corpus); });
  a.training = run_stage("build-features", [&] { return build_training_rows(corpus, store, a.video_scores); });
  a.pair_rows = run_stage("build-features", [&] {
    return build_pair_rows(a.candidates, a.video_scores, store, corpus);
  });
  if (cfg.ablate_similarity) {
    zero_similarity_columns(a.training.rows);
    zero_similarity_columns(a.pair_rows);
  }

  a.ccrl = run_stage("train-ccrl", [&] { return train_ccrl(a.training.rows, a.training.labels, cfg.gbm); });
  a.baseline = run_stage("train-baseline", [&] { return train_baseline(corpus, cfg.baseline); });

  run_stage("predict", [&] {
    a.ccrl_predictions = to_predictions(a.pair_rows, predict_ccrl(a.ccrl, a.pair_rows));
    a.baseline_predictions = to_predictions(a.pair_rows, predict_baseline(a.baseline, a.pair_rows));
    const Predictions both[] = {a.ccrl_predictions, a.baseline_predictions};
    a.ensemble_predictions = ensemble_average(both);
    return 0;
  });

  run_stage("evaluate", [&] {
    a.ccrl_report = evaluate(a.ccrl_predictions, truth, corpus, cfg.cap);
    a.baseline_report = evaluate(a.baseline_predictions, truth, corpus, cfg.cap);
    a.ensemble_report = evaluate(a.ensemble_predictions, truth, corpus, cfg.cap);
    return 0;
  });
  return a;
}

struct CorpusWithTruth {
  Corpus corpus;
  GroundTruthPositives truth;
};

// Generates (and saves) or loads the corpus named by the config.
inline CorpusWithTruth acquire_corpus(const PipelineConfig& cfg, bool write) {
  return run_stage("generate", [&]() -> CorpusWithTruth {
    if (cfg.generator) {
      auto g = generate(*cfg.generator);
      if (write) {
        io::save_corpus(io::CorpusPaths::in(cfg.out_dir / "corpus"), g.corpus);
        io::write_file(cfg.out_dir / "ground_truth.csv",
                       [&](std::ostream& o) { io::write_ground_truth(o, g.truth.positives); });
      }
      return {std::move(g.corpus), std::move(g.truth.positives)};
    }
    if (cfg.corpus_dir.empty() || cfg.ground_truth.empty() || cfg.num_classes <= 0) {
      throw Error("config needs either a generator spec or corpus_dir, ground_truth and num_classes");
    }
    auto corpus = io::load_corpus(io::CorpusPaths::in(cfg.corpus_dir), cfg.num_classes, cfg.segment_length);
    auto truth = io::read_file(cfg.ground_truth, io::read_ground_truth);
    return {std::move(corpus), std::move(truth)};
  });
}

inline void write_artifacts(const PipelineConfig& cfg, const Corpus& corpus, const PipelineArtifacts& a) {
  namespace fs = std::filesystem;
  const fs::path& out = cfg.out_dir;
  run_stage("write-artifacts", [&] {
    io::write_json(out / "video_model.json", to_json(a.video_model));
    io::write_file(out / "candidates.csv", [&](std::ostream& o) { io::write_candidates(o, a.candidates); });
    io::write_file(out / "train_features.csv",
                   [&](std::ostream& o) { io::write_features(o, a.training.rows, a.training.labels); });
    io::write_file(out / "features.csv", [&](std::ostream& o) { io::write_features(o, a.pair_rows); });
    io::write_json(out / "ccrl_model.json", to_json(a.ccrl));
    io::write_json(out / "baseline_model.json", to_json(a.baseline));
    io::write_file(out / "predictions.csv",
                   [&](std::ostream& o) { io::write_predictions(o, a.ccrl_predictions); });
    io::write_file(out / "baseline_predictions.csv",
                   [&](std::ostream& o) { io::write_predictions(o, a.baseline_predictions); });
    io::write_file(out / "ensemble_predictions.csv",
                   [&](std::ostream& o) { io::write_predictions(o, a.ensemble_predictions); });
    io::write_json(out / "report.json", to_json(a.ccrl_report));
    io::write_json(out / "baseline_report.json", to_json(a.baseline_report));
    io::write_json(out / "ensemble_report.json", to_json(a.ensemble_report));
    nlohmann::json summary = {
        {"mode", to_string(cfg.mode)},
        {"k", a.candidates.k},
        {"num_videos", corpus.videos().size()},
        {"num_classes", corpus.num_classes()},
        {"pair_count", a.pair_rows.size()},
        {"training_rows", a.training.rows.size()},
        {"candidate_recall", a.candidate_recall.mean},
        {"map_ccrl", a.ccrl_report.map},
        {"map_baseline", a.baseline_report.map},
        {"map_ensemble", a.ensemble_report.map},
    };
    io::write_json(out / "summary.json", summary);
    return 0;
  });
}

// Full run with every intermediate artifact written under cfg.out_dir.
inline PipelineArtifacts run_pipeline(const PipelineConfig& cfg) {
  auto [corpus, truth] = acquire_corpus(cfg, true);
  auto artifacts = run_stages(cfg, corpus, truth);
  write_artifacts(cfg, corpus, artifacts);
  return artifacts;
}

// ---- config JSON ----

inline GeneratorSpec generator_from_json(const nlohmann::json& j, GeneratorSpec s = {}) {
  s.num_videos = j.value("num_videos", s.num_videos);
  s.frames_per_video = j.value("frames_per_video", s.frames_per_video);
  s.segment_length = j.value("segment_length", s.segment_length);
  s.d = j.value("d", s.d);
  s.num_classes = j.value("num_classes", s.num_classes);
  s.clusters = j.value("clusters", s.clusters);
  s.noise_sigma = j.value("noise_sigma", s.noise_sigma);
  s.positive_segment_rate = j.value("positive_segment_rate", s.positive_segment_rate);
  s.label_rate = j.value("label_rate", s.label_rate);
  s.secondary_class_rate = j.value("secondary_class_rate", s.secondary_class_rate);
  s.class_offset_ratio = j.value("class_offset_ratio", s.class_offset_ratio);
  s.seed = j.value("seed", s.seed);
  return s;
}

inline nlohmann::json to_json(const GeneratorSpec& s) {
  return {{"num_videos", s.num_videos},
          {"frames_per_video", s.frames_per_video},
          {"segment_length", s.segment_length},
          {"d", s.d},
          {"num_classes", s.num_classes},
          {"clusters", s.clusters},
          {"noise_sigma", s.noise_sigma},
          {"positive_segment_rate", s.positive_segment_rate},
          {"label_rate", s.label_rate},
          {"secondary_class_rate", s.secondary_class_rate},
          {"class_offset_ratio", s.class_offset_ratio},
          {"seed", s.seed}};
}

// Unknown keys are rejected so typos do not silently fall back to defaults.
inline PipelineConfig config_from_json(const nlohmann::json& j) {
  static const std::set<std::string> known = {
      "out_dir", "generator", "corpus_dir", "ground_truth", "num_classes", "segment_length",
      "stride",  "k",         "mode",       "cap",          "ablate_similarity", "video",
      "gbm",     "baseline",  "seed"};
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw Error("config: unknown key '" + key + "'");
  }
  try {
    PipelineConfig c;
    c.out_dir = j.value("out_dir", c.out_dir.string());
    if (j.contains("corpus_dir")) {
      c.generator.reset();
      c.corpus_dir = j.at("corpus_dir").get<std::string>();
    }
    if (j.contains("generator")) c.generator = generator_from_json(j.at("generator"));
    c.ground_truth = j.value("ground_truth", std::string());
    c.num_classes = j.value("num_classes", 0);
    c.segment_length = j.value("segment_length", c.segment_length);
    c.stride = j.value("stride", c.stride);
    c.k = j.value("k", c.k);
    c.mode = parse_mode(j.value("mode", to_string(c.mode)));
    c.cap = j.value("cap", c.cap);
    c.ablate_similarity = j.value("ablate_similarity", false);
    if (j.contains("video")) {
      const auto& v = j.at("video");
      c.video.epochs = v.value("epochs", c.video.epochs);
      c.video.learning_rate = v.value("lr", c.video.learning_rate);
      c.video.l2 = v.value("l2", c.video.l2);
    }
    if (j.contains("gbm")) {
      const auto& g = j.at("gbm");
      c.gbm.rounds = g.value("rounds", c.gbm.rounds);
      c.gbm.max_depth = g.value("depth", c.gbm.max_depth);
      c.gbm.learning_rate = g.value("lr", c.gbm.learning_rate);
      c.gbm.lambda = g.value("lambda", c.gbm.lambda);
      c.gbm.min_child_weight = g.value("min_child_weight", c.gbm.min_child_weight);
    }
    if (j.contains("baseline")) {
      const auto& b = j.at("baseline");
      c.baseline.epochs = b.value("epochs", c.baseline.epochs);
      c.baseline.learning_rate = b.value("lr", c.baseline.learning_rate);
      c.baseline.l2 = b.value("l2", c.baseline.l2);
    }
    c.seed = j.value("seed", c.seed);
    c.propagate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("config: ") + e.what());
  }
}

}  // namespace ccrl
