// Command-line front end. Every pipeline stage is a subcommand reading and
// writing the artifact formats in ccrl/io.hpp; `run` executes all of them.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ccrl/ccrl.hpp"

namespace fs = std::filesystem;
using namespace ccrl;

namespace {

struct CorpusOptions {
  std::string dir;
  std::string videos;
  std::string video_labels;
  std::string segment_labels;
  int num_classes = 0;
  std::size_t segment_length = kDefaultSegmentLength;

  void add_to(CLI::App* app) {
    app->add_option("--corpus-dir", dir, "Directory with videos.jsonl, video_labels.csv, segment_labels.csv");
    app->add_option("--videos", videos, "Videos JSON-lines file (overrides --corpus-dir)");
    app->add_option("--video-labels", video_labels, "Video labels CSV (overrides --corpus-dir)");
    app->add_option("--segment-labels", segment_labels, "Segment labels CSV (overrides --corpus-dir)");
    app->add_option("--num-classes", num_classes, "Number of classes C")->required();
    app->add_option("--segment-length", segment_length, "Default segment length L");
  }

  Corpus load() const {
    auto paths = io::CorpusPaths::in(dir.empty() ? fs::path(".") : fs::path(dir));
    if (!videos.empty()) paths.videos = videos;
    if (!video_labels.empty()) paths.video_labels = video_labels;
    if (!segment_labels.empty()) paths.segment_labels = segment_labels;
    return io::load_corpus(paths, num_classes, segment_length);
  }
};

VideoModel load_video_model(const std::string& path) {
  return video_model_from_json(io::read_json(path));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stage temporal concept localization with cross-class relevance learning"};
  app.require_subcommand(1);
  app.fallthrough();

  std::optional<std::uint64_t> seed;
  std::string config_path;
  app.add_option("--seed", seed, "Seed propagated to every stage");
  app.add_option("--config", config_path, "Pipeline config JSON (used by `run`)");

  // generate
  auto* gen = app.add_subcommand("generate", "Write a seeded synthetic corpus and its ground truth");
  GeneratorSpec spec;
  std::string gen_out = "corpus";
  gen->add_option("--out-dir", gen_out, "Output directory");
  gen->add_option("--num-videos", spec.num_videos);
  gen->add_option("--frames-per-video", spec.frames_per_video);
  gen->add_option("--segment-length", spec.segment_length);
  gen->add_option("--dim", spec.d, "Frame feature dimension d");
  gen->add_option("--num-classes", spec.num_classes);
  gen->add_option("--clusters", spec.clusters);
  gen->add_option("--noise-sigma", spec.noise_sigma);
  gen->add_option("--positive-rate", spec.positive_segment_rate);
  gen->add_option("--label-rate", spec.label_rate);
  gen->add_option("--secondary-rate", spec.secondary_class_rate);
  gen->add_option("--offset-ratio", spec.class_offset_ratio);

  // train-video
  auto* tv = app.add_subcommand("train-video", "Train the video-level candidate generator");
  CorpusOptions tv_corpus;
  tv_corpus.add_to(tv);
  VideoTrainOptions tv_opts;
  std::string tv_out = "video_model.json";
  tv->add_option("--epochs", tv_opts.epochs);
  tv->add_option("--lr", tv_opts.learning_rate);
  tv->add_option("--l2", tv_opts.l2);
  tv->add_option("--out", tv_out);

  // candidates
  auto* cand = app.add_subcommand("candidates", "Select per-class candidate segments from the top-K videos");
  CorpusOptions cand_corpus;
  cand_corpus.add_to(cand);
  std::string cand_model;
  std::size_t cand_k = 10;
  std::size_t cand_length = kDefaultSegmentLength;
  std::size_t cand_stride = kDefaultStride;
  bool cand_all = false;
  std::string cand_out = "candidates.csv";
  cand->add_option("--video-model", cand_model)->required();
  cand->add_option("--k", cand_k);
  cand->add_option("--length", cand_length);
  cand->add_option("--stride", cand_stride);
  cand->add_flag("--all", cand_all, "Emit every segment for every class (no pruning)");
  cand->add_option("--out", cand_out);

  // build-features
  auto* bf = app.add_subcommand("build-features", "Build pair feature rows");
  CorpusOptions bf_corpus;
  bf_corpus.add_to(bf);
  std::string bf_model;
  std::string bf_candidates;
  bool bf_training = false;
  bool bf_ablate = false;
  std::string bf_out = "features.csv";
  bf->add_option("--video-model", bf_model)->required();
  bf->add_option("--candidates", bf_candidates, "Candidates CSV (unlabelled scoring rows)");
  bf->add_flag("--training", bf_training, "Emit one labelled row per segment label instead");
  bf->add_flag("--ablate-similarity", bf_ablate, "Zero the sim_pos and sim_neg columns");
  bf->add_option("--out", bf_out);

  // train-ccrl
  auto* tc = app.add_subcommand("train-ccrl", "Train the cross-class boosted relevance model");
  std::string tc_features;
  GbmHyper hyper;
  std::string tc_out = "ccrl_model.json";
  tc->add_option("--features", tc_features, "Labelled features CSV")->required();
  tc->add_option("--rounds", hyper.rounds);
  tc->add_option("--depth", hyper.max_depth);
  tc->add_option("--lr", hyper.learning_rate);
  tc->add_option("--lambda", hyper.lambda);
  tc->add_option("--min-child-weight", hyper.min_child_weight);
  tc->add_option("--out", tc_out);

  // train-baseline
  auto* tb = app.add_subcommand("train-baseline", "Train the per-class logistic baseline");
  CorpusOptions tb_corpus;
  tb_corpus.add_to(tb);
  BaselineTrainOptions tb_opts;
  std::string tb_out = "baseline_model.json";
  tb->add_option("--epochs", tb_opts.epochs);
  tb->add_option("--lr", tb_opts.learning_rate);
  tb->add_option("--l2", tb_opts.l2);
  tb->add_option("--out", tb_out);

  // predict
  auto* pr = app.add_subcommand("predict", "Score feature rows with a CCRL or baseline model");
  std::string pr_model;
  std::string pr_features;
  std::string pr_out = "predictions.csv";
  pr->add_option("--model", pr_model)->required();
  pr->add_option("--features", pr_features)->required();
  pr->add_option("--out", pr_out);

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Compute per-class AP, mAP and recall of ranked predictions");
  CorpusOptions ev_corpus;
  ev_corpus.add_to(ev);
  std::string ev_predictions;
  std::string ev_truth;
  std::size_t ev_cap = kDefaultCap;
  std::string ev_out;
  ev->add_option("--predictions", ev_predictions)->required();
  ev->add_option("--ground-truth", ev_truth)->required();
  ev->add_option("--cap", ev_cap, "Ranked list length per class");
  ev->add_option("--out", ev_out, "Report path (stdout when omitted)");

  // run
  auto* run = app.add_subcommand("run", "Run the full pipeline");
  std::string run_out;
  std::string run_mode;
  std::optional<std::size_t> run_k;
  bool run_ablate = false;
  run->add_option("--out-dir", run_out);
  run->add_option("--mode", run_mode, "with_cg or without_cg");
  run->add_option("--k", run_k);
  run->add_flag("--ablate-similarity", run_ablate);

  CLI11_PARSE(app, argc, argv);

  std::string stage = app.get_subcommands().front()->get_name();
  try {
    if (gen->parsed()) {
      if (seed) spec.seed = *seed;
      auto g = generate(spec);
      const fs::path dir = gen_out;
      io::save_corpus(io::CorpusPaths::in(dir), g.corpus);
      io::write_file(dir / "ground_truth.csv",
                     [&](std::ostream& o) { io::write_ground_truth(o, g.truth.positives); });
      std::printf("wrote %zu videos, %zu segment labels, %zu true positives to %s\n",
                  g.corpus.videos().size(), g.corpus.segment_labels().size(),
                  g.truth.positives.size(), dir.string().c_str());
    } else if (tv->parsed()) {
      if (seed) tv_opts.seed = *seed;
      const auto corpus = tv_corpus.load();
      const auto model = train_video_model(corpus, tv_opts);
      io::write_json(tv_out, to_json(model));
    } else if (cand->parsed()) {
      const auto corpus = cand_corpus.load();
      const auto scores = predict_video_scores(load_video_model(cand_model), corpus);
      const auto cs = cand_all ? all_candidates(corpus, cand_length, cand_stride)
                               : select_candidates(scores, corpus, cand_k, cand_length, cand_stride);
      if (cs.clamped) {
        std::fprintf(stderr, "warning: K=%zu exceeds %zu videos; using K=%zu\n", cand_k,
                     corpus.videos().size(), cs.k);
      }
      io::write_file(cand_out, [&](std::ostream& o) { io::write_candidates(o, cs); });
    } else if (bf->parsed()) {
      const auto corpus = bf_corpus.load();
      const auto scores = predict_video_scores(load_video_model(bf_model), corpus);
      const LabeledStore store(corpus);
      if (bf_training) {
        auto t = build_training_rows(corpus, store, scores);
        if (bf_ablate) zero_similarity_columns(t.rows);
        io::write_file(bf_out, [&](std::ostream& o) { io::write_features(o, t.rows, t.labels); });
      } else {
        if (bf_candidates.empty()) throw Error("--candidates or --training is required");
        const auto cs = io::read_file(bf_candidates, [&](std::istream& in) {
          return io::read_candidates(in, corpus.num_classes());
        });
        auto rows = build_pair_rows(cs, scores, store, corpus);
        if (bf_ablate) zero_similarity_columns(rows);
        io::write_file(bf_out, [&](std::ostream& o) { io::write_features(o, rows); });
      }
    } else if (tc->parsed()) {
      if (seed) hyper.seed = *seed;
      const auto t = io::read_file(tc_features, io::read_features);
      if (t.labels.empty()) throw Error("features file has no label column");
      io::write_json(tc_out, to_json(train_ccrl(t.rows, t.labels, hyper)));
    } else if (tb->parsed()) {
      if (seed) tb_opts.seed = *seed;
      const auto corpus = tb_corpus.load();
      io::write_json(tb_out, to_json(train_baseline(corpus, tb_opts)));
    } else if (pr->parsed()) {
      const auto j = io::read_json(pr_model);
      const auto t = io::read_file(pr_features, io::read_features);
      const auto type = j.value("type", std::string());
      std::vector<double> scores;
      if (type == "gbm") {
        scores = predict_ccrl(gbm_from_json(j), t.rows);
      } else if (type == "baseline_logistic") {
        scores = predict_baseline(baseline_from_json(j), t.rows);
      } else {
        throw Error("unsupported model type '" + type + "'");
      }
      io::write_file(pr_out, [&](std::ostream& o) { io::write_predictions(o, to_predictions(t.rows, scores)); });
    } else if (ev->parsed()) {
      const auto corpus = ev_corpus.load();
      const auto preds = io::read_file(ev_predictions, io::read_predictions);
      const auto truth = io::read_file(ev_truth, io::read_ground_truth);
      const auto report = to_json(evaluate(preds, truth, corpus, ev_cap));
      if (ev_out.empty()) {
        std::cout << report.dump(2) << '\n';
      } else {
        io::write_json(ev_out, report);
      }
    } else if (run->parsed()) {
      PipelineConfig cfg;
      if (!config_path.empty()) cfg = config_from_json(io::read_json(config_path));
      if (seed) cfg.seed = *seed;
      if (!run_out.empty()) cfg.out_dir = run_out;
      if (!run_mode.empty()) cfg.mode = parse_mode(run_mode);
      if (run_k) cfg.k = *run_k;
      if (run_ablate) cfg.ablate_similarity = true;
      cfg.propagate();
      const auto a = run_pipeline(cfg);
      std::printf("mode=%s pairs=%zu candidate_recall=%.4f mAP ccrl=%.4f baseline=%.4f ensemble=%.4f\n",
                  to_string(cfg.mode).c_str(), a.pair_rows.size(), a.candidate_recall.mean,
                  a.ccrl_report.map, a.baseline_report.map, a.ensemble_report.map);
      std::printf("artifacts in %s\n", cfg.out_dir.string().c_str());
    }
  } catch (const StageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: stage '%s': %s\n", stage.c_str(), e.what());
    return 1;
  }
  return 0;
}
