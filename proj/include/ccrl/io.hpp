#pragma once

// File-level readers and writers for every artifact the CLI produces or
// consumes. All numeric fields are written in shortest round-trip form so a
// stage re-run from saved artifacts sees exactly the in-memory values.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ccrl/candgen.hpp"
#include "ccrl/class_features.hpp"
#include "ccrl/corpus_io.hpp"
#include "ccrl/eval.hpp"
#include "ccrl/prediction.hpp"
#include "ccrl/text.hpp"

namespace ccrl::io {

namespace fs = std::filesystem;

inline std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot open '" + p.string() + "' for reading");
  return in;
}

inline std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + p.string() + "' for writing");
  return out;
}

inline nlohmann::json read_json(const fs::path& p) {
  auto in = open_in(p);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error("'" + p.string() + "': " + e.what());
  }
}

inline void write_json(const fs::path& p, const nlohmann::json& j) {
  auto out = open_out(p);
  out << j.dump(2) << '\n';
}

// Standard file names inside a corpus directory.
struct CorpusPaths {
  fs::path videos;
  fs::path video_labels;
  fs::path segment_labels;

  static CorpusPaths in(const fs::path& dir) {
    return {dir / "videos.jsonl", dir / "video_labels.csv", dir / "segment_labels.csv"};
  }
};

inline Corpus load_corpus(const CorpusPaths& paths, int num_classes,
                          std::size_t segment_length = kDefaultSegmentLength) {
  auto v = open_in(paths.videos);
  auto vl = open_in(paths.video_labels);
  auto sl = open_in(paths.segment_labels);
  try {
    return read_corpus(v, vl, sl, num_classes, segment_length);
  } catch (const Error& e) {
    throw Error("load_corpus: " + std::string(e.what()));
  }
}

inline void save_corpus(const CorpusPaths& paths, const Corpus& corpus) {
  {
    auto out = open_out(paths.videos);
    write_videos(out, corpus.videos());
  }
  {
    auto out = open_out(paths.video_labels);
    write_video_labels(out, corpus.video_labels());
  }
  auto out = open_out(paths.segment_labels);
  write_segment_labels(out, corpus.segment_labels());
}

// ---- ground truth: video_id,start,length,class_id ----

inline void write_ground_truth(std::ostream& out, const GroundTruthPositives& truth) {
  out << "video_id,start,length,class_id\n";
  for (const auto& [s, c] : truth) {
    out << s.video_id << ',' << s.start << ',' << s.length << ',' << c << '\n';
  }
}

inline GroundTruthPositives read_ground_truth(std::istream& in) {
  const std::string what = "ground truth";
  detail::expect_header(in, what, "video_id,start,length,class_id");
  GroundTruthPositives out;
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    auto f = text::split(text::trim(line));
    if (f.size() != 4) detail::line_error(what, lineno, "expected 4 fields");
    SegmentRef s{std::string(text::trim(f[0])), detail::parse_index(f[1], what, lineno, "start"),
                 detail::parse_index(f[2], what, lineno, "length")};
    out.push_back({std::move(s),
                   static_cast<ClassId>(detail::parse_index(f[3], what, lineno, "class_id"))});
  }
  return out;
}

// ---- candidates: class_id,video_id,start,length ----

inline void write_candidates(std::ostream& out, const CandidateSet& cs) {
  out << "class_id,video_id,start,length\n";
  for (std::size_t c = 0; c < cs.classes.size(); ++c) {
    for (const auto& s : cs.classes[c].segments) {
      out << c << ',' << s.video_id << ',' << s.start << ',' << s.length << '\n';
    }
  }
}

inline CandidateSet read_candidates(std::istream& in, int num_classes) {
  const std::string what = "candidates";
  detail::expect_header(in, what, "class_id,video_id,start,length");
  CandidateSet cs;
  cs.classes.resize(static_cast<std::size_t>(num_classes));
  std::vector<std::set<std::string>> videos(static_cast<std::size_t>(num_classes));
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    auto f = text::split(text::trim(line));
    if (f.size() != 4) detail::line_error(what, lineno, "expected 4 fields");
    const auto c = detail::parse_index(f[0], what, lineno, "class_id");
    if (c >= cs.classes.size()) detail::line_error(what, lineno, "class_id out of range");
    SegmentRef s{std::string(text::trim(f[1])), detail::parse_index(f[2], what, lineno, "start"),
                 detail::parse_index(f[3], what, lineno, "length")};
    videos[c].insert(s.video_id);
    cs.classes[c].segments.push_back(std::move(s));
  }
  for (std::size_t c = 0; c < cs.classes.size(); ++c) {
    cs.classes[c].videos.assign(videos[c].begin(), videos[c].end());
    cs.k = std::max(cs.k, videos[c].size());
  }
  return cs;
}

// ---- pair features ----

inline std::string features_header(std::size_t d, bool labelled) {
  std::string h = "video_id,start,length,class_id,candidate_score,sim_pos,sim_neg,pos_count,neg_count";
  for (std::size_t j = 0; j < d; ++j) h += ",enc_" + std::to_string(j);
  if (labelled) h += ",label";
  return h;
}

// `labels` may be empty for unlabelled rows.
inline void write_features(std::ostream& out, std::span<const PairFeatureRow> rows,
                           std::span<const int> labels = {}) {
  const bool labelled = !labels.empty();
  if (labelled && labels.size() != rows.size()) {
    throw Error("write_features: label count does not match row count");
  }
  const auto d = rows.empty() ? 0 : rows.front().encoding.size();
  out << features_header(d, labelled) << '\n';
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    out << r.segment.video_id << ',' << r.segment.start << ',' << r.segment.length << ','
        << r.class_id << ',' << text::format_double(r.candidate_score) << ','
        << text::format_double(r.sim.sim_pos) << ',' << text::format_double(r.sim.sim_neg) << ','
        << r.sim.pos_count << ',' << r.sim.neg_count;
    for (double e : r.encoding) out << ',' << text::format_double(e);
    if (labelled) out << ',' << labels[i];
    out << '\n';
  }
}

struct FeatureTable {
  std::vector<PairFeatureRow> rows;
  std::vector<int> labels;  // empty when the file has no label column
};

inline FeatureTable read_features(std::istream& in) {
  const std::string what = "features";
  std::string header;
  if (!std::getline(in, header)) detail::line_error(what, 1, "missing header");
  const auto cols = text::split(text::trim(header));
  const bool labelled = !cols.empty() && cols.back() == "label";
  if (cols.size() < 9 + (labelled ? 1 : 0)) detail::line_error(what, 1, "too few columns");
  const auto d = cols.size() - 9 - (labelled ? 1 : 0);
  if (text::trim(header) != features_header(d, labelled)) {
    detail::line_error(what, 1, "unexpected header");
  }
  FeatureTable t;
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    auto f = text::split(text::trim(line));
    if (f.size() != cols.size()) detail::line_error(what, lineno, "wrong field count");
    PairFeatureRow r;
    r.segment = {std::string(text::trim(f[0])), detail::parse_index(f[1], what, lineno, "start"),
                 detail::parse_index(f[2], what, lineno, "length")};
    r.class_id = static_cast<ClassId>(detail::parse_index(f[3], what, lineno, "class_id"));
    auto num = [&](std::size_t i) {
      double v = 0.0;
      if (!text::parse_double(f[i], v) || !std::isfinite(v)) {
        detail::line_error(what, lineno, "bad number '" + std::string(f[i]) + "'");
      }
      return v;
    };
    r.candidate_score = num(4);
    r.sim.sim_pos = num(5);
    r.sim.sim_neg = num(6);
    r.sim.pos_count = detail::parse_index(f[7], what, lineno, "pos_count");
    r.sim.neg_count = detail::parse_index(f[8], what, lineno, "neg_count");
    r.encoding.resize(d);
    for (std::size_t j = 0; j < d; ++j) r.encoding[j] = num(9 + j);
    if (labelled) t.labels.push_back(detail::parse_label(f.back(), what, lineno));
    t.rows.push_back(std::move(r));
  }
  return t;
}

// ---- predictions: class_id,video_id,start,length,score ----

// Sorted by class, then score descending, then (video_id, start).
inline void write_predictions(std::ostream& out, Predictions preds) {
  std::sort(preds.begin(), preds.end(), [](const Prediction& a, const Prediction& b) {
    if (a.class_id != b.class_id) return a.class_id < b.class_id;
    if (a.score != b.score) return a.score > b.score;
    return a.segment < b.segment;
  });
  out << "class_id,video_id,start,length,score\n";
  for (const auto& p : preds) {
    out << p.class_id << ',' << p.segment.video_id << ',' << p.segment.start << ','
        << p.segment.length << ',' << text::format_double(p.score) << '\n';
  }
}

inline Predictions read_predictions(std::istream& in) {
  const std::string what = "predictions";
  detail::expect_header(in, what, "class_id,video_id,start,length,score");
  Predictions out;
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    auto f = text::split(text::trim(line));
    if (f.size() != 5) detail::line_error(what, lineno, "expected 5 fields");
    Prediction p;
    p.class_id = static_cast<ClassId>(detail::parse_index(f[0], what, lineno, "class_id"));
    p.segment = {std::string(text::trim(f[1])), detail::parse_index(f[2], what, lineno, "start"),
                 detail::parse_index(f[3], what, lineno, "length")};
    if (!text::parse_double(f[4], p.score) || !std::isfinite(p.score)) {
      detail::line_error(what, lineno, "bad score '" + std::string(f[4]) + "'");
    }
    out.push_back(std::move(p));
  }
  return out;
}

template <class Writer>
void write_file(const fs::path& p, Writer&& writer) {
  auto out = open_out(p);
  writer(out);
  if (!out) throw Error("failed writing '" + p.string() + "'");
}

template <class Reader>
auto read_file(const fs::path& p, Reader&& reader) {
  auto in = open_in(p);
  try {
    return reader(in);
  } catch (const Error& e) {
    throw Error("'" + p.string() + "': " + e.what());
  }
}

}  // namespace ccrl::io
