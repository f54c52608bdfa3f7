#pragma once

// Stream readers and writers for the three corpus files:
//   videos        JSON lines {"id": ..., "frames": [[...], ...]}
//   video labels  CSV video_id,class_id,label
//   segment labels CSV video_id,start,length,class_id,label
// Frame values are narrowed to 32-bit floats on read and write so that a
// write/read cycle reproduces the corpus exactly.

#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ccrl/core_data.hpp"
#include "ccrl/text.hpp"

namespace ccrl {

namespace detail {

[[noreturn]] inline void line_error(const std::string& what, std::size_t line, const std::string& msg) {
  throw Error(what + " line " + std::to_string(line) + ": " + msg);
}

inline void expect_header(std::istream& in, const std::string& what, const std::string& header) {
  std::string line;
  if (!std::getline(in, line) || text::trim(line) != header) {
    line_error(what, 1, "expected header '" + header + "'");
  }
}

inline std::size_t parse_index(std::string_view field, const std::string& what, std::size_t line,
                               const char* name) {
  std::int64_t v = 0;
  if (!text::parse_int(field, v) || v < 0) {
    line_error(what, line, std::string("bad ") + name + " '" + std::string(field) + "'");
  }
  return static_cast<std::size_t>(v);
}

inline int parse_label(std::string_view field, const std::string& what, std::size_t line) {
  std::int64_t v = 0;
  if (!text::parse_int(field, v) || (v != 0 && v != 1)) {
    line_error(what, line, "label must be 0 or 1, got '" + std::string(field) + "'");
  }
  return static_cast<int>(v);
}

}  // namespace detail

inline std::vector<Video> read_videos(std::istream& in) {
  const std::string what = "videos";
  std::vector<Video> videos;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) {
      continue;
    }
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      detail::line_error(what, lineno, std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("id") || !j["id"].is_string() || !j.contains("frames") ||
        !j["frames"].is_array() || j["frames"].empty()) {
      detail::line_error(what, lineno, "expected {\"id\": string, \"frames\": [[...], ...]}");
    }
    const auto& frames = j["frames"];
    const auto d = frames[0].is_array() ? frames[0].size() : 0;
    if (d == 0) {
      detail::line_error(what, lineno, "frames must be non-empty arrays");
    }
    Video v{j["id"].get<std::string>(), Matrix(frames.size(), d)};
    for (std::size_t r = 0; r < frames.size(); ++r) {
      const auto& row = frames[r];
      if (!row.is_array() || row.size() != d) {
        detail::line_error(what, lineno, "frame " + std::to_string(r) + " has wrong dimension");
      }
      for (std::size_t c = 0; c < d; ++c) {
        if (!row[c].is_number()) {
          detail::line_error(what, lineno, "non-numeric frame value");
        }
        v.frames(r, c) = static_cast<double>(static_cast<float>(row[c].get<double>()));
      }
    }
    videos.push_back(std::move(v));
  }
  return videos;
}

inline std::vector<VideoLabel> read_video_labels(std::istream& in) {
  const std::string what = "video labels";
  detail::expect_header(in, what, "video_id,class_id,label");
  std::vector<VideoLabel> out;
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    auto f = text::split(text::trim(line));
    if (f.size() != 3) {
      detail::line_error(what, lineno, "expected 3 fields");
    }
    out.push_back({std::string(text::trim(f[0])),
                   static_cast<ClassId>(detail::parse_index(f[1], what, lineno, "class_id")),
                   detail::parse_label(f[2], what, lineno)});
  }
  return out;
}

inline std::vector<SegmentLabel> read_segment_labels(std::istream& in) {
  const std::string what = "segment labels";
  detail::expect_header(in, what, "video_id,start,length,class_id,label");
  std::vector<SegmentLabel> out;
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    auto f = text::split(text::trim(line));
    if (f.size() != 5) {
      detail::line_error(what, lineno, "expected 5 fields");
    }
    SegmentLabel l;
    l.segment.video_id = std::string(text::trim(f[0]));
    l.segment.start = detail::parse_index(f[1], what, lineno, "start");
    l.segment.length = detail::parse_index(f[2], what, lineno, "length");
    l.class_id = static_cast<ClassId>(detail::parse_index(f[3], what, lineno, "class_id"));
    l.label = detail::parse_label(f[4], what, lineno);
    out.push_back(std::move(l));
  }
  return out;
}

inline Corpus read_corpus(std::istream& videos, std::istream& video_labels,
                          std::istream& segment_labels, int num_classes,
                          std::size_t segment_length = kDefaultSegmentLength) {
  return Corpus(read_videos(videos), num_classes, read_video_labels(video_labels),
                read_segment_labels(segment_labels), segment_length);
}

inline void write_videos(std::ostream& out, const std::vector<Video>& videos) {
  for (const auto& v : videos) {
    out << "{\"id\": " << nlohmann::json(v.id).dump() << ", \"frames\": [";
    for (std::size_t r = 0; r < v.frame_count(); ++r) {
      out << (r ? ", [" : "[");
      for (std::size_t c = 0; c < v.dim(); ++c) {
        out << (c ? ", " : "") << text::format_float(v.frames(r, c));
      }
      out << ']';
    }
    out << "]}\n";
  }
}

inline void write_video_labels(std::ostream& out, const std::vector<VideoLabel>& labels) {
  out << "video_id,class_id,label\n";
  for (const auto& l : labels) {
    out << l.video_id << ',' << l.class_id << ',' << l.label << '\n';
  }
}

inline void write_segment_labels(std::ostream& out, const std::vector<SegmentLabel>& labels) {
  out << "video_id,start,length,class_id,label\n";
  for (const auto& l : labels) {
    out << l.segment.video_id << ',' << l.segment.start << ',' << l.segment.length << ','
        << l.class_id << ',' << l.label << '\n';
  }
}

}  // namespace ccrl
