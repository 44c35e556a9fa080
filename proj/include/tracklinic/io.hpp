#pragma once

// On-disk formats.
//
//   groundtruth / results   one frame per line, "x,y,w,h" (commas, tabs or
//                           spaces); "absent", "nan" fields or a degenerate
//                           box mark an invisible target.
//   annotations             CSV "frame,occ,rot,ov,bc,iv,mb,sv,o-b,o-r" with
//                           0/1 flags; the two compound columns are optional.
//   manifest                CSV "sequence_id,groundtruth,annotation"; paths
//                           relative to the manifest's directory.
//   layout                  CSV "sequence,frames,factor,start,length"; an
//                           empty factor declares a sequence without runs.
//   config / profiles       JSON.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "tracklinic/core.hpp"
#include "tracklinic/extraction.hpp"
#include "tracklinic/report.hpp"
#include "tracklinic/serialization.hpp"
#include "tracklinic/simulator.hpp"

namespace tracklinic::io {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Files

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Writes through a temporary sibling and renames, so a reader never sees a
// half-written file.
inline void write_file_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + tmp.string() + "'");
    out << content;
    if (!out.flush()) throw DataError("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

// Splits into lines with CR/LF normalized; trailing blank lines are dropped.
inline std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::string cur;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '\r') {
      if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
      lines.push_back(std::move(cur));
      cur.clear();
    } else if (c == '\n') {
      lines.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) lines.push_back(std::move(cur));
  while (!lines.empty() && lines.back().find_first_not_of(" \t") == std::string::npos) lines.pop_back();
  return lines;
}

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// Shortest text that parses back to the same double.
inline std::string format_real(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_real(const std::string& s, const std::string& where) {
  if (lower(s) == "nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw DataError(where + ": '" + s + "' is not a number");
  }
  return v;
}

// ---------------------------------------------------------------------------
// Box files

inline std::vector<BoundingBox> parse_boxes(std::string_view text, const std::string& source) {
  std::vector<BoundingBox> boxes;
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string where = source + ":" + std::to_string(i + 1);
    std::string line = trim(lines[i]);
    if (lower(line) == "absent") {
      boxes.push_back(BoundingBox::absent());
      continue;
    }
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
      if (c == ',' || c == '\t' || c == ' ') {
        if (!cur.empty()) fields.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    if (!cur.empty()) fields.push_back(cur);
    if (fields.size() != 4) {
      throw DataError(where + ": expected 4 fields x,y,w,h or 'absent', got " +
                      std::to_string(fields.size()));
    }
    boxes.push_back(BoundingBox::from_raw(parse_real(fields[0], where), parse_real(fields[1], where),
                                          parse_real(fields[2], where), parse_real(fields[3], where)));
  }
  return boxes;
}

inline std::string format_boxes(const std::vector<BoundingBox>& boxes) {
  std::string out;
  for (const BoundingBox& b : boxes) {
    if (b.is_absent()) {
      out += "absent\n";
      continue;
    }
    const Rect& r = b.rect();
    out += format_real(r.x) + "," + format_real(r.y) + "," + format_real(r.w) + "," +
           format_real(r.h) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Annotation files

inline constexpr std::string_view kAnnotationHeader = "frame,occ,rot,ov,bc,iv,mb,sv,o-b,o-r";

inline std::vector<FactorSet> parse_annotations(std::string_view text, const std::string& source) {
  const auto lines = split_lines(text);
  if (lines.empty()) throw DataError(source + ": missing header");
  const auto header = split_csv(lines[0]);
  if (header.empty() || lower(header[0]) != "frame") {
    throw DataError(source + ": first column must be 'frame'");
  }
  std::vector<FactorKind> columns;
  std::set<FactorKind> seen;
  for (std::size_t c = 1; c < header.size(); ++c) {
    auto f = parse_factor(header[c]);
    if (!f) throw DataError(source + ": unknown column '" + header[c] + "'");
    if (!seen.insert(*f).second) throw DataError(source + ": duplicate column '" + header[c] + "'");
    columns.push_back(*f);
  }
  for (FactorKind f : kSimpleFactors) {
    if (!seen.contains(f)) {
      throw DataError(source + ": missing column '" + lower(std::string(factor_name(f))) + "'");
    }
  }

  std::vector<FactorSet> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::string where = source + ":" + std::to_string(i + 1);
    const auto cells = split_csv(lines[i]);
    if (cells.size() != header.size()) {
      throw DataError(where + ": expected " + std::to_string(header.size()) + " columns, got " +
                      std::to_string(cells.size()));
    }
    if (cells[0] != std::to_string(rows.size())) {
      throw DataError(where + ": frame index '" + cells[0] + "', expected " + std::to_string(rows.size()));
    }
    FactorSet s;
    for (std::size_t c = 0; c < columns.size(); ++c) {
      const std::string& v = cells[c + 1];
      if (v != "0" && v != "1") throw DataError(where + ": flag '" + v + "' is not 0 or 1");
      s.set(columns[c], v == "1");
    }
    rows.push_back(s);
  }
  return rows;
}

inline std::string format_annotations(const std::vector<FrameLabels>& labels) {
  std::string out(kAnnotationHeader);
  out += "\n";
  for (const FrameLabels& fl : labels) {
    out += std::to_string(fl.frame_index);
    for (FactorKind f : kAllFactors) out += fl.active.contains(f) ? ",1" : ",0";
    out += "\n";
  }
  return out;
}

inline SequenceRecord load_sequence(const std::string& id, const fs::path& gt_path,
                                    const fs::path& ann_path) {
  auto gt = parse_boxes(read_file(gt_path), gt_path.string());
  auto ann = parse_annotations(read_file(ann_path), ann_path.string());
  return make_sequence(id, std::move(gt), ann);
}

// ---------------------------------------------------------------------------
// Manifest

struct ManifestEntry {
  std::string sequence_id;
  fs::path groundtruth;
  fs::path annotation;
};

inline std::vector<ManifestEntry> parse_manifest(const fs::path& manifest_path) {
  const auto lines = split_lines(read_file(manifest_path));
  const std::string src = manifest_path.string();
  if (lines.empty() || split_csv(lines[0]) != std::vector<std::string>{"sequence_id", "groundtruth", "annotation"}) {
    throw DataError(src + ": header must be 'sequence_id,groundtruth,annotation'");
  }
  const fs::path base = manifest_path.parent_path();
  std::vector<ManifestEntry> entries;
  std::set<std::string> ids;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cells = split_csv(lines[i]);
    const std::string where = src + ":" + std::to_string(i + 1);
    if (cells.size() != 3) throw DataError(where + ": expected 3 columns");
    if (cells[0].empty()) throw DataError(where + ": empty sequence id");
    if (!ids.insert(cells[0]).second) throw DataError(where + ": duplicate sequence id '" + cells[0] + "'");
    ManifestEntry e{cells[0], base / cells[1], base / cells[2]};
    for (const fs::path& p : {e.groundtruth, e.annotation}) {
      if (!fs::exists(p)) throw DataError(where + ": file not found '" + p.string() + "'");
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

inline std::string format_manifest(const std::vector<std::string>& ids) {
  std::string out = "sequence_id,groundtruth,annotation\n";
  for (const std::string& id : ids) out += id + "," + id + ".gt.txt," + id + ".labels.csv\n";
  return out;
}

// ---------------------------------------------------------------------------
// Config and simulator inputs

inline DiagnosisConfig load_config(const fs::path& path) {
  try {
    return config_from_json(json::parse(read_file(path)));
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

inline std::vector<sim::Layout> parse_layouts(std::string_view text, const std::string& source) {
  const auto lines = split_lines(text);
  if (lines.empty() ||
      split_csv(lines[0]) != std::vector<std::string>{"sequence", "frames", "factor", "start", "length"}) {
    throw DataError(source + ": header must be 'sequence,frames,factor,start,length'");
  }
  std::vector<sim::Layout> layouts;
  std::map<std::string, std::size_t> index;
  auto as_size = [](const std::string& s, const std::string& where) {
    std::size_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
      throw DataError(where + ": '" + s + "' is not a non-negative integer");
    }
    return v;
  };
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::string where = source + ":" + std::to_string(i + 1);
    const auto cells = split_csv(lines[i]);
    if (cells.size() != 5) throw DataError(where + ": expected 5 columns");
    const std::size_t frames = as_size(cells[1], where);
    auto [it, fresh] = index.try_emplace(cells[0], layouts.size());
    if (fresh) layouts.push_back({cells[0], frames, {}});
    sim::Layout& L = layouts[it->second];
    if (L.frame_count != frames) throw DataError(where + ": inconsistent frame count for '" + cells[0] + "'");
    if (cells[2].empty()) continue;
    auto f = parse_factor(cells[2]);
    if (!f) throw DataError(where + ": unknown factor '" + cells[2] + "'");
    L.runs.push_back({*f, as_size(cells[3], where), as_size(cells[4], where)});
  }
  return layouts;
}

inline std::string format_layouts(const std::vector<sim::Layout>& layouts) {
  std::string out = "sequence,frames,factor,start,length\n";
  for (const sim::Layout& L : layouts) {
    const std::string head = L.sequence_id + "," + std::to_string(L.frame_count) + ",";
    if (L.runs.empty()) out += head + ",,\n";
    for (const sim::PlantedRun& r : L.runs) {
      out += head + std::string(factor_name(r.factor)) + "," + std::to_string(r.start) + "," +
             std::to_string(r.length) + "\n";
    }
  }
  return out;
}

// {"trackers": [{"name": ..., "seed": ..., "drift": ..., "failure_probability": {"OCC": 0.2, ...}}]}
inline std::vector<sim::SimProfile> parse_profiles(std::string_view text, const std::string& source) {
  std::vector<sim::SimProfile> out;
  try {
    const json doc = json::parse(text);
    for (const json& t : doc.at("trackers")) {
      sim::SimProfile p;
      p.name = t.at("name").get<std::string>();
      p.seed = t.value("seed", std::uint64_t{0});
      p.drift = t.value("drift", 4.0);
      for (const auto& [key, value] : t.at("failure_probability").items()) {
        auto f = parse_factor(key);
        if (!f) throw DataError(source + ": unknown factor '" + key + "'");
        p.failure_probability[factor_index(*f)] = value.get<double>();
      }
      p.validate();
      out.push_back(std::move(p));
    }
  } catch (const json::exception& e) {
    throw DataError(source + ": " + e.what());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Clip directories: groundtruth.txt, labels.csv, clip.json

inline void write_clip(const fs::path& dir, const ExtractedClip& clip) {
  write_file_atomic(dir / "groundtruth.txt", format_boxes(clip.groundtruth));
  write_file_atomic(dir / "labels.csv", format_annotations(clip.labels));
  write_file_atomic(dir / "clip.json", clip_metadata_json(clip).dump(2) + "\n");
}

inline ExtractedClip load_clip(const fs::path& dir) {
  ExtractedClip clip;
  try {
    apply_clip_metadata(json::parse(read_file(dir / "clip.json")), clip);
  } catch (const json::exception& e) {
    throw DataError((dir / "clip.json").string() + ": " + e.what());
  }
  clip.groundtruth = parse_boxes(read_file(dir / "groundtruth.txt"), (dir / "groundtruth.txt").string());
  const auto labels = parse_annotations(read_file(dir / "labels.csv"), (dir / "labels.csv").string());
  for (std::size_t i = 0; i < labels.size(); ++i) clip.labels.push_back({i, labels[i]});
  if (clip.groundtruth.size() != clip.length() || clip.labels.size() != clip.length()) {
    throw DataError(dir.string() + ": frame files disagree with the clip's frame range");
  }
  return clip;
}

// All clip directories under `root`, sorted by clip id.
inline std::vector<ExtractedClip> load_clips(const fs::path& root) {
  if (!fs::is_directory(root)) throw DataError("clips directory not found: '" + root.string() + "'");
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_directory() && fs::exists(e.path() / "clip.json")) dirs.push_back(e.path());
  }
  std::sort(dirs.begin(), dirs.end());
  std::vector<ExtractedClip> clips;
  for (const fs::path& d : dirs) clips.push_back(load_clip(d));
  std::sort(clips.begin(), clips.end(),
            [](const ExtractedClip& a, const ExtractedClip& b) { return a.clip_id < b.clip_id; });
  return clips;
}

// ---------------------------------------------------------------------------
// Outcome files

inline std::string format_outcomes(const std::string& tracker, const std::vector<ClipOutcome>& outcomes) {
  json list = json::array();
  for (const ClipOutcome& o : outcomes) list.push_back(to_json(o));
  return json{{"tracker", tracker}, {"tool_version", std::string(kToolVersion)}, {"outcomes", list}}.dump(2) +
         "\n";
}

inline std::pair<std::string, std::vector<ClipOutcome>> parse_outcomes(std::string_view text,
                                                                      const std::string& source) {
  try {
    const json doc = json::parse(text);
    std::vector<ClipOutcome> outcomes;
    for (const json& o : doc.at("outcomes")) outcomes.push_back(outcome_from_json(o));
    return {doc.at("tracker").get<std::string>(), std::move(outcomes)};
  } catch (const json::exception& e) {
    throw DataError(source + ": " + e.what());
  }
}

}  // namespace tracklinic::io
