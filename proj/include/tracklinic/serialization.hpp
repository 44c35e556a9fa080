#pragma once

// JSON mappings for the pipeline's value types. Objects are key-sorted by
// nlohmann::json, which makes every dump canonical.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tracklinic/core.hpp"
#include "tracklinic/evaluation.hpp"
#include "tracklinic/extraction.hpp"

namespace tracklinic {

using json = nlohmann::json;

// Fractions in reports are stored at 4 decimal places.
inline double quantize4(double v) { return std::round(v * 1e4) / 1e4; }

inline FactorKind factor_from_json(const json& j) {
  const auto s = j.get<std::string>();
  if (auto f = parse_factor(s)) return *f;
  throw DataError("unknown challenge factor '" + s + "'");
}

inline json to_json(const DiagnosisConfig& c) {
  return json{{"tau_op", c.tau_op},
              {"tau_s", c.tau_s},
              {"tau_e", c.tau_e},
              {"max_prefix", c.max_prefix},
              {"tau_iou", c.tau_iou},
              {"success_threshold", c.success_threshold},
              {"min_clips_per_factor", c.min_clips_per_factor},
              {"failure_rate_excludes_others", c.failure_rate_excludes_others}};
}

// Missing keys keep their defaults; unknown keys are rejected.
inline DiagnosisConfig config_from_json(const json& j) {
  if (!j.is_object()) throw DataError("config must be a JSON object");
  DiagnosisConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "tau_op") c.tau_op = value.get<int>();
    else if (key == "tau_s") c.tau_s = value.get<int>();
    else if (key == "tau_e") c.tau_e = value.get<int>();
    else if (key == "max_prefix") c.max_prefix = value.get<int>();
    else if (key == "tau_iou") c.tau_iou = value.get<double>();
    else if (key == "success_threshold") c.success_threshold = value.get<double>();
    else if (key == "min_clips_per_factor") c.min_clips_per_factor = value.get<int>();
    else if (key == "failure_rate_excludes_others") c.failure_rate_excludes_others = value.get<bool>();
    else throw DataError("unknown config key '" + key + "'");
  }
  c.validate();
  return c;
}

inline json to_json(const FrameRange& r) { return json::array({r.start, r.end}); }

inline FrameRange range_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2) throw DataError("frame range must be [start, end]");
  FrameRange r{j[0].get<std::size_t>(), j[1].get<std::size_t>()};
  if (r.end < r.start) throw DataError("frame range end precedes start");
  return r;
}

inline json to_json(const ClipOutcome& o) {
  return json{{"clip_id", o.clip_id},
              {"factor", std::string(factor_name(o.factor))},
              {"verdict", std::string(verdict_name(o.verdict))},
              {"last_frame_iou", o.last_frame_iou},
              {"pre_challenge_iou", o.pre_challenge_iou},
              {"success_score", o.success_score}};
}

inline ClipOutcome outcome_from_json(const json& j) {
  ClipOutcome o;
  o.clip_id = j.at("clip_id").get<std::string>();
  o.factor = factor_from_json(j.at("factor"));
  const auto v = j.at("verdict").get<std::string>();
  if (auto parsed = parse_verdict(v)) o.verdict = *parsed;
  else throw DataError("unknown verdict '" + v + "'");
  o.last_frame_iou = j.at("last_frame_iou").get<double>();
  o.pre_challenge_iou = j.at("pre_challenge_iou").get<double>();
  o.success_score = j.at("success_score").get<double>();
  return o;
}

inline json to_json(const FactorStats& s) {
  return json{{"factor", std::string(factor_name(s.factor))},
              {"n_clips", s.n_clips},
              {"n_failures", s.n_failures},
              {"failure_rate", s.failure_rate},
              {"mean_success", s.mean_success},
              {"success_variance", s.success_variance},
              {"success_stddev", s.success_stddev},
              {"low_support", s.low_support},
              {"per_clip_scores", s.per_clip_scores}};
}

inline FactorStats stats_from_json(const json& j) {
  FactorStats s;
  s.factor = factor_from_json(j.at("factor"));
  s.n_clips = j.at("n_clips").get<std::size_t>();
  s.n_failures = j.at("n_failures").get<std::size_t>();
  s.failure_rate = j.at("failure_rate").get<double>();
  s.mean_success = j.at("mean_success").get<double>();
  s.success_variance = j.at("success_variance").get<double>();
  s.success_stddev = j.at("success_stddev").get<double>();
  s.low_support = j.at("low_support").get<bool>();
  s.per_clip_scores = j.at("per_clip_scores").get<std::vector<double>>();
  return s;
}

inline json to_json(const std::map<Cause, double>& proportions) {
  json j = json::object();
  for (const auto& [c, v] : proportions) j[std::string(cause_name(c))] = v;
  return j;
}

inline std::map<Cause, double> proportions_from_json(const json& j) {
  std::map<Cause, double> out;
  for (const auto& [key, value] : j.items()) {
    auto c = parse_cause(key);
    if (!c) throw DataError("unknown failure cause '" + key + "'");
    out[*c] = value.get<double>();
  }
  return out;
}

inline json to_json(const RankingTable& t) {
  json rows = json::array();
  for (const RankingRow& r : t.rows) {
    rows.push_back({{"tracker", r.tracker}, {"mean_success", r.mean_success}, {"failure_rate", r.failure_rate}});
  }
  return json{{"factor", std::string(factor_name(t.factor))}, {"rows", rows}};
}

inline RankingTable ranking_from_json(const json& j) {
  RankingTable t;
  t.factor = factor_from_json(j.at("factor"));
  for (const json& r : j.at("rows")) {
    t.rows.push_back({r.at("tracker").get<std::string>(), r.at("mean_success").get<double>(),
                      r.at("failure_rate").get<double>()});
  }
  return t;
}

// Clip metadata without the frame copies (those live in sibling files).
inline json clip_metadata_json(const ExtractedClip& c) {
  return json{{"clip_id", c.clip_id},
              {"source_id", c.source_id},
              {"factor", std::string(factor_name(c.factor))},
              {"type", extraction_type(c.factor) == ExtractionType::T1 ? "T1" : "T2"},
              {"frame_range", to_json(c.frame_range)},
              {"nc1", to_json(c.nc1)},
              {"c2", to_json(c.c2)},
              {"nc3", c.nc3 ? to_json(*c.nc3) : json(nullptr)}};
}

inline void apply_clip_metadata(const json& j, ExtractedClip& c) {
  c.clip_id = j.at("clip_id").get<std::string>();
  c.source_id = j.at("source_id").get<std::string>();
  c.factor = factor_from_json(j.at("factor"));
  c.frame_range = range_from_json(j.at("frame_range"));
  c.nc1 = range_from_json(j.at("nc1"));
  c.c2 = range_from_json(j.at("c2"));
  const json& nc3 = j.at("nc3");
  c.nc3 = nc3.is_null() ? std::nullopt : std::optional<FrameRange>(range_from_json(nc3));
}

}  // namespace tracklinic
