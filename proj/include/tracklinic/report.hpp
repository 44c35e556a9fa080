#pragma once

// Diagnosis report: assembly, canonical structured rendering with a content
// digest, and the human-readable markdown + SVG chart set.

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "tracklinic/core.hpp"
#include "tracklinic/evaluation.hpp"
#include "tracklinic/extraction.hpp"
#include "tracklinic/serialization.hpp"

namespace tracklinic {

struct ClipSummary {
  std::string clip_id;
  std::string source_id;
  FactorKind factor = FactorKind::OCC;
  std::size_t frames = 0;

  friend bool operator==(const ClipSummary&, const ClipSummary&) = default;
};

struct CorpusSummary {
  std::map<FactorKind, std::size_t> census;
  std::size_t total_clips = 0;
  std::size_t total_frames = 0;
  std::vector<ClipSummary> clips;  // sorted by clip id

  friend bool operator==(const CorpusSummary&, const CorpusSummary&) = default;
};

inline CorpusSummary summarize_corpus(const std::vector<ExtractedClip>& clips) {
  CorpusSummary s;
  s.census = census(clips);
  s.total_clips = clips.size();
  for (const ExtractedClip& c : clips) {
    s.total_frames += c.length();
    s.clips.push_back({c.clip_id, c.source_id, c.factor, c.length()});
  }
  std::sort(s.clips.begin(), s.clips.end(),
            [](const ClipSummary& a, const ClipSummary& b) { return a.clip_id < b.clip_id; });
  return s;
}

struct TrackerSection {
  std::string name;
  std::map<Cause, double> failure_proportions;
  std::vector<FactorStats> stats;      // table order
  std::vector<ClipOutcome> outcomes;   // sorted by clip id

  friend bool operator==(const TrackerSection&, const TrackerSection&) = default;
};

struct DiagnosisReport {
  DiagnosisConfig config;
  CorpusSummary corpus;
  std::vector<TrackerSection> trackers;  // alphabetical
  std::vector<RankingTable> rankings;    // table order
  std::string tool_version{kToolVersion};
  std::string digest;

  friend bool operator==(const DiagnosisReport&, const DiagnosisReport&) = default;
};

inline std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 digest failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 0xF];
  }
  return out;
}

inline json corpus_to_json(const CorpusSummary& c) {
  json census = json::object();
  for (const auto& [f, n] : c.census) census[std::string(factor_name(f))] = n;
  json clips = json::array();
  for (const ClipSummary& s : c.clips) {
    clips.push_back({{"clip_id", s.clip_id},
                     {"source_id", s.source_id},
                     {"factor", std::string(factor_name(s.factor))},
                     {"frames", s.frames}});
  }
  return json{{"census", census},
              {"total_clips", c.total_clips},
              {"total_frames", c.total_frames},
              {"clips", clips}};
}

inline CorpusSummary corpus_from_json(const json& j) {
  CorpusSummary c;
  for (FactorKind f : kAllFactors) c.census[f] = 0;
  for (const auto& [key, value] : j.at("census").items()) {
    c.census[factor_from_json(json(key))] = value.get<std::size_t>();
  }
  c.total_clips = j.at("total_clips").get<std::size_t>();
  c.total_frames = j.at("total_frames").get<std::size_t>();
  for (const json& s : j.at("clips")) {
    c.clips.push_back({s.at("clip_id").get<std::string>(), s.at("source_id").get<std::string>(),
                       factor_from_json(s.at("factor")), s.at("frames").get<std::size_t>()});
  }
  return c;
}

namespace detail {

inline json report_body(const DiagnosisReport& r) {
  json trackers = json::array();
  for (const TrackerSection& t : r.trackers) {
    json stats = json::array();
    for (const FactorStats& s : t.stats) stats.push_back(to_json(s));
    json outcomes = json::array();
    for (const ClipOutcome& o : t.outcomes) outcomes.push_back(to_json(o));
    trackers.push_back({{"name", t.name},
                        {"failure_proportions", to_json(t.failure_proportions)},
                        {"factor_stats", stats},
                        {"outcomes", outcomes}});
  }
  json rankings = json::array();
  for (const RankingTable& t : r.rankings) rankings.push_back(to_json(t));
  return json{{"config", to_json(r.config)},
              {"corpus", corpus_to_json(r.corpus)},
              {"trackers", trackers},
              {"rankings", rankings},
              {"tool_version", r.tool_version}};
}

inline FactorStats quantized(FactorStats s) {
  s.failure_rate = quantize4(s.failure_rate);
  s.mean_success = quantize4(s.mean_success);
  s.success_variance = quantize4(s.success_variance);
  s.success_stddev = quantize4(s.success_stddev);
  for (double& v : s.per_clip_scores) v = quantize4(v);
  return s;
}

}  // namespace detail

inline std::string compute_digest(const DiagnosisReport& r) {
  return sha256_hex(detail::report_body(r).dump());
}

// Assembles the canonical report. Fractions are stored at 4 decimals; the
// statistics are computed from full-precision outcomes first.
inline DiagnosisReport build_report(const CorpusSummary& corpus,
                                    const std::map<std::string, std::vector<ClipOutcome>>& outcomes,
                                    const DiagnosisConfig& cfg) {
  std::set<std::string> known;
  for (const ClipSummary& c : corpus.clips) known.insert(c.clip_id);

  DiagnosisReport r;
  r.config = cfg;
  r.corpus = corpus;
  std::sort(r.corpus.clips.begin(), r.corpus.clips.end(),
            [](const ClipSummary& a, const ClipSummary& b) { return a.clip_id < b.clip_id; });
  for (FactorKind f : kAllFactors) r.corpus.census.try_emplace(f, 0);

  std::map<std::string, std::vector<FactorStats>> all_stats;
  for (const auto& [name, list] : outcomes) {
    for (const ClipOutcome& o : list) {
      if (!known.contains(o.clip_id)) {
        throw DataError("tracker '" + name + "' has an outcome for unknown clip '" + o.clip_id + "'");
      }
    }
    TrackerSection t;
    t.name = name;
    for (const auto& [c, v] : failure_proportions(list)) t.failure_proportions[c] = quantize4(v);
    const auto stats = all_factor_stats(list, cfg);
    all_stats[name] = stats;
    for (const FactorStats& s : stats) t.stats.push_back(detail::quantized(s));
    t.outcomes = list;
    std::sort(t.outcomes.begin(), t.outcomes.end(),
              [](const ClipOutcome& a, const ClipOutcome& b) { return a.clip_id < b.clip_id; });
    for (ClipOutcome& o : t.outcomes) {
      o.last_frame_iou = quantize4(o.last_frame_iou);
      o.pre_challenge_iou = quantize4(o.pre_challenge_iou);
      o.success_score = quantize4(o.success_score);
    }
    r.trackers.push_back(std::move(t));
  }
  r.rankings = cross_tracker_table(all_stats);
  for (RankingTable& t : r.rankings) {
    for (RankingRow& row : t.rows) {
      row.mean_success = quantize4(row.mean_success);
      row.failure_rate = quantize4(row.failure_rate);
    }
  }
  r.digest = compute_digest(r);
  return r;
}

// Canonical, key-sorted JSON document terminated by a newline.
inline std::string render_structured(const DiagnosisReport& r) {
  json doc = detail::report_body(r);
  doc["digest"] = r.digest;
  return doc.dump(2) + "\n";
}

inline DiagnosisReport parse_structured(const std::string& text) {
  DiagnosisReport r;
  try {
    const json doc = json::parse(text);
    r.config = config_from_json(doc.at("config"));
    r.corpus = corpus_from_json(doc.at("corpus"));
    for (const json& t : doc.at("trackers")) {
      TrackerSection s;
      s.name = t.at("name").get<std::string>();
      s.failure_proportions = proportions_from_json(t.at("failure_proportions"));
      for (const json& st : t.at("factor_stats")) s.stats.push_back(stats_from_json(st));
      for (const json& o : t.at("outcomes")) s.outcomes.push_back(outcome_from_json(o));
      r.trackers.push_back(std::move(s));
    }
    for (const json& t : doc.at("rankings")) r.rankings.push_back(ranking_from_json(t));
    r.tool_version = doc.at("tool_version").get<std::string>();
    r.digest = doc.at("digest").get<std::string>();
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed report: ") + e.what());
  }
  if (compute_digest(r) != r.digest) throw DataError("report digest does not match its content");
  return r;
}

// ---------------------------------------------------------------------------
// Human-readable output

inline std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

struct ChartFile {
  std::string filename;
  std::string svg;
};

struct HumanReport {
  std::string markdown;
  std::vector<ChartFile> charts;
};

namespace detail {

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

inline const char* palette(std::size_t i) {
  static constexpr const char* colors[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
                                           "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac"};
  return colors[i % 10];
}

class Svg {
 public:
  Svg(double w, double h, const std::string& title) : w_(w), h_(h) {
    body_ += "<text x=\"" + num(w / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" +
             xml_escape(title) + "</text>\n";
  }
  void rect(double x, double y, double w, double h, const char* fill) {
    body_ += "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) + "\" height=\"" +
             num(h) + "\" fill=\"" + fill + "\"/>\n";
  }
  void line(double x1, double y1, double x2, double y2, const char* stroke = "#333") {
    body_ += "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) + "\" y2=\"" +
             num(y2) + "\" stroke=\"" + stroke + "\"/>\n";
  }
  void text(double x, double y, const std::string& s, const char* anchor = "middle",
            int size = 11) {
    body_ += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" text-anchor=\"" + anchor +
             "\" font-size=\"" + std::to_string(size) + "\">" + xml_escape(s) + "</text>\n";
  }
  // Data labels carry class="value" so they can be audited against the report.
  void value(double x, double y, double v, int size = 9) {
    body_ += "<text class=\"value\" x=\"" + num(x) + "\" y=\"" + num(y) +
             "\" text-anchor=\"middle\" font-size=\"" + std::to_string(size) + "\">" + fixed3(v) +
             "</text>\n";
  }
  std::string str() const {
    return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
           "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(w_) + "\" height=\"" +
           num(h_) + "\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" +
           body_ + "</svg>\n";
  }

 private:
  double w_, h_;
  std::string body_;
};

inline std::vector<FactorKind> factors_with_stats(const DiagnosisReport& r) {
  std::vector<FactorKind> out;
  for (FactorKind f : kAllFactors) {
    for (const TrackerSection& t : r.trackers) {
      if (std::any_of(t.stats.begin(), t.stats.end(), [f](const FactorStats& s) { return s.factor == f; })) {
        out.push_back(f);
        break;
      }
    }
  }
  return out;
}

inline const FactorStats* find_stats(const TrackerSection& t, FactorKind f) {
  for (const FactorStats& s : t.stats) {
    if (s.factor == f) return &s;
  }
  return nullptr;
}

inline void tracker_legend(Svg& svg, const DiagnosisReport& r, double x, double y) {
  for (std::size_t i = 0; i < r.trackers.size(); ++i) {
    const double yy = y + 16.0 * static_cast<double>(i);
    svg.rect(x, yy - 9, 10, 10, palette(i));
    svg.text(x + 14, yy, r.trackers[i].name, "start");
  }
}

// Stacked horizontal bar per tracker, one segment per failure cause.
inline std::string proportion_chart(const DiagnosisReport& r) {
  const double left = 140, bar_w = 600, row_h = 34, top = 50;
  const double height = top + row_h * static_cast<double>(r.trackers.size()) + 60;
  Svg svg(left + bar_w + 40, height, "Failure causes per tracker");
  for (std::size_t i = 0; i < r.trackers.size(); ++i) {
    const TrackerSection& t = r.trackers[i];
    const double y = top + row_h * static_cast<double>(i);
    svg.text(left - 8, y + 15, t.name, "end");
    if (t.failure_proportions.empty()) {
      svg.text(left + 4, y + 15, "no failures", "start");
      continue;
    }
    double x = left;
    for (const auto& [cause, frac] : t.failure_proportions) {
      const double w = bar_w * frac;
      svg.rect(x, y, w, 22, palette(static_cast<std::size_t>(cause)));
      if (w >= 28) svg.value(x + w / 2, y + 15, frac);
      x += w;
    }
  }
  const double ly = height - 30;
  double lx = left;
  for (std::size_t c = 0; c <= static_cast<std::size_t>(Cause::Others); ++c) {
    svg.rect(lx, ly - 9, 10, 10, palette(c));
    svg.text(lx + 13, ly, std::string(cause_name(static_cast<Cause>(c))), "start", 10);
    lx += 62;
  }
  return svg.str();
}

template <typename Metric>
std::string grouped_bar_chart(const DiagnosisReport& r, const std::string& title, Metric metric) {
  const auto factors = factors_with_stats(r);
  const double n_tr = static_cast<double>(r.trackers.size());
  const double bar = 18, group_w = bar * n_tr + 20, left = 40, top = 50, plot_h = 260;
  const double width = left + group_w * static_cast<double>(factors.size()) + 180;
  Svg svg(width, top + plot_h + 60, title);
  const double base = top + plot_h;
  svg.line(left, base, left + group_w * static_cast<double>(factors.size()), base);
  for (std::size_t g = 0; g < factors.size(); ++g) {
    const double gx = left + group_w * static_cast<double>(g) + 10;
    for (std::size_t i = 0; i < r.trackers.size(); ++i) {
      const FactorStats* s = find_stats(r.trackers[i], factors[g]);
      if (!s) continue;
      const double v = metric(*s);
      const double x = gx + bar * static_cast<double>(i);
      svg.rect(x + 1, base - plot_h * v, bar - 2, plot_h * v, palette(i));
      svg.value(x + bar / 2, base - plot_h * v - 4, v, 8);
    }
    svg.text(gx + bar * n_tr / 2, base + 18, std::string(factor_name(factors[g])));
  }
  tracker_legend(svg, r, width - 160, top + 10);
  return svg.str();
}

// Mean success as a square marker, whiskers one standard deviation each way.
inline std::string consistency_chart(const DiagnosisReport& r) {
  const auto factors = factors_with_stats(r);
  const double n_tr = static_cast<double>(r.trackers.size());
  const double slot = 34, group_w = slot * n_tr + 20, left = 40, top = 50, plot_h = 260;
  const double width = left + group_w * static_cast<double>(factors.size()) + 180;
  Svg svg(width, top + plot_h + 60, "Consistency: mean success with standard-deviation whiskers");
  const double base = top + plot_h;
  svg.line(left, base, left + group_w * static_cast<double>(factors.size()), base);
  for (std::size_t g = 0; g < factors.size(); ++g) {
    const double gx = left + group_w * static_cast<double>(g) + 10;
    for (std::size_t i = 0; i < r.trackers.size(); ++i) {
      const FactorStats* s = find_stats(r.trackers[i], factors[g]);
      if (!s) continue;
      const double cx = gx + slot * (static_cast<double>(i) + 0.5);
      const double hi = std::min(1.0, s->mean_success + s->success_stddev);
      const double lo = std::max(0.0, s->mean_success - s->success_stddev);
      svg.line(cx, base - plot_h * hi, cx, base - plot_h * lo, palette(i));
      svg.line(cx - 5, base - plot_h * hi, cx + 5, base - plot_h * hi, palette(i));
      svg.line(cx - 5, base - plot_h * lo, cx + 5, base - plot_h * lo, palette(i));
      const double my = base - plot_h * s->mean_success;
      svg.rect(cx - 4, my - 4, 8, 8, palette(i));
      svg.value(cx, base - plot_h * hi - 14, s->mean_success, 8);
      svg.value(cx, base - plot_h * hi - 4, s->success_stddev, 7);
    }
    svg.text(gx + slot * n_tr / 2, base + 18, std::string(factor_name(factors[g])));
  }
  tracker_legend(svg, r, width - 160, top + 10);
  return svg.str();
}

}  // namespace detail

inline HumanReport render_human(const DiagnosisReport& r) {
  HumanReport out;
  std::string md;
  md += "# Tracker diagnosis report\n\n";
  md += "Generated by " + r.tool_version + ". Digest `" + r.digest + "`.\n\n";
  md += "Thresholds: overlap run > " + std::to_string(r.config.tau_op) + " frames, lead-in >= " +
        std::to_string(r.config.tau_s) + " (kept <= " + std::to_string(r.config.max_prefix) +
        "), lead-out = " + std::to_string(r.config.tau_e) + ", failure IoU < " +
        fixed3(r.config.tau_iou) + ", success IoU > " + fixed3(r.config.success_threshold) + ".\n\n";

  md += "## Corpus\n\n| Factor | Clips |\n|---|---:|\n";
  for (FactorKind f : kAllFactors) {
    const auto it = r.corpus.census.find(f);
    md += "| " + std::string(factor_name(f)) + " | " +
          std::to_string(it == r.corpus.census.end() ? 0 : it->second) + " |\n";
  }
  md += "\nTotal: " + std::to_string(r.corpus.total_clips) + " clips, " +
        std::to_string(r.corpus.total_frames) + " frames.\n";

  if (r.trackers.empty()) {
    out.markdown = md;
    return out;
  }

  md += "\n## Failure causes\n\n![failure causes](failure_proportions.svg)\n\n| Tracker |";
  for (std::size_t c = 0; c <= static_cast<std::size_t>(Cause::Others); ++c) {
    md += " " + std::string(cause_name(static_cast<Cause>(c))) + " |";
  }
  md += "\n|---|";
  for (std::size_t c = 0; c <= static_cast<std::size_t>(Cause::Others); ++c) md += "---:|";
  md += "\n";
  for (const TrackerSection& t : r.trackers) {
    if (t.failure_proportions.empty()) {
      md += "| " + t.name + " | no failures |";
      for (std::size_t c = 1; c <= static_cast<std::size_t>(Cause::Others); ++c) md += " |";
      md += "\n";
      continue;
    }
    md += "| " + t.name + " |";
    for (std::size_t c = 0; c <= static_cast<std::size_t>(Cause::Others); ++c) {
      const auto it = t.failure_proportions.find(static_cast<Cause>(c));
      md += " " + (it == t.failure_proportions.end() ? std::string("-") : fixed3(it->second)) + " |";
    }
    md += "\n";
  }

  const auto factors = detail::factors_with_stats(r);
  auto factor_table = [&](const std::string& heading, const std::string& chart, auto cell) {
    md += "\n## " + heading + "\n\n";
    if (!chart.empty()) md += "![" + heading + "](" + chart + ")\n\n";
    md += "| Factor |";
    for (const TrackerSection& t : r.trackers) md += " " + t.name + " |";
    md += "\n|---|";
    for (std::size_t i = 0; i < r.trackers.size(); ++i) md += "---:|";
    md += "\n";
    for (FactorKind f : factors) {
      md += "| " + std::string(factor_name(f)) + " |";
      for (const TrackerSection& t : r.trackers) {
        const FactorStats* s = detail::find_stats(t, f);
        md += " " + (s ? cell(*s) : std::string("-")) + " |";
      }
      md += "\n";
    }
  };
  auto flag = [](const FactorStats& s) { return s.low_support ? std::string("*") : std::string(); };

  factor_table("Failure rate", "failure_rates.svg", [&](const FactorStats& s) {
    return fixed3(s.failure_rate) + " (" + std::to_string(s.n_failures) + "/" +
           std::to_string(s.n_clips) + ")" + flag(s);
  });
  factor_table("Mean success score", "success_comparison.svg",
               [&](const FactorStats& s) { return fixed3(s.mean_success) + flag(s); });
  factor_table("Consistency (variance / std. dev. of success scores)", "consistency.svg",
               [&](const FactorStats& s) {
                 return fixed3(s.success_variance) + " / " + fixed3(s.success_stddev) + flag(s);
               });
  md += "\n`*` fewer than " + std::to_string(r.config.min_clips_per_factor) +
        " clips for this factor; treat as low support.\n";

  md += "\n## Ranking per factor\n";
  for (const RankingTable& t : r.rankings) {
    md += "\n### " + std::string(factor_name(t.factor)) +
          "\n\n| Rank | Tracker | Mean success | Failure rate |\n|---:|---|---:|---:|\n";
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      md += "| " + std::to_string(i + 1) + " | " + t.rows[i].tracker + " | " +
            fixed3(t.rows[i].mean_success) + " | " + fixed3(t.rows[i].failure_rate) + " |\n";
    }
  }
  out.markdown = md;

  out.charts.push_back({"failure_proportions.svg", detail::proportion_chart(r)});
  out.charts.push_back({"failure_rates.svg",
                        detail::grouped_bar_chart(r, "Failure rate per factor",
                                                  [](const FactorStats& s) { return s.failure_rate; })});
  out.charts.push_back({"success_comparison.svg",
                        detail::grouped_bar_chart(r, "Mean success score per factor",
                                                  [](const FactorStats& s) { return s.mean_success; })});
  out.charts.push_back({"consistency.svg", detail::consistency_chart(r)});
  return out;
}

}  // namespace tracklinic
