#pragma once

// Scores tracker results on extracted clips and aggregates the per-factor
// diagnosis metrics: failure attribution, failure rate, success score and
// consistency.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "tracklinic/core.hpp"
#include "tracklinic/extraction.hpp"

namespace tracklinic {

struct TrackerRun {
  std::string tracker_name;
  std::string clip_id;
  std::vector<BoundingBox> predictions;  // index 0 is the initialization frame
};

enum class Verdict : std::uint8_t { Success, FailedOnFactor, FailedBeforeChallenge };

constexpr std::string_view verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Success: return "success";
    case Verdict::FailedOnFactor: return "failed_on_factor";
    case Verdict::FailedBeforeChallenge: return "failed_before_challenge";
  }
  return "?";
}

inline std::optional<Verdict> parse_verdict(std::string_view s) {
  for (Verdict v : {Verdict::Success, Verdict::FailedOnFactor, Verdict::FailedBeforeChallenge}) {
    if (verdict_name(v) == s) return v;
  }
  return std::nullopt;
}

struct ClipOutcome {
  std::string clip_id;
  FactorKind factor = FactorKind::OCC;
  Verdict verdict = Verdict::Success;
  double last_frame_iou = 0.0;
  double pre_challenge_iou = 0.0;
  double success_score = 0.0;

  bool failed() const { return verdict != Verdict::Success; }

  friend bool operator==(const ClipOutcome&, const ClipOutcome&) = default;
};

// Failure on the clip's own factor, or "Others" when the target was already
// lost before the challenge began.
enum class Cause : std::uint8_t { OCC, ROT, OV, BC, IV, MB, SV, OB, OR, Others };

constexpr Cause cause_of(FactorKind f) { return static_cast<Cause>(factor_index(f)); }

constexpr std::string_view cause_name(Cause c) {
  return c == Cause::Others ? std::string_view("Others")
                            : factor_name(static_cast<FactorKind>(c));
}

inline std::optional<Cause> parse_cause(std::string_view s) {
  if (s == "Others") return Cause::Others;
  if (auto f = parse_factor(s)) return cause_of(*f);
  return std::nullopt;
}

inline ClipOutcome evaluate_clip(const ExtractedClip& clip, const TrackerRun& run,
                                 const DiagnosisConfig& cfg) {
  if (run.predictions.size() != clip.length()) {
    throw DataError("clip '" + clip.clip_id + "': tracker '" + run.tracker_name + "' reported " +
                    std::to_string(run.predictions.size()) + " frames, clip has " +
                    std::to_string(clip.length()));
  }
  const std::size_t n = clip.length();
  std::vector<std::optional<double>> iou(n);
  for (std::size_t t = 0; t < n; ++t) iou[t] = compute_iou(run.predictions[t], clip.groundtruth[t]);

  if (!iou.back()) {
    throw ContractViolation("clip '" + clip.clip_id + "' ends on an absent target");
  }

  ClipOutcome out;
  out.clip_id = clip.clip_id;
  out.factor = clip.factor;
  out.last_frame_iou = *iou.back();

  // Last lead-in frame with a defined overlap; the lead-in starts on a
  // visible target, so one always exists.
  const std::size_t nc1_first = clip.to_local(clip.nc1.start);
  std::size_t k = clip.to_local(clip.nc1.end);
  while (k > nc1_first && !iou[k]) --k;
  out.pre_challenge_iou = iou[k].value_or(1.0);

  if (out.last_frame_iou >= cfg.tau_iou) {
    out.verdict = Verdict::Success;
  } else if (out.pre_challenge_iou < cfg.tau_iou) {
    out.verdict = Verdict::FailedBeforeChallenge;
  } else {
    out.verdict = Verdict::FailedOnFactor;
  }

  std::size_t evaluated = 0, hits = 0;
  for (std::size_t t = 1; t < n; ++t) {
    if (!iou[t]) continue;
    ++evaluated;
    if (*iou[t] > cfg.success_threshold) ++hits;
  }
  out.success_score = evaluated ? static_cast<double>(hits) / static_cast<double>(evaluated) : 0.0;
  return out;
}

// Share of failures per cause; values sum to 1. Empty when nothing failed.
inline std::map<Cause, double> failure_proportions(const std::vector<ClipOutcome>& outcomes) {
  std::map<Cause, std::size_t> counts;
  std::size_t failures = 0;
  for (const ClipOutcome& o : outcomes) {
    if (!o.failed()) continue;
    ++failures;
    ++counts[o.verdict == Verdict::FailedBeforeChallenge ? Cause::Others : cause_of(o.factor)];
  }
  std::map<Cause, double> out;
  for (const auto& [cause, c] : counts) {
    out[cause] = static_cast<double>(c) / static_cast<double>(failures);
  }
  return out;
}

struct FactorStats {
  FactorKind factor = FactorKind::OCC;
  std::size_t n_clips = 0;
  std::size_t n_failures = 0;
  double failure_rate = 0.0;
  double mean_success = 0.0;
  double success_variance = 0.0;  // population variance
  double success_stddev = 0.0;
  bool low_support = false;       // fewer clips than cfg.min_clips_per_factor
  std::vector<double> per_clip_scores;  // ordered by clip id

  friend bool operator==(const FactorStats&, const FactorStats&) = default;
};

inline FactorStats factor_stats(const std::vector<ClipOutcome>& outcomes, FactorKind factor,
                                const DiagnosisConfig& cfg) {
  std::vector<const ClipOutcome*> mine;
  for (const ClipOutcome& o : outcomes) {
    if (o.factor == factor) mine.push_back(&o);
  }
  if (mine.empty()) {
    throw DataError("factor_stats: no clips for factor " + std::string(factor_name(factor)));
  }
  std::sort(mine.begin(), mine.end(),
            [](const ClipOutcome* a, const ClipOutcome* b) { return a->clip_id < b->clip_id; });

  FactorStats st;
  st.factor = factor;
  st.n_clips = mine.size();
  for (const ClipOutcome* o : mine) {
    const bool counts = o->failed() && !(cfg.failure_rate_excludes_others &&
                                         o->verdict == Verdict::FailedBeforeChallenge);
    if (counts) ++st.n_failures;
    st.per_clip_scores.push_back(o->success_score);
  }
  const auto n = static_cast<double>(st.n_clips);
  st.failure_rate = static_cast<double>(st.n_failures) / n;
  double sum = 0.0;
  for (double s : st.per_clip_scores) sum += s;
  st.mean_success = sum / n;
  double sq = 0.0;
  for (double s : st.per_clip_scores) sq += (s - st.mean_success) * (s - st.mean_success);
  st.success_variance = sq / n;
  st.success_stddev = std::sqrt(st.success_variance);
  st.low_support = st.n_clips < static_cast<std::size_t>(cfg.min_clips_per_factor);
  return st;
}

// Stats for every factor that has at least one clip, in table order.
inline std::vector<FactorStats> all_factor_stats(const std::vector<ClipOutcome>& outcomes,
                                                 const DiagnosisConfig& cfg) {
  std::vector<FactorStats> out;
  for (FactorKind f : kAllFactors) {
    const bool any = std::any_of(outcomes.begin(), outcomes.end(),
                                 [f](const ClipOutcome& o) { return o.factor == f; });
    if (any) out.push_back(factor_stats(outcomes, f, cfg));
  }
  return out;
}

struct RankingRow {
  std::string tracker;
  double mean_success = 0.0;
  double failure_rate = 0.0;

  friend bool operator==(const RankingRow&, const RankingRow&) = default;
};

struct RankingTable {
  FactorKind factor = FactorKind::OCC;
  std::vector<RankingRow> rows;  // best first

  friend bool operator==(const RankingTable&, const RankingTable&) = default;
};

// Per factor: mean success descending, then failure rate ascending, then name.
inline std::vector<RankingTable> cross_tracker_table(
    const std::map<std::string, std::vector<FactorStats>>& stats_by_tracker) {
  std::vector<RankingTable> tables;
  for (FactorKind f : kAllFactors) {
    RankingTable table{f, {}};
    for (const auto& [name, stats] : stats_by_tracker) {
      for (const FactorStats& st : stats) {
        if (st.factor == f) table.rows.push_back({name, st.mean_success, st.failure_rate});
      }
    }
    if (table.rows.empty()) continue;
    std::sort(table.rows.begin(), table.rows.end(), [](const RankingRow& a, const RankingRow& b) {
      return std::tuple(-a.mean_success, a.failure_rate, a.tracker) <
             std::tuple(-b.mean_success, b.failure_rate, b.tracker);
    });
    tables.push_back(std::move(table));
  }
  return tables;
}

}  // namespace tracklinic
