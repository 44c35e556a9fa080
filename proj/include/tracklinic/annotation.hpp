#pragma once

// Completes per-frame annotations: shape variation is labeled from the
// groundtruth geometry, and long occlusion overlaps become compound factors.

#include <string>
#include <utility>
#include <vector>

#include "tracklinic/core.hpp"

namespace tracklinic {

// Closed interval of acceptable area / aspect-ratio change before a frame
// counts as shape variation.
inline constexpr double kShapeRatioMin = 0.25;
inline constexpr double kShapeRatioMax = 4.0;

inline bool ratio_outside_shape_range(double ratio) {
  return ratio < kShapeRatioMin || ratio > kShapeRatioMax;
}

// Recomputes the SV flag on every frame against the first (initialization)
// frame. Absent frames never carry SV; no other label is touched.
inline SequenceRecord annotate_shape_variation(const SequenceRecord& seq,
                                               const DiagnosisConfig& /*cfg*/) {
  if (seq.groundtruth.empty() || seq.groundtruth.front().is_absent()) {
    throw DataError("sequence '" + seq.sequence_id +
                    "': frame 0 groundtruth must be present to annotate shape variation");
  }
  SequenceRecord out = seq;
  const BoundingBox& ref = seq.groundtruth.front();
  const double ref_area = box_area(ref);
  const double ref_aspect = aspect_ratio(ref);
  for (std::size_t t = 0; t < out.labels.size(); ++t) {
    bool sv = false;
    if (t >= 1 && seq.groundtruth[t].is_present()) {
      sv = ratio_outside_shape_range(box_area(seq.groundtruth[t]) / ref_area) ||
           ratio_outside_shape_range(aspect_ratio(seq.groundtruth[t]) / ref_aspect);
    }
    out.labels[t].active.set(FactorKind::SV, sv);
  }
  return out;
}

struct OverlapStatistic {
  std::pair<FactorKind, FactorKind> pair;
  std::vector<std::size_t> run_lengths;  // maximal joint runs, in frame order
  std::size_t qualifying_runs = 0;       // runs strictly longer than tau_op

  friend bool operator==(const OverlapStatistic&, const OverlapStatistic&) = default;
};

namespace detail {

// Maximal runs of frames on which both factors are active.
inline std::vector<FrameRange> joint_runs(const SequenceRecord& seq, FactorKind a, FactorKind b) {
  std::vector<FrameRange> runs;
  const std::size_t n = seq.labels.size();
  std::size_t t = 0;
  while (t < n) {
    const FactorSet& s = seq.labels[t].active;
    if (!(s.contains(a) && s.contains(b))) {
      ++t;
      continue;
    }
    std::size_t end = t;
    while (end + 1 < n && seq.labels[end + 1].active.contains(a) &&
           seq.labels[end + 1].active.contains(b)) {
      ++end;
    }
    runs.push_back({t, end});
    t = end + 1;
  }
  return runs;
}

inline void require_simple_labels(const SequenceRecord& seq, const char* op) {
  for (const FrameLabels& fl : seq.labels) {
    if (fl.active.has_compound()) {
      throw DataError(std::string(op) + ": sequence '" + seq.sequence_id + "' frame " +
                      std::to_string(fl.frame_index) +
                      " already carries a compound label; derivation runs once on simple labels");
    }
  }
}

}  // namespace detail

// One entry per unordered pair of simple factors that co-occur at least once,
// pairs listed in table order.
inline std::vector<OverlapStatistic> compute_overlap_statistics(const SequenceRecord& seq,
                                                                const DiagnosisConfig& cfg) {
  std::vector<OverlapStatistic> stats;
  for (std::size_t i = 0; i < kSimpleFactors.size(); ++i) {
    for (std::size_t j = i + 1; j < kSimpleFactors.size(); ++j) {
      const auto runs = detail::joint_runs(seq, kSimpleFactors[i], kSimpleFactors[j]);
      if (runs.empty()) continue;
      OverlapStatistic st{{kSimpleFactors[i], kSimpleFactors[j]}, {}, 0};
      for (const FrameRange& r : runs) {
        st.run_lengths.push_back(r.length());
        if (r.length() > static_cast<std::size_t>(cfg.tau_op)) ++st.qualifying_runs;
      }
      stats.push_back(std::move(st));
    }
  }
  return stats;
}

// Frames inside a joint OCC+BC (OCC+ROT) run longer than tau_op become O-B
// (O-R) and drop the constituent simple labels. A frame that qualifies for
// both gains both compounds and loses OCC, BC and ROT.
inline SequenceRecord derive_compound_factors(const SequenceRecord& seq,
                                              const DiagnosisConfig& cfg) {
  detail::require_simple_labels(seq, "derive_compound_factors");
  const auto tau = static_cast<std::size_t>(cfg.tau_op);
  const std::size_t n = seq.labels.size();
  std::vector<bool> ob(n, false), orr(n, false);
  for (const FrameRange& r : detail::joint_runs(seq, FactorKind::OCC, FactorKind::BC)) {
    if (r.length() > tau) std::fill(ob.begin() + r.start, ob.begin() + r.end + 1, true);
  }
  for (const FrameRange& r : detail::joint_runs(seq, FactorKind::OCC, FactorKind::ROT)) {
    if (r.length() > tau) std::fill(orr.begin() + r.start, orr.begin() + r.end + 1, true);
  }

  SequenceRecord out = seq;
  for (std::size_t t = 0; t < n; ++t) {
    FactorSet& s = out.labels[t].active;
    if (ob[t]) {
      s.insert(FactorKind::OB);
      s.erase(FactorKind::OCC);
      s.erase(FactorKind::BC);
    }
    if (orr[t]) {
      s.insert(FactorKind::OR);
      s.erase(FactorKind::OCC);
      s.erase(FactorKind::ROT);
    }
  }
  return out;
}

enum class ViolationKind { Exclusivity, Visibility, Length, FrameIndex };

struct LabelViolation {
  ViolationKind kind;
  std::size_t frame = 0;
  std::string message;
};

// Consistency audit. Violations are returned as data; an empty list means the
// record is fit for extraction.
inline std::vector<LabelViolation> validate_labels(const SequenceRecord& seq) {
  std::vector<LabelViolation> out;
  if (seq.labels.size() != seq.frame_count()) {
    out.push_back({ViolationKind::Length, 0,
                   "label rows (" + std::to_string(seq.labels.size()) +
                       ") differ from groundtruth frames (" +
                       std::to_string(seq.frame_count()) + ")"});
  }
  const std::size_t n = std::min(seq.labels.size(), seq.groundtruth.size());
  for (std::size_t t = 0; t < seq.labels.size(); ++t) {
    if (seq.labels[t].frame_index != t) {
      out.push_back({ViolationKind::FrameIndex, t,
                     "frame index " + std::to_string(seq.labels[t].frame_index) +
                         " at row " + std::to_string(t)});
    }
  }
  for (std::size_t t = 0; t < n; ++t) {
    const FactorSet& s = seq.labels[t].active;
    const bool ob_clash =
        s.contains(FactorKind::OB) && (s.contains(FactorKind::OCC) || s.contains(FactorKind::BC));
    const bool or_clash =
        s.contains(FactorKind::OR) && (s.contains(FactorKind::OCC) || s.contains(FactorKind::ROT));
    if (ob_clash || or_clash) {
      out.push_back({ViolationKind::Exclusivity, t,
                     "compound label together with a constituent: " + s.to_string()});
    }
    if (s.contains(FactorKind::OV) && seq.groundtruth[t].is_present()) {
      out.push_back({ViolationKind::Visibility, t, "out-of-view frame with a present box"});
    }
  }
  return out;
}

}  // namespace tracklinic
