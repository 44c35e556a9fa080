#pragma once

// Single-factor clip extraction. Every clip is a clean lead-in (nc1), one
// pure run of its factor (c2) and, for T1 factors, a short clean lead-out
// (nc3) on which the tracker's state is judged.

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "tracklinic/annotation.hpp"
#include "tracklinic/core.hpp"

namespace tracklinic {

struct ExtractedClip {
  std::string clip_id;
  std::string source_id;
  FactorKind factor = FactorKind::OCC;
  FrameRange frame_range;           // source indices
  FrameRange nc1;                   // source indices
  FrameRange c2;                    // source indices
  std::optional<FrameRange> nc3;    // T1 only
  std::vector<BoundingBox> groundtruth;  // local frames 0..length-1
  std::vector<FrameLabels> labels;       // local frames 0..length-1

  std::size_t length() const { return frame_range.length(); }
  std::size_t to_local(std::size_t source_frame) const { return source_frame - frame_range.start; }

  friend bool operator==(const ExtractedClip&, const ExtractedClip&) = default;
};

inline std::string make_clip_id(const std::string& source_id, FactorKind f, std::size_t c2_start) {
  return source_id + "_" + std::string(factor_name(f)) + "_" + std::to_string(c2_start);
}

struct ExtractionWarning {
  std::string source_id;
  FactorKind factor = FactorKind::OCC;
  FrameRange run;
  std::string message;
};

// Maximal runs whose active set is exactly {factor}, ascending.
inline std::vector<FrameRange> find_challenge_runs(const SequenceRecord& seq, FactorKind factor) {
  std::vector<FrameRange> runs;
  const std::size_t n = seq.labels.size();
  std::size_t t = 0;
  while (t < n) {
    if (!seq.labels[t].active.is_exactly(factor)) {
      ++t;
      continue;
    }
    std::size_t end = t;
    while (end + 1 < n && seq.labels[end + 1].active.is_exactly(factor)) ++end;
    runs.push_back({t, end});
    t = end + 1;
  }
  return runs;
}

namespace detail {

inline ExtractedClip cut_clip(const SequenceRecord& seq, FactorKind factor, FrameRange nc1,
                              FrameRange c2, std::optional<FrameRange> nc3) {
  ExtractedClip clip;
  clip.clip_id = make_clip_id(seq.sequence_id, factor, c2.start);
  clip.source_id = seq.sequence_id;
  clip.factor = factor;
  clip.frame_range = {nc1.start, nc3 ? nc3->end : c2.end};
  clip.nc1 = nc1;
  clip.c2 = c2;
  clip.nc3 = nc3;
  clip.groundtruth.assign(seq.groundtruth.begin() + clip.frame_range.start,
                          seq.groundtruth.begin() + clip.frame_range.end + 1);
  clip.labels.reserve(clip.length());
  for (std::size_t s = clip.frame_range.start; s <= clip.frame_range.end; ++s) {
    clip.labels.push_back({s - clip.frame_range.start, seq.labels[s].active});
  }
  return clip;
}

}  // namespace detail

// Emits one clip per qualifying challenge run, ordered by factor (table order)
// then by run start. Records that fail validate_labels are rejected.
inline std::vector<ExtractedClip> extract_clips(const SequenceRecord& seq, const DiagnosisConfig& cfg,
                                                std::vector<ExtractionWarning>* warnings = nullptr) {
  if (const auto violations = validate_labels(seq); !violations.empty()) {
    throw DataError("extract_clips: sequence '" + seq.sequence_id + "' has " +
                    std::to_string(violations.size()) + " label violation(s), first at frame " +
                    std::to_string(violations.front().frame) + ": " + violations.front().message);
  }
  auto warn = [&](FactorKind f, FrameRange run, std::string msg) {
    if (warnings) warnings->push_back({seq.sequence_id, f, run, std::move(msg)});
  };

  const std::size_t n = seq.labels.size();
  const auto tau_s = static_cast<std::size_t>(cfg.tau_s);
  const auto tau_e = static_cast<std::size_t>(cfg.tau_e);
  const auto max_prefix = static_cast<std::size_t>(cfg.max_prefix);
  auto clean = [&](std::size_t t) { return seq.labels[t].active.empty(); };

  std::vector<ExtractedClip> clips;
  for (FactorKind factor : kAllFactors) {
    for (const FrameRange& run : find_challenge_runs(seq, factor)) {
      std::size_t prefix = 0;
      while (prefix < run.start && clean(run.start - prefix - 1)) ++prefix;
      if (prefix < tau_s) continue;

      const std::size_t kept = factor == FactorKind::SV ? prefix : std::min(prefix, max_prefix);
      const FrameRange nc1{run.start - kept, run.start - 1};

      std::optional<FrameRange> nc3;
      if (extraction_type(factor) == ExtractionType::T1) {
        if (run.end + tau_e >= n) continue;
        bool suffix_clean = true;
        for (std::size_t k = 1; k <= tau_e; ++k) suffix_clean = suffix_clean && clean(run.end + k);
        if (!suffix_clean) continue;
        if (seq.groundtruth[run.end + tau_e].is_absent()) {
          warn(factor, run, "lead-out ends on an absent target; clip skipped");
          continue;
        }
        nc3 = FrameRange{run.end + 1, run.end + tau_e};
      } else if (seq.groundtruth[run.end].is_absent()) {
        warn(factor, run, "visible-type challenge ends on an absent target; clip skipped");
        continue;
      }
      if (seq.groundtruth[nc1.start].is_absent()) {
        warn(factor, run, "lead-in starts on an absent target; clip skipped");
        continue;
      }
      clips.push_back(detail::cut_clip(seq, factor, nc1, run, nc3));
    }
  }
  return clips;
}

// Canonical corpus order: source id, then factor, then challenge start.
inline void sort_clips(std::vector<ExtractedClip>& clips) {
  std::sort(clips.begin(), clips.end(), [](const ExtractedClip& a, const ExtractedClip& b) {
    return std::tuple(a.source_id, factor_index(a.factor), a.c2.start) <
           std::tuple(b.source_id, factor_index(b.factor), b.c2.start);
  });
}

inline std::map<FactorKind, std::size_t> census(const std::vector<ExtractedClip>& clips) {
  std::map<FactorKind, std::size_t> counts;
  for (FactorKind f : kAllFactors) counts[f] = 0;
  for (const ExtractedClip& c : clips) ++counts[c.factor];
  return counts;
}

// Audits a clip from its own stored frames alone, independent of how it was
// cut. Returns human-readable violations; empty means the clip is sound.
inline std::vector<std::string> check_clip_invariants(const ExtractedClip& clip,
                                                      const DiagnosisConfig& cfg) {
  std::vector<std::string> bad;
  auto fail = [&](std::string m) { bad.push_back(clip.clip_id + ": " + std::move(m)); };

  const FrameRange& fr = clip.frame_range;
  if (fr.end < fr.start) {
    fail("empty frame range");
    return bad;
  }
  if (clip.groundtruth.size() != clip.length() || clip.labels.size() != clip.length()) {
    fail("frame copies do not match the frame range length");
    return bad;
  }
  if (clip.nc1.start != fr.start) fail("lead-in does not start the clip");
  if (clip.nc1.end < clip.nc1.start) fail("empty lead-in");
  if (clip.c2.start != clip.nc1.end + 1) fail("challenge does not immediately follow the lead-in");
  if (clip.c2.end < clip.c2.start) fail("empty challenge segment");
  const bool t1 = extraction_type(clip.factor) == ExtractionType::T1;
  if (t1) {
    if (!clip.nc3) {
      fail("T1 clip without lead-out");
    } else {
      if (clip.nc3->start != clip.c2.end + 1) fail("lead-out does not immediately follow the challenge");
      if (clip.nc3->end != fr.end) fail("lead-out does not end the clip");
      if (clip.nc3->length() != static_cast<std::size_t>(cfg.tau_e)) fail("lead-out length differs from tau_e");
    }
  } else {
    if (clip.nc3) fail("T2 clip with a lead-out");
    if (clip.c2.end != fr.end) fail("challenge does not end the clip");
  }
  if (!bad.empty()) return bad;

  const std::size_t nc1_len = clip.nc1.length();
  if (nc1_len < static_cast<std::size_t>(cfg.tau_s)) fail("lead-in shorter than tau_s");
  if (clip.factor != FactorKind::SV && nc1_len > static_cast<std::size_t>(cfg.max_prefix)) {
    fail("lead-in longer than max_prefix");
  }

  for (std::size_t local = 0; local < clip.length(); ++local) {
    const std::size_t src = fr.start + local;
    const FactorSet& s = clip.labels[local].active;
    if (clip.labels[local].frame_index != local) fail("label frame index not local");
    if (clip.c2.contains(src)) {
      if (!s.is_exactly(clip.factor)) {
        fail("impure challenge frame " + std::to_string(src) + " " + s.to_string());
      }
    } else if (!s.empty()) {
      fail("non-clean lead frame " + std::to_string(src) + " " + s.to_string());
    }
  }
  if (clip.groundtruth.front().is_absent()) fail("first frame target absent");
  if (clip.groundtruth.back().is_absent()) fail("last frame target absent");
  return bad;
}

}  // namespace tracklinic
