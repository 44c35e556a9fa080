#pragma once

// Synthetic corpora with known ground truth: planted label layouts, smooth
// box trajectories, synthetic tracker runs with planted per-factor failure
// probabilities, and a brute-force reference for clip extraction.
//
// Random numbers come from SplitMix64 so that any implementation can
// reproduce a corpus bit for bit:
//   state += 0x9E3779B97F4A7C15
//   z = state
//   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   return z ^ (z >> 31)
// uniform01 = (next() >> 11) * 2^-53; uniform_int(lo, hi) = lo + next() % (hi - lo + 1).
// Per-key streams are seeded with splitmix(seed ^ fnv1a64(key)).

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tracklinic/core.hpp"
#include "tracklinic/evaluation.hpp"
#include "tracklinic/extraction.hpp"

namespace tracklinic::sim {

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) {
    return lo + next() % (hi - lo + 1);
  }

 private:
  std::uint64_t state_;
};

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline SplitMix64 keyed_stream(std::uint64_t seed, std::string_view key) {
  return SplitMix64(SplitMix64(seed ^ fnv1a64(key)).next());
}

// ---------------------------------------------------------------------------
// Layouts and sequences

struct PlantedRun {
  FactorKind factor = FactorKind::OCC;  // compounds plant both constituents
  std::size_t start = 0;
  std::size_t length = 0;

  std::size_t end() const { return start + length - 1; }
  friend bool operator==(const PlantedRun&, const PlantedRun&) = default;
};

struct Layout {
  std::string sequence_id;
  std::size_t frame_count = 0;
  std::vector<PlantedRun> runs;

  friend bool operator==(const Layout&, const Layout&) = default;
};

inline FactorSet planted_labels(FactorKind f) {
  switch (f) {
    case FactorKind::OB: return {FactorKind::OCC, FactorKind::BC};
    case FactorKind::OR: return {FactorKind::OCC, FactorKind::ROT};
    default: return {f};
  }
}

// Box size multiplier on planted shape-variation frames. Natural size drift
// keeps area within [0.85^2, 1.15^2] of frame 0, so x3 lands well past 4.
inline constexpr double kShapeBlowup = 3.0;

inline double round2(double v) { return std::round(v * 100.0) / 100.0; }

// Realizes a layout: labels match the planted runs exactly (simple factors
// only, compounds as their constituents), and the groundtruth is a smooth
// random trajectory that is absent on out-of-view frames and on fully
// occluded stretches, and enlarged on shape-variation frames.
inline SequenceRecord synth_sequence(const Layout& layout, std::uint64_t seed) {
  const std::size_t n = layout.frame_count;
  const std::string& id = layout.sequence_id;
  if (n == 0) throw DataError("layout '" + id + "': zero frames");

  std::vector<FactorSet> active(n);
  for (const PlantedRun& r : layout.runs) {
    if (r.length == 0 || r.end() >= n) {
      throw DataError("layout '" + id + "': run " + std::string(factor_name(r.factor)) + "@" +
                      std::to_string(r.start) + "+" + std::to_string(r.length) +
                      " falls outside " + std::to_string(n) + " frames");
    }
    if (r.start == 0 && (r.factor == FactorKind::OV || r.factor == FactorKind::SV)) {
      throw DataError("layout '" + id + "': frame 0 is the shape reference and must be visible");
    }
    for (std::size_t t = r.start; t <= r.end(); ++t) {
      FactorSet s = active[t];
      for (FactorKind f : kSimpleFactors) {
        if (planted_labels(r.factor).contains(f)) s.insert(f);
      }
      if (s.contains(FactorKind::OV) && s.contains(FactorKind::SV)) {
        throw DataError("layout '" + id + "': frame " + std::to_string(t) +
                        " planted with both OV and SV (SV needs a visible box)");
      }
      active[t] = s;
    }
  }

  SplitMix64 rng = keyed_stream(seed, id);

  std::vector<bool> hidden(n, false);
  for (const PlantedRun& r : layout.runs) {
    if (!planted_labels(r.factor).contains(FactorKind::OCC) || r.length < 3) continue;
    if (rng.uniform01() < 0.5) {
      for (std::size_t t = r.start + 1; t < r.end(); ++t) hidden[t] = true;
    }
  }

  double cx = rng.uniform(100.0, 500.0);
  double cy = rng.uniform(100.0, 400.0);
  const double base_w = rng.uniform(20.0, 80.0);
  const double base_h = rng.uniform(20.0, 80.0);
  const double phase_s = rng.uniform(0.0, 6.283185307179586);
  const double phase_a = rng.uniform(0.0, 6.283185307179586);
  double vx = rng.uniform(-2.0, 2.0);
  double vy = rng.uniform(-2.0, 2.0);

  std::vector<BoundingBox> gt(n);
  for (std::size_t t = 0; t < n; ++t) {
    if (t > 0) {
      vx = std::clamp(vx + rng.uniform(-0.25, 0.25), -3.0, 3.0);
      vy = std::clamp(vy + rng.uniform(-0.25, 0.25), -3.0, 3.0);
      cx += vx;
      cy += vy;
    }
    const auto td = static_cast<double>(t);
    const double scale = 1.0 + 0.15 * std::sin(phase_s + 0.05 * td);
    const double aspect = 1.0 + 0.1 * std::sin(phase_a + 0.03 * td);
    double w = base_w * scale * std::sqrt(aspect);
    double h = base_h * scale / std::sqrt(aspect);
    if (active[t].contains(FactorKind::SV)) {
      w *= kShapeBlowup;
      h *= kShapeBlowup;
    }
    const bool visible = !active[t].contains(FactorKind::OV) &&
                         !(hidden[t] && !active[t].contains(FactorKind::SV));
    if (visible) {
      gt[t] = BoundingBox::present(round2(cx - w / 2.0), round2(cy - h / 2.0), round2(w), round2(h));
    }
  }
  return make_sequence(id, std::move(gt), active);
}

// Demo layouts: clean gaps of 12..45 frames separating runs of random
// factors, with an occasional overlapping second factor that produces
// mixed frames.
inline std::vector<Layout> demo_layouts(std::uint64_t seed, std::size_t count,
                                        std::size_t target_frames = 320) {
  std::vector<Layout> layouts;
  SplitMix64 rng = keyed_stream(seed, "demo-layouts");
  for (std::size_t i = 0; i < count; ++i) {
    Layout L;
    char buf[32];
    std::snprintf(buf, sizeof buf, "seq%04zu", i);
    L.sequence_id = buf;
    std::size_t cursor = 0;
    while (cursor + 60 < target_frames) {
      const std::size_t gap = rng.uniform_int(12, 45);
      const FactorKind f = kAllFactors[rng.uniform_int(0, kFactorCount - 1)];
      std::size_t len = 0;
      switch (f) {
        case FactorKind::OV: len = rng.uniform_int(3, 10); break;
        case FactorKind::SV: len = rng.uniform_int(5, 20); break;
        case FactorKind::OB:
        case FactorKind::OR: len = rng.uniform_int(4, 15); break;
        default: len = rng.uniform_int(5, 25); break;
      }
      PlantedRun run{f, cursor + gap, len};
      L.runs.push_back(run);
      if (rng.uniform01() < 0.1 && f != FactorKind::OV && f != FactorKind::SV) {
        const FactorKind g = kSimpleFactors[rng.uniform_int(0, 5)];  // never SV
        if (g != FactorKind::OV) {
          const std::size_t off = rng.uniform_int(0, len - 1);
          L.runs.push_back({g, run.start + off, rng.uniform_int(1, 8)});
        }
      }
      cursor = run.end() + 1 + 8;  // room for an overlapping tail
    }
    L.frame_count = cursor + rng.uniform_int(3, 10);
    layouts.push_back(std::move(L));
  }
  return layouts;
}

// ---------------------------------------------------------------------------
// Synthetic trackers

struct SimProfile {
  std::string name = "sim";
  std::array<double, kFactorCount> failure_probability{};  // indexed by factor
  double drift = 4.0;  // pixels per frame
  std::uint64_t seed = 0;

  void validate() const {
    for (double p : failure_probability) {
      if (!(p >= 0.0 && p <= 1.0)) {
        throw DataError("profile '" + name + "': failure probability outside [0,1]");
      }
    }
    if (!(drift >= 0.0)) throw DataError("profile '" + name + "': negative drift");
  }
};

// Tracks the lead-in exactly. With probability profile[factor] (drawn from
// seed + clip id) it then drifts right at constant speed with fixed box size,
// fast enough to miss the final groundtruth box entirely; otherwise it
// follows the groundtruth with a small jitter that keeps IoU above 0.88.
inline TrackerRun synth_tracker_run(const ExtractedClip& clip, const SimProfile& profile) {
  SplitMix64 rng = keyed_stream(profile.seed, clip.clip_id);
  const bool fail = rng.uniform01() < profile.failure_probability[factor_index(clip.factor)];

  TrackerRun run{profile.name, clip.clip_id, clip.groundtruth};
  const std::size_t n = clip.length();
  const std::size_t lead_end = clip.to_local(clip.nc1.end);

  if (!fail) {
    for (std::size_t t = lead_end + 1; t < n; ++t) {
      const double jx = rng.uniform(-0.015, 0.015);
      const double jy = rng.uniform(-0.015, 0.015);
      if (clip.groundtruth[t].is_absent()) continue;
      const Rect& g = clip.groundtruth[t].rect();
      run.predictions[t] = BoundingBox::present(g.x + jx * g.w, g.y + jy * g.h, g.w, g.h);
    }
    return run;
  }

  std::size_t anchor_at = lead_end;
  while (clip.groundtruth[anchor_at].is_absent()) --anchor_at;
  const Rect anchor = clip.groundtruth[anchor_at].rect();
  const Rect& last = clip.groundtruth.back().rect();
  const auto steps = static_cast<double>(n - 1 - lead_end);
  const double needed = (last.x + last.w - anchor.x + 1.0) / steps;
  const double speed = std::max(profile.drift, needed);
  for (std::size_t t = lead_end + 1; t < n; ++t) {
    const auto k = static_cast<double>(t - lead_end);
    run.predictions[t] = BoundingBox::present(anchor.x + speed * k, anchor.y, anchor.w, anchor.h);
  }
  return run;
}

// ---------------------------------------------------------------------------
// Reference extraction

// Literal enumeration of every (factor, contiguous segment) candidate,
// testing each extraction condition by direct scanning. Deliberately shares
// nothing with extract_clips beyond the data types.
inline std::vector<ExtractedClip> oracle_extract(const SequenceRecord& seq, const DiagnosisConfig& cfg) {
  const long n = static_cast<long>(seq.labels.size());
  const long tau_s = cfg.tau_s, tau_e = cfg.tau_e, cap = cfg.max_prefix;
  auto labels_at = [&](long t) { return seq.labels[static_cast<std::size_t>(t)].active; };
  auto visible = [&](long t) { return seq.groundtruth[static_cast<std::size_t>(t)].is_present(); };
  auto no_factor = [&](long t) { return labels_at(t).bits() == 0; };
  auto all_clean = [&](long a, long b) {
    for (long t = a; t <= b; ++t) {
      if (!no_factor(t)) return false;
    }
    return true;
  };

  std::vector<ExtractedClip> out;
  for (FactorKind f : kAllFactors) {
    auto only_f = [&](long t) { return labels_at(t) == FactorSet{f}; };
    for (long s = 0; s < n; ++s) {
      for (long e = s; e < n; ++e) {
        bool pure = true;
        for (long t = s; t <= e; ++t) pure = pure && only_f(t);
        if (!pure) break;
        if (s > 0 && only_f(s - 1)) break;      // not the start of a maximal segment
        if (e + 1 < n && only_f(e + 1)) continue;  // segment can still grow

        // Longest clean block ending right before s.
        long a = s;
        for (long cand = 0; cand < s; ++cand) {
          if (all_clean(cand, s - 1)) {
            a = cand;
            break;
          }
        }
        const long clean_len = s - a;
        if (clean_len < tau_s) continue;
        const long lead = (f == FactorKind::SV || clean_len <= cap) ? clean_len : cap;
        const long first = s - lead;

        long last = e;
        const bool t1 = f == FactorKind::OCC || f == FactorKind::OV || f == FactorKind::OB ||
                        f == FactorKind::OR;
        if (t1) {
          if (e + tau_e > n - 1) continue;
          if (!all_clean(e + 1, e + tau_e)) continue;
          last = e + tau_e;
        }
        if (!visible(first) || !visible(last)) continue;

        ExtractedClip c;
        c.clip_id = seq.sequence_id + "_" + std::string(factor_name(f)) + "_" + std::to_string(s);
        c.source_id = seq.sequence_id;
        c.factor = f;
        c.frame_range = {static_cast<std::size_t>(first), static_cast<std::size_t>(last)};
        c.nc1 = {static_cast<std::size_t>(first), static_cast<std::size_t>(s - 1)};
        c.c2 = {static_cast<std::size_t>(s), static_cast<std::size_t>(e)};
        if (t1) c.nc3 = FrameRange{static_cast<std::size_t>(e + 1), static_cast<std::size_t>(last)};
        for (long t = first; t <= last; ++t) {
          c.groundtruth.push_back(seq.groundtruth[static_cast<std::size_t>(t)]);
          c.labels.push_back({static_cast<std::size_t>(t - first), labels_at(t)});
        }
        out.push_back(std::move(c));
      }
    }
  }
  return out;
}

}  // namespace tracklinic::sim
