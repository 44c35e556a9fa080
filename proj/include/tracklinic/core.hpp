#pragma once

// Domain types shared by every stage of the diagnosis pipeline, plus the
// elementary box geometry the metrics are built on.

#include <algorithm>
#include <array>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tracklinic {

inline constexpr std::string_view kToolVersion = "tracklinic 0.1.0";

// Malformed or inconsistent input data (exit code 2 at the command line).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad invocation: unknown flags, missing arguments (exit code 1).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller broke a documented precondition.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// ---------------------------------------------------------------------------
// BoundingBox

struct Rect {
  double x = 0.0;  // top-left corner
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  friend bool operator==(const Rect&, const Rect&) = default;
};

// Axis-aligned box, or the explicit "absent" marker for an invisible target.
class BoundingBox {
 public:
  BoundingBox() = default;  // absent

  static BoundingBox absent() { return BoundingBox{}; }

  static BoundingBox present(double x, double y, double w, double h) {
    if (!(w > 0.0) || !(h > 0.0)) {
      throw ContractViolation("present box requires positive width and height");
    }
    return BoundingBox{Rect{x, y, w, h}};
  }

  // Ingest path: degenerate geometry (w <= 0 or h <= 0) becomes Absent.
  static BoundingBox from_raw(double x, double y, double w, double h) {
    if (!(w > 0.0) || !(h > 0.0)) return absent();
    return BoundingBox{Rect{x, y, w, h}};
  }

  bool is_present() const { return rect_.has_value(); }
  bool is_absent() const { return !rect_.has_value(); }

  const Rect& rect() const {
    if (!rect_) throw ContractViolation("geometry requested from an absent box");
    return *rect_;
  }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;

 private:
  explicit BoundingBox(Rect r) : rect_(r) {}
  std::optional<Rect> rect_;
};

inline double box_area(const BoundingBox& b) {
  const Rect& r = b.rect();
  return r.w * r.h;
}

inline double aspect_ratio(const BoundingBox& b) {
  const Rect& r = b.rect();
  return r.w / r.h;
}

// Intersection over union. One absent side scores 0 (a prediction on an
// invisible target is a miss); both absent is undefined and returns nullopt.
inline std::optional<double> compute_iou(const BoundingBox& a, const BoundingBox& b) {
  if (a.is_absent() && b.is_absent()) return std::nullopt;
  if (a.is_absent() || b.is_absent()) return 0.0;
  const Rect& p = a.rect();
  const Rect& q = b.rect();
  // (x + w) - x need not round back to w
  if (p == q) return 1.0;
  const double iw = std::min(p.x + p.w, q.x + q.w) - std::max(p.x, q.x);
  const double ih = std::min(p.y + p.h, q.y + q.h) - std::max(p.y, q.y);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = p.w * p.h + q.w * q.h - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Challenge factors

enum class FactorKind : std::uint8_t { OCC, ROT, OV, BC, IV, MB, SV, OB, OR };

inline constexpr std::size_t kFactorCount = 9;

// Canonical (table) order; every report and listing iterates in this order.
inline constexpr std::array<FactorKind, kFactorCount> kAllFactors = {
    FactorKind::OCC, FactorKind::ROT, FactorKind::OV, FactorKind::BC, FactorKind::IV,
    FactorKind::MB,  FactorKind::SV,  FactorKind::OB, FactorKind::OR};

inline constexpr std::array<FactorKind, 7> kSimpleFactors = {
    FactorKind::OCC, FactorKind::ROT, FactorKind::OV, FactorKind::BC,
    FactorKind::IV,  FactorKind::MB,  FactorKind::SV};

enum class ExtractionType : std::uint8_t { T1, T2 };

// T1 challenges end with the target occluded or out of view, so their clips
// need a clean lead-out before the target can be judged.
constexpr ExtractionType extraction_type(FactorKind f) {
  switch (f) {
    case FactorKind::OCC:
    case FactorKind::OV:
    case FactorKind::OB:
    case FactorKind::OR:
      return ExtractionType::T1;
    default:
      return ExtractionType::T2;
  }
}

constexpr bool is_compound(FactorKind f) { return f == FactorKind::OB || f == FactorKind::OR; }

constexpr std::size_t factor_index(FactorKind f) { return static_cast<std::size_t>(f); }

constexpr std::string_view factor_name(FactorKind f) {
  constexpr std::array<std::string_view, kFactorCount> names = {
      "OCC", "ROT", "OV", "BC", "IV", "MB", "SV", "O-B", "O-R"};
  return names[factor_index(f)];
}

inline std::optional<FactorKind> parse_factor(std::string_view s) {
  std::string up(s);
  std::transform(up.begin(), up.end(), up.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  for (FactorKind f : kAllFactors) {
    if (factor_name(f) == up) return f;
  }
  return std::nullopt;
}

// Small value set of factors, one bit per FactorKind.
class FactorSet {
 public:
  constexpr FactorSet() = default;
  constexpr FactorSet(std::initializer_list<FactorKind> fs) {
    for (FactorKind f : fs) insert(f);
  }

  constexpr void insert(FactorKind f) { bits_ |= bit(f); }
  constexpr void erase(FactorKind f) { bits_ &= static_cast<std::uint16_t>(~bit(f)); }
  constexpr void set(FactorKind f, bool on) { on ? insert(f) : erase(f); }
  constexpr bool contains(FactorKind f) const { return (bits_ & bit(f)) != 0; }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr bool is_exactly(FactorKind f) const { return bits_ == bit(f); }
  constexpr std::uint16_t bits() const { return bits_; }

  bool has_compound() const { return contains(FactorKind::OB) || contains(FactorKind::OR); }

  std::size_t size() const {
    std::size_t n = 0;
    for (FactorKind f : kAllFactors) n += contains(f) ? 1 : 0;
    return n;
  }

  std::string to_string() const {
    std::string out = "{";
    for (FactorKind f : kAllFactors) {
      if (!contains(f)) continue;
      if (out.size() > 1) out += ',';
      out += factor_name(f);
    }
    return out + "}";
  }

  friend constexpr bool operator==(FactorSet, FactorSet) = default;

 private:
  static constexpr std::uint16_t bit(FactorKind f) {
    return static_cast<std::uint16_t>(1u << factor_index(f));
  }
  std::uint16_t bits_ = 0;
};

struct FrameLabels {
  std::size_t frame_index = 0;
  FactorSet active;

  friend bool operator==(const FrameLabels&, const FrameLabels&) = default;
};

struct SequenceRecord {
  std::string sequence_id;
  std::vector<BoundingBox> groundtruth;
  std::vector<FrameLabels> labels;

  std::size_t frame_count() const { return groundtruth.size(); }

  friend bool operator==(const SequenceRecord&, const SequenceRecord&) = default;
};

// Builds a record from parallel box/label-set lists, numbering frames 0..n-1.
inline SequenceRecord make_sequence(std::string id, std::vector<BoundingBox> gt,
                                    const std::vector<FactorSet>& active) {
  if (gt.size() != active.size()) {
    throw DataError("sequence '" + id + "': " + std::to_string(gt.size()) +
                    " groundtruth frames but " + std::to_string(active.size()) +
                    " label rows");
  }
  SequenceRecord seq{std::move(id), std::move(gt), {}};
  seq.labels.reserve(active.size());
  for (std::size_t i = 0; i < active.size(); ++i) seq.labels.push_back({i, active[i]});
  return seq;
}

// ---------------------------------------------------------------------------
// Thresholds

struct DiagnosisConfig {
  int tau_op = 3;         // joint run must be strictly longer to become compound
  int tau_s = 10;         // minimum clean prefix
  int tau_e = 2;          // clean suffix length for T1 clips
  int max_prefix = 30;    // prefix truncation (not applied to SV)
  double tau_iou = 0.5;   // last-frame failure threshold (strict "less than")
  double success_threshold = 0.5;
  int min_clips_per_factor = 30;  // below this a factor is flagged low-support
  bool failure_rate_excludes_others = false;

  void validate() const {
    auto fail = [](const std::string& m) { throw DataError("invalid config: " + m); };
    if (tau_op < 1) fail("tau_op must be a positive integer");
    if (tau_s < 1) fail("tau_s must be a positive integer");
    if (tau_e < 1) fail("tau_e must be a positive integer");
    if (max_prefix < 1) fail("max_prefix must be a positive integer");
    if (tau_s > max_prefix) fail("tau_s must not exceed max_prefix");
    if (!(tau_iou >= 0.0 && tau_iou <= 1.0)) fail("tau_iou must lie in [0,1]");
    if (!(success_threshold >= 0.0 && success_threshold <= 1.0)) {
      fail("success_threshold must lie in [0,1]");
    }
    if (min_clips_per_factor < 1) fail("min_clips_per_factor must be positive");
  }

  friend bool operator==(const DiagnosisConfig&, const DiagnosisConfig&) = default;
};

// Inclusive frame range [start, end].
struct FrameRange {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t length() const { return end - start + 1; }
  bool contains(std::size_t i) const { return i >= start && i <= end; }

  friend bool operator==(const FrameRange&, const FrameRange&) = default;
};

}  // namespace tracklinic
