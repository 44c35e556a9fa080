#include <gtest/gtest.h>

#include "test_support.hpp"
#include "tracklinic/core.hpp"

using namespace tracklinic;
using tracklinic::testing::Rng;

namespace {

BoundingBox box(double x, double y, double w, double h) { return BoundingBox::present(x, y, w, h); }

TEST(IoU, IdenticalBoxesScoreOne) { EXPECT_EQ(compute_iou(box(0, 0, 10, 10), box(0, 0, 10, 10)), 1.0); }

TEST(IoU, DisjointBoxesScoreZero) { EXPECT_EQ(compute_iou(box(0, 0, 10, 10), box(20, 20, 5, 5)), 0.0); }

TEST(IoU, HalfShiftedSquaresScoreOneThird) {
  // intersection 2, union 4 + 4 - 2
  EXPECT_EQ(compute_iou(box(0, 0, 2, 2), box(1, 0, 2, 2)), 1.0 / 3.0);
}

TEST(IoU, AbsentAgainstPresentIsAMiss) {
  EXPECT_EQ(compute_iou(BoundingBox::absent(), box(0, 0, 5, 5)), 0.0);
  EXPECT_EQ(compute_iou(box(0, 0, 5, 5), BoundingBox::absent()), 0.0);
}

TEST(IoU, BothAbsentIsUndefined) {
  EXPECT_FALSE(compute_iou(BoundingBox::absent(), BoundingBox::absent()).has_value());
}

TEST(IoU, TouchingEdgesDoNotOverlap) { EXPECT_EQ(compute_iou(box(0, 0, 2, 2), box(2, 0, 2, 2)), 0.0); }

TEST(BoxGeometry, Area) {
  EXPECT_EQ(box_area(box(0, 0, 10, 10)), 100.0);
  EXPECT_EQ(box_area(box(3, 4, 2, 5)), 10.0);
  EXPECT_EQ(box_area(box(0, 0, 1, 1)), 1.0);
}

TEST(BoxGeometry, AspectRatio) {
  EXPECT_EQ(aspect_ratio(box(0, 0, 10, 10)), 1.0);
  EXPECT_EQ(aspect_ratio(box(0, 0, 20, 10)), 2.0);
  EXPECT_EQ(aspect_ratio(box(0, 0, 10, 40)), 0.25);
}

TEST(BoxGeometry, AbsentGeometryIsAContractViolation) {
  EXPECT_THROW(box_area(BoundingBox::absent()), ContractViolation);
  EXPECT_THROW(aspect_ratio(BoundingBox::absent()), ContractViolation);
}

TEST(BoundingBox, PresentRequiresPositiveSize) {
  EXPECT_THROW(BoundingBox::present(0, 0, 0, 5), ContractViolation);
  EXPECT_THROW(BoundingBox::present(0, 0, 5, -1), ContractViolation);
}

TEST(BoundingBox, DegenerateRawBoxesBecomeAbsent) {
  EXPECT_TRUE(BoundingBox::from_raw(0, 0, 0, 0).is_absent());
  EXPECT_TRUE(BoundingBox::from_raw(10, 10, 5, 0).is_absent());
  EXPECT_TRUE(BoundingBox::from_raw(1, 2, -3, 4).is_absent());
  EXPECT_TRUE(BoundingBox::from_raw(1, 2, 3, 4).is_present());
}

TEST(IoUProperties, SymmetricBoundedAndReflexive) {
  Rng rng(7);
  for (int i = 0; i < 10000; ++i) {
    const BoundingBox a = i % 2 ? tracklinic::testing::random_box(rng) : tracklinic::testing::random_grid_box(rng);
    const BoundingBox b = i % 2 ? tracklinic::testing::random_box(rng) : tracklinic::testing::random_grid_box(rng);
    const double ab = *compute_iou(a, b);
    EXPECT_EQ(ab, *compute_iou(b, a));
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, 1.0);
    EXPECT_EQ(*compute_iou(a, a), 1.0);
  }
}

TEST(IoUProperties, ContainmentIsMonotone) {
  Rng rng(11);
  for (int i = 0; i < 10000; ++i) {
    const Rect c = tracklinic::testing::random_box(rng).rect();
    const double bw = c.w * tracklinic::testing::uniform_real(rng, 0.05, 1.0);
    const double bh = c.h * tracklinic::testing::uniform_real(rng, 0.05, 1.0);
    const double bx = c.x + tracklinic::testing::uniform_real(rng, 0.0, c.w - bw);
    const double by = c.y + tracklinic::testing::uniform_real(rng, 0.0, c.h - bh);
    const double aw = bw * tracklinic::testing::uniform_real(rng, 0.05, 1.0);
    const double ah = bh * tracklinic::testing::uniform_real(rng, 0.05, 1.0);
    const double ax = bx + tracklinic::testing::uniform_real(rng, 0.0, bw - aw);
    const double ay = by + tracklinic::testing::uniform_real(rng, 0.0, bh - ah);
    const BoundingBox A = box(ax, ay, aw, ah), B = box(bx, by, bw, bh), C = box(c.x, c.y, c.w, c.h);
    EXPECT_GE(*compute_iou(A, B), *compute_iou(A, C));
  }
}

TEST(FactorKind, ExtractionTypes) {
  for (FactorKind f : {FactorKind::OCC, FactorKind::OV, FactorKind::OB, FactorKind::OR}) {
    EXPECT_EQ(extraction_type(f), ExtractionType::T1) << factor_name(f);
  }
  for (FactorKind f : {FactorKind::ROT, FactorKind::BC, FactorKind::IV, FactorKind::MB, FactorKind::SV}) {
    EXPECT_EQ(extraction_type(f), ExtractionType::T2) << factor_name(f);
  }
}

TEST(FactorKind, CompoundsAndNames) {
  std::size_t compounds = 0;
  for (FactorKind f : kAllFactors) {
    compounds += is_compound(f) ? 1 : 0;
    EXPECT_EQ(parse_factor(factor_name(f)), f);
  }
  EXPECT_EQ(compounds, 2u);
  EXPECT_EQ(parse_factor("o-b"), FactorKind::OB);
  EXPECT_FALSE(parse_factor("DEF").has_value());
}

TEST(FactorSet, ExactMembership) {
  FactorSet s{FactorKind::IV};
  EXPECT_TRUE(s.is_exactly(FactorKind::IV));
  s.insert(FactorKind::MB);
  EXPECT_FALSE(s.is_exactly(FactorKind::IV));
  EXPECT_EQ(s.size(), 2u);
  EXPECT_EQ(s.to_string(), "{IV,MB}");
  s.erase(FactorKind::IV);
  s.erase(FactorKind::MB);
  EXPECT_TRUE(s.empty());
}

TEST(DiagnosisConfig, DefaultsAndValidation) {
  DiagnosisConfig cfg;
  EXPECT_EQ(cfg.tau_op, 3);
  EXPECT_EQ(cfg.tau_s, 10);
  EXPECT_EQ(cfg.tau_e, 2);
  EXPECT_EQ(cfg.max_prefix, 30);
  EXPECT_EQ(cfg.tau_iou, 0.5);
  EXPECT_EQ(cfg.success_threshold, 0.5);
  EXPECT_NO_THROW(cfg.validate());

  DiagnosisConfig bad = cfg;
  bad.tau_s = 40;
  EXPECT_THROW(bad.validate(), DataError);
  bad = cfg;
  bad.tau_iou = 1.5;
  EXPECT_THROW(bad.validate(), DataError);
  bad = cfg;
  bad.tau_e = 0;
  EXPECT_THROW(bad.validate(), DataError);
}

}  // namespace
