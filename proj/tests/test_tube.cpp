#include <gtest/gtest.h>

#include "test_support.hpp"
#include "vtube/tube.hpp"

#include <cmath>
#include <limits>
#include <random>

using namespace vtube;
using vtube::testing::arc_tube;
using vtube::testing::spline_tube;
using vtube::testing::straight_tube;

TEST(CrossSection, StraightSymmetric) {
  const auto tube = straight_tube(10.0, 1.0, 1.0);
  const auto [p_d, p_u] = tube.cross_section_endpoints(3.0);
  EXPECT_NEAR((p_d - Vec2(3.0, -1.0)).norm(), 0.0, 1e-15);
  EXPECT_NEAR((p_u - Vec2(3.0, 1.0)).norm(), 0.0, 1e-15);
}

TEST(CrossSection, StraightAsymmetric) {
  const auto tube = straight_tube(10.0, 0.5, 2.0);
  const auto [p_d, p_u] = tube.cross_section_endpoints(0.0);
  EXPECT_NEAR((p_d - Vec2(0.0, -0.5)).norm(), 0.0, 1e-15);
  EXPECT_NEAR((p_u - Vec2(0.0, 2.0)).norm(), 0.0, 1e-15);
}

TEST(CrossSection, ArcEndpointDistances) {
  const auto tube = arc_tube(5.0, kPi, 0.7, 1.3);
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> U(0.0, tube.length());
  for (int k = 0; k < 100; ++k) {
    const double l = U(gen);
    const auto [p_d, p_u] = tube.cross_section_endpoints(l);
    const Vec2 g = tube.frame(l).point;
    EXPECT_NEAR((p_u - g).norm(), 1.3, 1e-12);
    EXPECT_NEAR((p_d - g).norm(), 0.7, 1e-12);
  }
}

TEST(CrossSection, OutOfRangeArcLengthThrows) {
  const auto tube = straight_tube(10.0, 1.0, 1.0);
  EXPECT_THROW(tube.cross_section_endpoints(-0.1), DomainError);
  EXPECT_THROW(tube.cross_section_endpoints(10.1), DomainError);
}

TEST(Curvilinear, StraightTube) {
  const auto tube = straight_tube(10.0, 1.0, 1.0);
  auto c = tube.to_curvilinear({3.0, 0.4});
  EXPECT_NEAR(c.l, 3.0, 1e-12);
  EXPECT_NEAR(c.r, 0.4, 1e-12);
  c = tube.to_curvilinear({3.0, -0.4});
  EXPECT_NEAR(c.l, 3.0, 1e-12);
  EXPECT_NEAR(c.r, -0.4, 1e-12);
}

TEST(Curvilinear, ArcMatchesPolarAndBruteForce) {
  const auto tube = arc_tube(5.0, kPi, 1.0, 1.0);
  const auto& curve = tube.curve();
  const int n = 1000000;
  std::vector<Vec2> dense(n + 1);
  for (int k = 0; k <= n; ++k) dense[k] = curve.frame(tube.length() * k / n).point;
  for (double theta : {0.3, 1.1, 2.0, 2.9}) {
    const Vec2 p(5.5 * std::cos(theta), 5.5 * std::sin(theta));
    const auto c = tube.to_curvilinear(p);
    EXPECT_NEAR(c.l, 5.0 * theta, 1e-9);
    EXPECT_NEAR(c.r, -0.5, 1e-9);
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= n; ++k) {
      const double d = (dense[k] - p).squaredNorm();
      if (d < best_d) best_d = d, best = k;
    }
    EXPECT_NEAR(c.l, tube.length() * best / n, 2.0 * tube.length() / n);
  }
}

TEST(Curvilinear, ToCartesianExamples) {
  const auto tube = straight_tube(10.0, 1.0, 1.0);
  const Vec2 p = tube.to_cartesian({3.0, 0.4});
  EXPECT_NEAR((p - Vec2(3.0, 0.4)).norm(), 0.0, 1e-15);
  const auto spline = spline_tube();
  for (double l = 0.0; l <= spline.length(); l += 0.5) {
    EXPECT_EQ(spline.to_cartesian({l, 0.0}), spline.frame(l).point);
  }
}

TEST(Curvilinear, RoundTripRandomPoints) {
  const auto tube = spline_tube();
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> Ul(0.0, tube.length());
  std::uniform_real_distribution<double> Ur(-0.8, 0.8);
  for (int k = 0; k < 1000; ++k) {
    const CurvilinearCoord c{Ul(gen), Ur(gen)};
    const Vec2 p = tube.to_cartesian(c);
    const Vec2 q = tube.to_cartesian(tube.to_curvilinear(p));
    EXPECT_LT((p - q).norm(), 1e-6);
  }
}

TEST(Curvilinear, OutsideRaisesWithBestEffort) {
  const auto tube = straight_tube(10.0, 1.0, 1.0);
  try {
    tube.to_curvilinear({4.0, 1.5});
    FAIL() << "expected OutsideTubeError";
  } catch (const OutsideTubeError& e) {
    EXPECT_NEAR(e.best_effort().l, 4.0, 1e-12);
    EXPECT_NEAR(e.best_effort().r, 1.5, 1e-12);
  }
  EXPECT_THROW(tube.to_curvilinear({-0.5, 0.0}), OutsideTubeError);
  EXPECT_THROW(tube.to_curvilinear({10.5, 0.0}), OutsideTubeError);
  EXPECT_THROW(tube.to_cartesian({3.0, 1.2}), DomainError);
  EXPECT_THROW(tube.to_cartesian({11.0, 0.0}), DomainError);
}

TEST(Curvilinear, ClosedTubeWrapsAcrossSeam) {
  VirtualTube ring(GeneratingCurve(Vec2(1.0, 0.0), kPi / 2.0, {ArcSpec{1.0, kTwoPi}}),
                   WidthProfile::constant(0.2, 0.2), Topology::closed);
  const auto a = ring.to_curvilinear({std::cos(-0.01), std::sin(-0.01)});
  EXPECT_NEAR(a.l, kTwoPi - 0.01, 1e-9);
  const auto b = ring.to_curvilinear({std::cos(0.01), std::sin(0.01)});
  EXPECT_NEAR(b.l, 0.01, 1e-9);
  EXPECT_NEAR(ring.arc_offset(a.l, b.l), 0.02, 1e-9);
}

TEST(Area, StraightTube) { EXPECT_NEAR(straight_tube(10.0, 1.0, 1.0).area(), 20.0, 1e-12); }

TEST(Area, LinearTaper) {
  VirtualTube tube(GeneratingCurve(Vec2::Zero(), 0.0, {LineSpec{10.0}}),
                   WidthProfile({{0.0, 1.0, 1.0}, {10.0, 0.6, 0.6}}), Topology::open);
  EXPECT_NEAR(tube.area(), 16.0, 1e-12);
}

TEST(Area, ArcUsesArcLength) {
  const auto tube = arc_tube(3.0, 2.0, 0.4, 0.9);
  EXPECT_NEAR(tube.area(), 1.3 * 6.0, 1e-12);
}

TEST(FlowCapacity, Examples) {
  EXPECT_DOUBLE_EQ(straight_tube(5.0, 1.0, 1.0).flow_capacity(2.0), 1.0);
  EXPECT_DOUBLE_EQ(straight_tube(5.0, 0.5, 1.0).flow_capacity(2.0), 0.75);
}

TEST(FlowCapacity, ContinuousAcrossKnots) {
  VirtualTube tube(GeneratingCurve(Vec2::Zero(), 0.0, {LineSpec{10.0}}),
                   WidthProfile({{0.0, 1.0, 1.0}, {3.0, 0.5, 0.7}, {7.0, 2.0, 1.0}}), Topology::open);
  for (double l = 0.0; l + 1e-6 <= 10.0; l += 0.01) {
    EXPECT_LT(std::abs(tube.flow_capacity(l + 1e-6) - tube.flow_capacity(l)), 1e-5);
  }
}

TEST(Narrow, Examples) {
  EXPECT_TRUE(straight_tube(5.0, 0.75, 0.75).is_narrow(1.0, 0.5));
  EXPECT_FALSE(straight_tube(5.0, 1.2, 1.2).is_narrow(1.0, 0.5));
  EXPECT_FALSE(straight_tube(5.0, 0.4, 0.4).is_narrow(1.0, 0.5));
  EXPECT_TRUE(straight_tube(5.0, 1.0, 1.0).is_narrow(1.0, 0.5));
}

TEST(Regularity, StraightTubeIsRegular) {
  const auto report = straight_tube(10.0, 1.0, 1.0).check_regularity();
  EXPECT_TRUE(report.ok());
}

TEST(Regularity, OverWideArcIsIrregular) {
  // Clockwise arc of radius 2: the lower side is the inner side and r_d = 2.5
  // reaches past the centre, so inner endpoints of distant sections cross.
  VirtualTube tube(GeneratingCurve(Vec2::Zero(), 0.0, {ArcSpec{2.0, -kPi}}), WidthProfile::constant(2.5, 0.5),
                   Topology::open);
  const auto report = tube.check_regularity();
  ASSERT_FALSE(report.ok());
  // Analytic check for one reported pair: the inner endpoints lie on the
  // far side of the centre, so the two segments cross.
  const auto pair = report.intersecting.front();
  const auto [a0, a1] = tube.cross_section_endpoints(pair.l1);
  const auto [b0, b1] = tube.cross_section_endpoints(pair.l2);
  EXPECT_TRUE(segments_intersect(a0, a1, b0, b1));
  const auto ok = VirtualTube(GeneratingCurve(Vec2::Zero(), 0.0, {ArcSpec{2.0, -kPi}}),
                              WidthProfile::constant(1.5, 0.5), Topology::open)
                      .check_regularity();
  EXPECT_TRUE(ok.ok());
}

TEST(Regularity, ClosedSeamExcludedOnlyForClosedTopology) {
  GeneratingCurve ring(Vec2(1.0, 0.0), kPi / 2.0, {ArcSpec{1.0, kTwoPi}});
  VirtualTube as_open(ring, WidthProfile::constant(0.2, 0.2), Topology::open);
  VirtualTube as_closed(ring, WidthProfile::constant(0.2, 0.2), Topology::closed);
  const auto open_report = as_open.check_regularity();
  ASSERT_FALSE(open_report.ok());
  bool seam = false;
  for (const auto& p : open_report.intersecting) seam = seam || (p.l1 == 0.0 && std::abs(p.l2 - ring.length()) < 1e-12);
  EXPECT_TRUE(seam);
  EXPECT_TRUE(as_closed.check_regularity().ok());
}

TEST(Regularity, ClosedTopologyRequiresClosedCurve) {
  try {
    VirtualTube(GeneratingCurve(Vec2::Zero(), 0.0, {LineSpec{3.0}}), WidthProfile::constant(1.0, 1.0),
                Topology::closed);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.rule(), "closure");
  }
}

TEST(BoundaryDistance, StraightExamples) {
  const auto tube = straight_tube(10.0, 1.0, 1.0);
  EXPECT_NEAR(tube.boundary_distance({3.0, 0.0}).distance, 1.0, 1e-12);
  const auto b = tube.boundary_distance({3.0, 0.6});
  EXPECT_NEAR(b.distance, 0.4, 1e-12);
  EXPECT_NEAR((b.direction - Vec2(0.0, -1.0)).norm(), 0.0, 1e-12);
}

TEST(BoundaryDistance, TerminalSectionsExcluded) {
  const auto tube = straight_tube(10.0, 1.0, 1.0);
  EXPECT_NEAR(tube.boundary_distance({0.05, 0.0}).distance, 1.0, 1e-12);
}

TEST(BoundaryDistance, ArcMatchesDenseSampling) {
  const auto tube = arc_tube(5.0, kPi, 1.0, 1.0);
  std::vector<Vec2> boundary;
  const int n = 200000;
  for (int k = 0; k <= n; ++k) {
    const auto [p_d, p_u] = tube.cross_section_endpoints(tube.length() * k / n);
    boundary.push_back(p_d);
    boundary.push_back(p_u);
  }
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> Ul(0.5, tube.length() - 0.5);
  std::uniform_real_distribution<double> Ur(-0.95, 0.95);
  for (int k = 0; k < 50; ++k) {
    const Vec2 p = tube.to_cartesian({Ul(gen), Ur(gen)});
    double brute = std::numeric_limits<double>::infinity();
    for (const auto& q : boundary) brute = std::min(brute, (q - p).norm());
    EXPECT_NEAR(tube.boundary_distance(p).distance, brute, 1e-4);
  }
}

TEST(BoundaryDistance, OutsidePointThrows) {
  const auto tube = straight_tube(10.0, 1.0, 1.0);
  EXPECT_THROW(tube.boundary_distance({3.0, 2.0}), OutsideTubeError);
}

TEST(WidthProfile, RejectsBadKnots) {
  EXPECT_THROW(WidthProfile(std::vector<WidthKnot>{}), DomainError);
  EXPECT_THROW(WidthProfile({{0.0, 0.0, 1.0}}), DomainError);
  EXPECT_THROW(WidthProfile({{0.0, 1.0, 1.0}, {0.0, 1.0, 1.0}}), DomainError);
}

TEST(WidthProfile, ClosedProfileWrapsAcrossSeam) {
  WidthProfile w({{0.0, 1.0, 1.0}, {5.0, 2.0, 2.0}});
  const auto [r_d, r_u] = w.at(7.5, 10.0);
  EXPECT_NEAR(r_d, 1.5, 1e-12);
  EXPECT_NEAR(r_u, 1.5, 1e-12);
  EXPECT_NEAR(w.at(12.5, 10.0).first, 1.5, 1e-12);
}
