#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "exitctl/applications.hpp"
#include "exitctl/problem.hpp"

using namespace exitctl;

namespace {

// L written out as the expanded square of x(x^2-1)(x^2-4) = x^5 - 5x^3 + 4x.
double L_expanded(double x) {
  const double q = x * x * x * x * x - 5.0 * x * x * x + 4.0 * x;
  return q * q;
}

}  // namespace

TEST(EvalDynamics, ScalarHalflineMovesWithAbsX) {
  const auto p = scalar_halfline();
  EXPECT_DOUBLE_EQ(eval_dynamics(p, Vec{0.5}, Vec{1.0})[0], 0.5);
  EXPECT_DOUBLE_EQ(eval_dynamics(p, Vec{-0.5}, Vec{1.0})[0], 0.5);
}

TEST(EvalDynamics, SfsIsStillAtOrigin) {
  // I(0) = 0 for the Pound0 intensity.
  const auto p = sfs(Intensity::Pound0, TargetSet::points({Vec{0.5, 0.5}}));
  const Vec f = eval_dynamics(p, Vec{0.0, 0.0}, Vec{0.6, -0.8});
  EXPECT_EQ(f[0], 0.0);
  EXPECT_EQ(f[1], 0.0);
}

TEST(EvalDynamics, FullerK0) {
  const auto p = fuller(0.0);
  const Vec f = eval_dynamics(p, Vec{2.0, 3.0}, Vec{-1.0});
  EXPECT_DOUBLE_EQ(f[0], 3.0);
  EXPECT_DOUBLE_EQ(f[1], -1.0);
}

TEST(EvalDynamics, NonFiniteOutputIsMalformed) {
  ControlProblem p = scalar_halfline();
  p.dynamics = [](const Vec&, const Vec&) { return Vec{std::nan("")}; };
  try {
    eval_dynamics(p, Vec{0.5}, Vec{1.0});
    FAIL() << "expected MALFORMED_PROBLEM";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MalformedProblem);
  }
}

TEST(EvalLagrangian, Example1Values) {
  const auto p = example1(Example1Target::T1);
  EXPECT_EQ(eval_lagrangian(p, Vec{1.0}, Vec{0.5}), 0.0);
  EXPECT_DOUBLE_EQ(eval_lagrangian(p, Vec{3.0}, Vec{0.0}), 14400.0);
}

TEST(EvalLagrangian, MatchesExpandedPolynomial) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < 1000; ++i) {
    const double x = u(rng);
    EXPECT_NEAR(example1_L(x), L_expanded(x), 1e-9 * (1.0 + L_expanded(x)));
  }
}

TEST(EvalLagrangian, SfsAtOriginWithZeroControl) {
  const auto p = sfs(Intensity::Pound0, TargetSet::points({Vec{0.5, 0.5}}));
  EXPECT_DOUBLE_EQ(eval_lagrangian(p, Vec{0.0, 0.0}, Vec{0.0, 0.0}), 1.0);
}

TEST(EvalLagrangian, NegativeValueAborts) {
  ControlProblem p = scalar_halfline();
  p.lagrangian = [](const Vec&, const Vec&) { return -1.0; };
  try {
    eval_lagrangian(p, Vec{0.5}, Vec{1.0});
    FAIL() << "expected NEGATIVE_LAGRANGIAN";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NegativeLagrangian);
  }
}

TEST(EnumerateControls, Finite) {
  const auto s = ControlSet::finite({Vec{-1.0}, Vec{1.0}});
  const auto e = enumerate_controls(s);
  ASSERT_EQ(e.size(), 2u);
  EXPECT_EQ(e[0][0], -1.0);
  EXPECT_EQ(e[1][0], 1.0);
}

TEST(EnumerateControls, BoxUniformSpacing) {
  const auto e = enumerate_controls(ControlSet::box(Vec{-1.0}, Vec{1.0}, {3}));
  ASSERT_EQ(e.size(), 3u);
  EXPECT_EQ(e[0][0], -1.0);
  EXPECT_EQ(e[1][0], 0.0);
  EXPECT_EQ(e[2][0], 1.0);
}

TEST(EnumerateControls, BoxTensorCountAndDiskFilter) {
  EXPECT_EQ(enumerate_controls(ControlSet::box(Vec{-1.0, -1.0}, Vec{1.0, 1.0}, {5, 5})).size(), 25u);
  // Corners (4) and the 8 edge points at (+-1, +-0.5), (+-0.5, +-1) leave the disk.
  const auto disk = enumerate_controls(ControlSet::box(Vec{-1.0, -1.0}, Vec{1.0, 1.0}, {5, 5}, 1.0));
  EXPECT_EQ(disk.size(), 13u);
  for (const auto& a : disk) EXPECT_LE(norm(a), 1.0 + 1e-12);
}

TEST(EnumerateControls, BallIsCentrePlusRings) {
  const auto s = ControlSet::ball(2, 1.0, 16, 3);
  const auto& e = s.enumerate();
  ASSERT_EQ(e.size(), 1u + 16u * 3u);
  EXPECT_EQ(norm(e[0]), 0.0);
  EXPECT_NEAR(norm(e.back()), 1.0, 1e-15);
  for (const auto& a : e) EXPECT_TRUE(s.contains(a));
}

TEST(EnumerateControls, OrderIsDeterministic) {
  const auto a = ControlSet::box(Vec{-1.0, 0.0}, Vec{1.0, 2.0}, {4, 3});
  const auto b = ControlSet::box(Vec{-1.0, 0.0}, Vec{1.0, 2.0}, {4, 3});
  EXPECT_EQ(a.enumerate(), b.enumerate());
  // Last axis fastest.
  EXPECT_EQ(a.enumerate()[1], (Vec{-1.0, 1.0}));
}

TEST(ControlSetValidation, RejectsEmptyAndUnbounded) {
  EXPECT_THROW(ControlSet::finite({}), Error);
  EXPECT_THROW(ControlSet::box(Vec{-1.0}, Vec{INFINITY}, {3}), Error);
  EXPECT_THROW(ControlSet::box(Vec{1.0}, Vec{-1.0}, {3}), Error);
}

TEST(TargetSet, DistancesAgainstGeometry) {
  const auto pts = TargetSet::points({Vec{0.0, 0.0}, Vec{2.0, 0.0}});
  EXPECT_DOUBLE_EQ(pts.distance(Vec{1.0, 1.0}), std::sqrt(2.0));
  const auto hl = TargetSet::half_line(Vec{1.0}, Vec{1.0});
  EXPECT_DOUBLE_EQ(hl.distance(Vec{0.25}), 0.75);
  EXPECT_DOUBLE_EQ(hl.distance(Vec{7.0}), 0.0);
  const auto cb = TargetSet::complement_ball(Vec{0.0, 0.0}, 1.0);
  EXPECT_DOUBLE_EQ(cb.distance(Vec{0.25, 0.0}), 0.75);
  EXPECT_DOUBLE_EQ(cb.distance(Vec{3.0, 4.0}), 0.0);
}

// contains(x) <=> distance(x) <= tol and distance >= 0, over random points
// and every target shape.
TEST(TargetSetProperty, ContainsMatchesDistance) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  const std::vector<TargetSet> targets = {
      TargetSet::points({Vec{0.0, 0.0}, Vec{1.0, -1.0}}, 0.3),
      TargetSet::half_line(Vec{0.0, 0.0}, Vec{1.0, 1.0}, 0.2),
      TargetSet::complement_ball(Vec{0.5, 0.0}, 2.0, 0.1),
      TargetSet::implicit([](const Vec& x) { return std::abs(x[0] - x[1]); }, Vec{0.0, 0.0}, 0.05),
  };
  for (const auto& t : targets) {
    for (int i = 0; i < 2000; ++i) {
      const Vec x{u(rng), u(rng)};
      const double d = t.distance(x);
      ASSERT_GE(d, 0.0);
      ASSERT_EQ(t.contains(x), d <= t.tolerance());
    }
    EXPECT_EQ(t.distance(t.witness()), 0.0);
  }
}

TEST(Invariants, CatalogInstancesPass) {
  const std::vector<std::pair<ControlProblem, std::pair<Vec, Vec>>> cases = {
      {example1(Example1Target::T2), {Vec{-3.0}, Vec{3.0}}},
      {fuller(0.0), {Vec{-2.0, -2.0}, Vec{2.0, 2.0}}},
      {fuller(1.0), {Vec{-2.0, -2.0}, Vec{2.0, 2.0}}},
      {eikonal(1.0, TargetSet::points({Vec{0.0, 0.0}})), {Vec{-1.0, -1.0}, Vec{1.0, 1.0}}},
      {sfs(Intensity::NrkTilde, TargetSet::complement_ball(Vec{0.0, 0.0}, 1.0)), {Vec{-1.0, -1.0}, Vec{1.0, 1.0}}},
      {scalar_halfline(), {Vec{-0.25}, Vec{2.0}}},
  };
  for (const auto& [p, box] : cases) {
    const auto rep = check_invariants(p, box.first, box.second, 2000);
    EXPECT_TRUE(rep.nonnegative) << p.name;
    EXPECT_TRUE(rep.deterministic) << p.name;
    EXPECT_TRUE(rep.target_consistent) << p.name;
    EXPECT_TRUE(rep.target_nonempty) << p.name;
  }
}

TEST(Invariants, LipschitzWarningFiresOnUnderstatedHint) {
  ControlProblem p = fuller(0.0);
  p.lipschitz_hint = 0.01;
  EXPECT_TRUE(check_invariants(p, Vec{-1.0, -1.0}, Vec{1.0, 1.0}, 500).lipschitz_warning);
  p.lipschitz_hint = 1.0;
  EXPECT_FALSE(check_invariants(p, Vec{-1.0, -1.0}, Vec{1.0, 1.0}, 500).lipschitz_warning);
}

TEST(Invariants, NegativeLagrangianIsReportedNotThrown) {
  ControlProblem p = scalar_halfline();
  p.lagrangian = [](const Vec& x, const Vec&) { return x[0]; };
  EXPECT_FALSE(check_invariants(p, Vec{-1.0}, Vec{1.0}, 200).nonnegative);
}
