#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "exitctl/applications.hpp"
#include "exitctl/grid.hpp"
#include "exitctl/integrate.hpp"
#include "exitctl/solver.hpp"

using namespace exitctl;

namespace {

const TargetSet kOrigin2 = TargetSet::points({Vec{0.0, 0.0}});

double sup_diff(const ValueField& w, const std::function<double(const Vec&)>& ref) {
  double e = 0.0;
  for (std::size_t k = 0; k < w.grid.size(); ++k) e = std::max(e, std::abs(w.values[k] - ref(w.grid.point(k))));
  return e;
}

}  // namespace

TEST(Grid, CoordinatesAndIndexing) {
  const Grid g(Vec{-1.0, 0.0}, Vec{1.0, 3.0}, {5, 4});
  EXPECT_EQ(g.size(), 20u);
  EXPECT_DOUBLE_EQ(g.h(0), 0.5);
  EXPECT_DOUBLE_EQ(g.h(1), 1.0);
  EXPECT_EQ(g.coord(0, 4), 1.0);
  EXPECT_EQ(g.point(1), (Vec{-1.0, 1.0}));  // last axis fastest
  EXPECT_THROW(Grid(Vec{0.0}, Vec{0.0}, {3}), Error);
  EXPECT_THROW(Grid(Vec{0.0}, Vec{1.0}, {1}), Error);
}

TEST(GridProperty, FlatMultiRoundTrip) {
  const Grid g(Vec{0.0, 0.0, 0.0}, Vec{1.0, 2.0, 3.0}, {3, 7, 5});
  for (std::size_t k = 0; k < g.size(); ++k) {
    ASSERT_EQ(g.flat(g.multi(k)), k);
    ASSERT_EQ(g.nearest(g.point(k)), k);
  }
}

TEST(Interpolate, ConstantNodeAndMidpoint) {
  const Grid g(Vec{0.0}, Vec{1.0}, {2});
  ValueField w(g);
  w.values = {0.0, 1.0};
  EXPECT_DOUBLE_EQ(interpolate(w, Vec{0.5}), 0.5);
  EXPECT_EQ(interpolate(w, Vec{1.0}), 1.0);
  const Grid g2(Vec{-1.0, -1.0}, Vec{1.0, 1.0}, {9, 9});
  const auto c = ValueField::from_function(g2, [](const Vec&) { return 2.5; });
  EXPECT_DOUBLE_EQ(interpolate(c, Vec{0.123, -0.77}), 2.5);
  EXPECT_THROW(interpolate(c, Vec{1.5, 0.0}), Error);
}

// Multilinear interpolation reproduces functions that are affine in each
// coordinate separately (a + bx + cy + dxy) exactly.
TEST(InterpolateProperty, ExactOnBilinear) {
  const Grid g(Vec{-1.0, -2.0}, Vec{3.0, 1.0}, {11, 7});
  auto f = [](const Vec& x) { return 0.3 - 1.7 * x[0] + 2.2 * x[1] + 0.9 * x[0] * x[1]; };
  const auto w = ValueField::from_function(g, f);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> ux(-1.0, 3.0), uy(-2.0, 1.0);
  for (int i = 0; i < 2000; ++i) {
    const Vec x{ux(rng), uy(rng)};
    ASSERT_NEAR(interpolate(w, x), f(x), 1e-12);
  }
}

TEST(ValueCsv, RoundTripIsByteIdentical) {
  const Grid g(Vec{-1.0, -1.0}, Vec{1.0, 1.0}, {7, 5});
  auto w = ValueField::from_function(g, [](const Vec& x) { return std::sin(x[0]) * std::exp(x[1]) / 3.0; });
  w.roles[3] = NodeRole::Target;
  w.roles[4] = NodeRole::Outflow;
  w.values[4] = INFINITY;
  std::ostringstream a;
  write_value_csv(a, w);
  std::istringstream in(a.str());
  const auto r = read_value_csv(in);
  EXPECT_EQ(r.grid, w.grid);
  EXPECT_EQ(r.roles, w.roles);
  std::ostringstream b;
  write_value_csv(b, r);
  EXPECT_EQ(a.str(), b.str());
}

TEST(ValueCsv, MalformedInputIsParseError) {
  const std::vector<std::string> bad = {
      "0,1,INTERIOR\n",
      "# grid lower=0 upper=1 nodes=2\n# x1,value,role\n0,1,INTERIOR\n",
      "# grid lower=0 upper=1 nodes=2\n0,1,INTERIOR\n1,abc,INTERIOR\n",
      "# grid lower=0 upper=1 nodes=2\n0,1,INTERIOR\n0.5,1,INTERIOR\n",
      "# grid lower=0 upper=1 nodes=2\n0,1,INTERIOR\n1,1,SIDEWAYS\n",
  };
  for (const auto& s : bad) {
    std::istringstream in(s);
    try {
      read_value_csv(in);
      ADD_FAILURE() << "accepted: " << s;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::Parse) << s;
    }
  }
}

TEST(ValueIteration, ScalarHalflineClosedForm) {
  const Grid g(Vec{-0.25}, Vec{2.0}, {2251});
  SolverParams sp;
  sp.boundary_mode = BoundaryMode::OscInfinite;
  const auto w = solve_value_iteration(scalar_halfline(), g, sp);
  EXPECT_NEAR(interpolate(w, Vec{0.5}), 0.5, 5e-3);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double x = g.point(k)[0];
    if (x <= 0.0) { EXPECT_TRUE(std::isinf(w.values[k])) << x; }
    if (x >= 1.0) { EXPECT_EQ(w.values[k], 0.0) << x; }
  }
}

// The value grows to 1 as x decreases to 0 although no trajectory from 0
// reaches the target.
TEST(ValueIteration, ScalarHalflineLimitAtZero) {
  const Grid g(Vec{-0.25}, Vec{2.0}, {2251});
  SolverParams sp;
  sp.boundary_mode = BoundaryMode::OscInfinite;
  const auto w = solve_value_iteration(scalar_halfline(), g, sp);
  EXPECT_NEAR(interpolate(w, Vec{0.001}), 0.999, 5e-3);
}

TEST(ValueIteration, EikonalDistanceField) {
  const Grid g = Grid::uniform(Vec{-1.0, -1.0}, Vec{1.0, 1.0}, 201);
  const auto w = solve_value_iteration(eikonal(0.0, kOrigin2), g);
  EXPECT_NEAR(interpolate(w, Vec{0.3, 0.4}), 0.5, 2.0 * g.h_max());
  EXPECT_LE(sup_diff(w, [](const Vec& x) { return norm(x); }), 2.0 * g.h_max());
}

TEST(ValueIteration, FullerK0ValueAtP2BelowSimulatedCost) {
  const Grid g = Grid::uniform(Vec{-1.0, -1.0}, Vec{1.0, 1.0}, 201);
  const auto w = solve_value_iteration(fuller(0.0), g);
  // Oracle: closed-loop cost of the optimal synthesis from p(2), plus grid slack.
  const double C = fuller_switch_constant();
  const auto tr = integrate(fuller(0.0), fuller_point(2), fuller_feedback_signal(C), 1e-3, 20.0);
  const double v = interpolate(w, fuller_point(2));
  EXPECT_GE(v, 0.0);
  EXPECT_LE(v, tr.final_cost() + 3.0 * g.h_max() * 2.0);
}

// Values are >= min g on the grid, equal g on the target, and the sentinel
// appears only where nothing better is reachable.
TEST(ValueIterationProperty, ExitCostAndNonnegativity) {
  ControlProblem p = eikonal(1.0, TargetSet::points({Vec{0.5, 0.0}, Vec{-0.5, 0.2}}));
  p.exit_cost = [](const Vec& x) { return 0.25 + x[1]; };
  const Grid g = Grid::uniform(Vec{-1.0, -1.0}, Vec{1.0, 1.0}, 41);
  const auto w = solve_value_iteration(p, g);
  double gmin = INFINITY;
  for (std::size_t k = 0; k < g.size(); ++k)
    if (w.roles[k] == NodeRole::Target) {
      EXPECT_EQ(w.values[k], p.exit_value(g.point(k)));
      gmin = std::min(gmin, w.values[k]);
    }
  for (std::size_t k = 0; k < g.size(); ++k) EXPECT_GE(w.values[k], gmin - 1e-12);
}

TEST(ValueIteration, OutflowNodesHoldLarge) {
  // Only control +1 on x' = a: nodes at the right edge cannot stay inside.
  ControlProblem p;
  p.name = "drift";
  p.state_dim = 1;
  p.dynamics = [](const Vec&, const Vec& a) { return a; };
  p.lagrangian = [](const Vec&, const Vec&) { return 1.0; };
  p.target = TargetSet::points({Vec{0.0}});
  p.controls = ControlSet::finite({Vec{1.0}});
  const Grid g(Vec{-1.0}, Vec{1.0}, {21});
  const auto w = solve_value_iteration(p, g);
  EXPECT_EQ(w.roles.back(), NodeRole::Outflow);
  EXPECT_EQ(w.values.back(), kLarge);
  EXPECT_NEAR(w.values.front(), 1.0, 1e-9);
  // Right of the target nothing reaches it: capped at LARGE.
  EXPECT_EQ(w.values[15], kLarge);
}

TEST(ValueIteration, Errors) {
  const Grid g = Grid::uniform(Vec{-1.0, -1.0}, Vec{1.0, 1.0}, 21);
  try {
    solve_value_iteration(eikonal(0.0, TargetSet::points({Vec{5.0, 5.0}})), g);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyTarget);
  }
  SolverParams sp;
  sp.max_sweeps = 1;
  try {
    solve_value_iteration(eikonal(0.0, kOrigin2), g, sp);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotConverged);
    EXPECT_EQ(e.count(), 1);
    EXPECT_GT(e.value(), 0.0);
  }
  EXPECT_THROW(solve_value_iteration(scalar_halfline(), g), Error);
}

TEST(ValueIteration, JacobiAndGaussSeidelAgree) {
  const Grid g = Grid::uniform(Vec{-1.0, -1.0}, Vec{1.0, 1.0}, 41);
  SolverParams j;
  j.jacobi = true;
  const auto a = solve_value_iteration(eikonal(1.0, kOrigin2), g);
  const auto b = solve_value_iteration(eikonal(1.0, kOrigin2), g, j);
  EXPECT_LT(sup_diff(a, [&](const Vec& x) { return interpolate(b, x); }), 1e-7);
  EXPECT_LT(a.sweeps, b.sweeps);
}

TEST(ValueIteration, CacheBudgetDoesNotChangeResult) {
  const Grid g = Grid::uniform(Vec{-1.0, -1.0}, Vec{1.0, 1.0}, 41);
  SolverParams tiny;
  tiny.cache_bytes = 0;
  const auto a = solve_value_iteration(eikonal(1.0, kOrigin2), g);
  const auto b = solve_value_iteration(eikonal(1.0, kOrigin2), g, tiny);
  EXPECT_EQ(a.values, b.values);
}

TEST(FastMarching, DistanceField) {
  const Grid g = Grid::uniform(Vec{-1.0, -1.0}, Vec{1.0, 1.0}, 201);
  const auto w = solve_fast_marching([](const Vec&) { return 1.0; }, kOrigin2, g);
  EXPECT_LT(sup_diff(w, [](const Vec& x) { return norm(x); }), 2.0 * g.h_max());
}

// 1-D: every path to 0 crosses [0, x], so v(x) = |integral_0^x L|.
TEST(FastMarching, Example1MatchesQuadrature) {
  // Upper end shifted so that the zeros of L at +-1, +-2 are not nodes.
  const Grid g(Vec{-2.5}, Vec{2.5005}, {5001});
  const auto w = solve_fast_marching([](const Vec& x) { return example1_L(x[0]); }, TargetSet::points({Vec{0.0}}), g);
  EXPECT_LE(sup_diff(w, [](const Vec& x) { return std::abs(example1_F(x[0])); }), 1e-3);
}

TEST(FastMarching, CrossSchemeEikonalP1) {
  const Grid g = Grid::uniform(Vec{-1.0, -1.0}, Vec{1.0, 1.0}, 201);
  const auto fm = solve_fast_marching([](const Vec& x) { return eikonal_rho(1.0, x); }, kOrigin2, g);
  const auto vi = solve_value_iteration(eikonal(1.0, kOrigin2), g);
  EXPECT_LT(sup_diff(fm, [&](const Vec& x) { return interpolate(vi, x); }), 3.0 * g.h_max());
}

TEST(FastMarching, NonpositiveRhsNamesNode) {
  const Grid g(Vec{-1.0}, Vec{1.0}, {5});
  try {
    solve_fast_marching([](const Vec& x) { return x[0] > 0.4 ? 0.0 : 1.0; }, TargetSet::points({Vec{-1.0}}), g);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonpositiveRhs);
    EXPECT_EQ(e.count(), 3);  // x = 0.5
  }
}

// Monotone in rho: a larger right-hand side never lowers the field.
TEST(FastMarchingProperty, MonotoneInRho) {
  const Grid g = Grid::uniform(Vec{-1.0, -1.0}, Vec{1.0, 1.0}, 61);
  const auto a = solve_fast_marching([](const Vec& x) { return eikonal_rho(1.0, x); }, kOrigin2, g);
  const auto b = solve_fast_marching([](const Vec& x) { return 1.5 * eikonal_rho(1.0, x) + 0.1 * x[0] * x[0]; },
                                     kOrigin2, g);
  for (std::size_t k = 0; k < g.size(); ++k) ASSERT_GE(b.values[k], a.values[k] - 1e-12);
}
