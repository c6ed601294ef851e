#include <gtest/gtest.h>

#include <cmath>
#include <algorithm>
#include <functional>
#include <random>

#include "exitctl/applications.hpp"
#include "exitctl/quadrature.hpp"

using namespace exitctl;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::Parse;
}

// Trapezoid sum of L on a fine uniform grid; independent of the Gauss rule.
double F_trapezoid(double a, double b) {
  const int n = 200000;
  const double h = (b - a) / n;
  double s = 0.5 * (example1_L(a) + example1_L(b));
  for (int i = 1; i < n; ++i) s += example1_L(a + i * h);
  return s * h;
}

}  // namespace

TEST(Example1, LagrangianZeros) {
  for (double x : {-2.0, -1.0, 0.0, 1.0, 2.0}) EXPECT_EQ(example1_L(x), 0.0);
  EXPECT_GT(example1_L(0.5), 0.0);
}

TEST(Example1, Targets) {
  const auto t1 = example1(Example1Target::T1);
  const auto t2 = example1(Example1Target::T2);
  EXPECT_TRUE(t1.target.contains(Vec{0.0}));
  EXPECT_FALSE(t1.target.contains(Vec{2.0}));
  EXPECT_TRUE(t2.target.contains(Vec{2.0}));
  EXPECT_TRUE(t2.target.contains(Vec{-2.0}));
}

TEST(Example1, ValueFunctionsDifferAtTwo) {
  EXPECT_EQ(example1_value(Example1Target::T2, 2.0), 0.0);
  EXPECT_GT(example1_value(Example1Target::T1, 2.0), 0.1);
  EXPECT_EQ(example1_value(Example1Target::T1, 0.0), 0.0);
}

TEST(Example1, FMatchesTrapezoidOracle) {
  for (double x : {-3.0, -1.5, 0.7, 2.0, 2.9})
    EXPECT_NEAR(example1_F(x), F_trapezoid(0.0, x), 1e-6 * (1.0 + std::abs(example1_F(x))));
}

// v is even for both targets, vanishes on the target and is positive off it.
TEST(Example1Property, ValueSymmetryAndSign) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (auto t : {Example1Target::T1, Example1Target::T2}) {
    const auto p = example1(t);
    for (int i = 0; i < 300; ++i) {
      const double x = u(rng);
      const double v = example1_value(t, x);
      EXPECT_NEAR(v, example1_value(t, -x), 1e-9 * (1.0 + v));
      if (!p.target.contains(Vec{x})) { EXPECT_GT(v, 0.0); }
    }
  }
}

TEST(Fuller, K0DynamicsAndCost) {
  const auto p = fuller(0.0);
  const Vec f = eval_dynamics(p, Vec{2.0, 3.0}, Vec{-1.0});
  EXPECT_DOUBLE_EQ(f[0], 3.0);
  EXPECT_DOUBLE_EQ(f[1], -1.0);
  EXPECT_DOUBLE_EQ(eval_lagrangian(p, Vec{2.0, 3.0}, Vec{0.0}), 4.0);
  EXPECT_TRUE(p.target.contains(Vec{0.0, 0.0}));
}

TEST(Fuller, K1StationaryAtTarget) {
  const auto p = fuller(1.0);
  for (double a : {-1.0, 0.0, 1.0}) {
    const Vec f = eval_dynamics(p, Vec{1.0, 1.0}, Vec{a});
    EXPECT_DOUBLE_EQ(f[0], 0.0);
    EXPECT_DOUBLE_EQ(f[1], a);
  }
  EXPECT_DOUBLE_EQ(eval_lagrangian(p, Vec{0.0, 0.0}, Vec{0.0}), 1.0);
  EXPECT_DOUBLE_EQ(eval_lagrangian(p, Vec{0.0, 0.0}, Vec{1.0}), 0.0);
  EXPECT_TRUE(p.target.contains(Vec{1.0, 1.0}));
}

TEST(Fuller, BumpShape) {
  EXPECT_EQ(fuller_bump(0.1, 0.25), 1.0);
  EXPECT_EQ(fuller_bump(0.5, 0.25), 0.0);
  EXPECT_NEAR(fuller_bump(0.375, 0.25), 0.5, 1e-15);
  // C^1 at both joins
  const double e = 1e-7;
  EXPECT_NEAR((fuller_bump(0.25 + e, 0.25) - 1.0) / e, 0.0, 1e-5);
  EXPECT_NEAR(fuller_bump(0.5 - e, 0.25) / e, 0.0, 1e-5);
}

TEST(Fuller, RejectsBadParameters) {
  EXPECT_EQ(code_of([] { fuller(-1.0); }), ErrorCode::Config);
  EXPECT_EQ(code_of([] { fuller(std::nan("")); }), ErrorCode::Config);
  FullerOptions o;
  o.m = 2.0;
  EXPECT_EQ(code_of([&] { fuller(0.0, o); }), ErrorCode::Config);
  EXPECT_NO_THROW(fuller(1.0, o));
}

TEST(Fuller, CustomStateCost) {
  FullerOptions o;
  o.state_cost = [](double x) { return std::abs(x); };
  EXPECT_DOUBLE_EQ(eval_lagrangian(fuller(0.0, o), Vec{-3.0, 0.0}, Vec{0.0}), 3.0);
}

TEST(Eikonal, RunningCost) {
  const auto t = TargetSet::points({Vec{0.0, 0.0}});
  const auto p0 = eikonal(0.0, t);
  const auto p2 = eikonal(2.0, t);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(eval_lagrangian(p0, Vec{u(rng), u(rng)}, Vec{0.0, 0.0}), 1.0);
  EXPECT_DOUBLE_EQ(eval_lagrangian(p2, Vec{0.6, 0.8}, Vec{0.0, 0.0}), 0.25);
  EXPECT_EQ(code_of([&] { eikonal(-1.0, t); }), ErrorCode::Config);
}

TEST(Eikonal, FamiliesRegistered) {
  const auto t = TargetSet::points({Vec{0.0, 0.0}});
  const auto in4 = eikonal_instance(4.0, t);
  ASSERT_EQ(in4.escape_families.size(), 1u);
  EXPECT_EQ(in4.escape_families[0].name, "ray");
  EXPECT_TRUE(static_cast<bool>(in4.escape_families[0].majorant));
  EXPECT_FALSE(static_cast<bool>(eikonal_instance(1.0, t).escape_families[0].majorant));
  const auto& fl = in4.problem.flags;
  EXPECT_NE(std::find(fl.begin(), fl.end(), "H6_SUSPECT"), fl.end());
}

TEST(Eikonal, RayCostDerivativeIsRho) {
  for (double p : {0.0, 1.0, 2.0, 4.0, 3.0})
    for (double T : {0.3, 2.0, 50.0}) {
      const double e = 1e-5 * T;
      const double d = (eikonal_ray_cost(p, T + e) - eikonal_ray_cost(p, T - e)) / (2.0 * e);
      EXPECT_NEAR(d, std::pow(1.0 + std::sqrt(T), -p), 1e-7) << p << " " << T;
    }
  EXPECT_EQ(eikonal_ray_cost(4.0, 0.0), 0.0);
  EXPECT_NEAR(eikonal_ray_cost(4.0, 1e14), 1.0 / 3.0, 1e-6);
}

TEST(Sfs, Intensities) {
  EXPECT_DOUBLE_EQ(sfs_intensity(Intensity::Pound0, Vec{1.0, 0.0}), 0.5);
  EXPECT_EQ(sfs_intensity(Intensity::Pound0, Vec{0.0, 0.0}), 0.0);
  EXPECT_DOUBLE_EQ(sfs_intensity(Intensity::NrkTilde, Vec{0.0, 0.0}), 0.75);
  EXPECT_EQ(sfs_intensity(Intensity::NrkTilde, Vec{1e6, 0.0}), 1.0);
  // Both stay inside [0, 1).
  for (double r : {0.1, 1.0, 5.0}) {
    EXPECT_LT(sfs_intensity(Intensity::Pound0, Vec{r, 0.0}), 1.0);
    EXPECT_LT(sfs_intensity(Intensity::NrkTilde, Vec{r, 0.0}), 1.0);
  }
}

TEST(Sfs, RunningCost) {
  const auto p = sfs(Intensity::Pound0, TargetSet::points({Vec{3.0, 0.0}}));
  EXPECT_DOUBLE_EQ(eval_lagrangian(p, Vec{1.0, 0.0}, Vec{1.0, 0.0}), 1.0);
  EXPECT_DOUBLE_EQ(eval_lagrangian(p, Vec{1.0, 0.0}, Vec{0.0, 0.0}), 0.5);
  const Vec f = eval_dynamics(p, Vec{1.0, 0.0}, Vec{0.6, 0.8});
  EXPECT_DOUBLE_EQ(f[0], -0.3);
  EXPECT_DOUBLE_EQ(f[1], -0.4);
}

TEST(Sfs, TargetMustExcludeOrigin) {
  EXPECT_EQ(code_of([] { sfs(Intensity::Pound0, TargetSet::points({Vec{0.0, 0.0}})); }),
            ErrorCode::TargetContainsOrigin);
}

TEST(Sfs, LogEscapeConstant) {
  const double e2 = std::exp(2.0);
  EXPECT_NEAR(log_escape_cost_bound(), 2.0 / (3.0 * e2) + 2.0, 1e-15);
  const auto s = log_escape_signal();
  EXPECT_DOUBLE_EQ(s.value(1.0, Vec{0.0, 0.0})[1], -0.5);
  EXPECT_TRUE(sfs_instance(Intensity::Pound0, TargetSet::points({Vec{3.0, 0.0}})).escape_families.empty());
}

TEST(ScalarHalfline, ReferenceAndDynamics) {
  EXPECT_DOUBLE_EQ(scalar_halfline_value(0.5), 0.5);
  EXPECT_NEAR(scalar_halfline_value(1e-9), 1.0, 1e-8);
  EXPECT_EQ(scalar_halfline_value(1.5), 0.0);
  EXPECT_TRUE(std::isinf(scalar_halfline_value(0.0)));
  EXPECT_TRUE(std::isinf(scalar_halfline_value(-0.3)));
  const auto p = scalar_halfline();
  EXPECT_DOUBLE_EQ(eval_dynamics(p, Vec{-0.5}, Vec{1.0})[0], 0.5);
}

// The reference solves v' |x| + |x| = 0 on (0, 1) with v(1) = 0.
TEST(ScalarHalflineProperty, ReferenceSolvesHjb) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  for (int i = 0; i < 200; ++i) {
    const double x = u(rng), e = 1e-6;
    const double dv = (scalar_halfline_value(x + e) - scalar_halfline_value(x - e)) / (2.0 * e);
    EXPECT_NEAR(-std::abs(x) * dv - std::abs(x), 0.0, 1e-8);
  }
}

TEST(TwinSolutions, FixtureSatisfiesEquationPointwise) {
  const auto fx = twin_solution_fixture();
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-0.7, 0.7);
  for (int i = 0; i < 200; ++i) {
    const Vec x{u(rng), u(rng)};
    const Vec du{-2.0 * x[0], -2.0 * x[1]};
    EXPECT_NEAR(fx.hamiltonian(x, du), 0.0, 1e-12);
    EXPECT_NEAR(fx.hamiltonian(x, du * -1.0), 0.0, 1e-12);
    EXPECT_EQ(fx.u(x), -fx.minus_u(x));
  }
}
