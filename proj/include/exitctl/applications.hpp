#pragma once

// Concrete instances: the degree-10 one-dimensional example, Fuller
// variants, degenerate eikonal, shape-from-shading and the scalar
// half-line example, with reference data and registered escape families.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "exitctl/error.hpp"
#include "exitctl/hypothesis.hpp"
#include "exitctl/problem.hpp"
#include "exitctl/quadrature.hpp"
#include "exitctl/signal.hpp"
#include "exitctl/vec.hpp"

namespace exitctl {

/// Problem plus the reference data the catalog knows about it.
struct Instance {
  ControlProblem problem;
  ScalarFieldFn reference;                  ///< closed form or quadrature oracle, may be empty
  std::vector<EscapeFamily> escape_families;
  std::vector<Vec> h5_probes;               ///< extra start states for the H5 sweep
};

// ---------------------------------------------------------------------------
// Example 1: x' = u in [-1, 1], l = L(x)

enum class Example1Target { T1, T2 };

inline double example1_L(double x) {
  const double a = (x + 2.0) * (x - 2.0) * x * (x + 1.0) * (x - 1.0);
  return a * a;
}

/// F(x) = integral of L over [0, x] (signed).
inline double example1_F(double x) {
  return integrate_gl(example1_L, 0.0, x, 8, 8);
}

/// Value function for the chosen target: the cost of the straight run to
/// the nearest target point on either side.
inline double example1_value(Example1Target t, double x) {
  std::vector<double> pts = t == Example1Target::T1 ? std::vector<double>{0.0}
                                                    : std::vector<double>{-2.0, 0.0, 2.0};
  const double Fx = example1_F(x);
  double best = std::numeric_limits<double>::infinity();
  double left = -std::numeric_limits<double>::infinity(), right = -left;
  for (double p : pts) {
    if (p <= x) left = std::max(left, p);
    if (p >= x) right = std::min(right, p);
  }
  if (std::isfinite(left)) best = std::min(best, std::abs(Fx - example1_F(left)));
  if (std::isfinite(right)) best = std::min(best, std::abs(example1_F(right) - Fx));
  return best;
}

/// `box_samples` > 0 replaces {-1, 0, 1} by a uniform sampling of [-1, 1].
inline ControlProblem example1(Example1Target t, int box_samples = 0) {
  ControlProblem p;
  p.name = t == Example1Target::T1 ? "example1_T1" : "example1_T2";
  p.state_dim = 1;
  p.dynamics = [](const Vec&, const Vec& a) { return Vec{a[0]}; };
  p.lagrangian = [](const Vec& x, const Vec&) { return example1_L(x[0]); };
  p.target = t == Example1Target::T1 ? TargetSet::points({Vec{0.0}})
                                     : TargetSet::points({Vec{0.0}, Vec{2.0}, Vec{-2.0}});
  p.controls = box_samples > 0 ? ControlSet::box(Vec{-1.0}, Vec{1.0}, {box_samples})
                               : ControlSet::finite({Vec{-1.0}, Vec{0.0}, Vec{1.0}});
  p.lipschitz_hint = 1.0;
  return p;
}

// ---------------------------------------------------------------------------
// Fuller variants

/// Cubic radial smoothstep: 1 for r <= r0, 0 for r >= 2 r0, C^1 between.
inline double fuller_bump(double r, double r0) {
  if (r0 <= 0.0) return 0.0;
  if (r <= r0) return 1.0;
  if (r >= 2.0 * r0) return 0.0;
  const double t = (r - r0) / r0;
  return 1.0 - t * t * (3.0 - 2.0 * t);
}

struct FullerOptions {
  /// Target second coordinate m; NaN means m = k.
  double m = std::numeric_limits<double>::quiet_NaN();
  /// State cost g(x1); empty means x1^2.
  std::function<double(double)> state_cost;
  int control_samples = 3;  ///< uniform samples of [-1, 1]
};

/// f = (y - k Phi(x, y), a), l = g(x) + k (1 - |a|)^2, target {(k, m)}.
inline ControlProblem fuller(double k, const FullerOptions& opt = {}) {
  if (!(k >= 0.0) || !std::isfinite(k)) throw Error(ErrorCode::Config, "fuller: k must be a nonnegative number");
  const double m = std::isnan(opt.m) ? k : opt.m;
  if (m != k && k == 0.0) throw Error(ErrorCode::Config, "fuller: shifted targets need k != 0");
  ControlProblem p;
  p.name = "fuller";
  p.state_dim = 2;
  p.dynamics = [k, m](const Vec& x, const Vec& a) {
    const double r = std::hypot(x[0] - k, x[1] - m);
    return Vec{x[1] - k * fuller_bump(r, 0.25 * k), a[0]};
  };
  auto g = opt.state_cost;
  p.lagrangian = [k, g](const Vec& x, const Vec& a) {
    const double pen = 1.0 - std::abs(a[0]);
    return (g ? g(x[0]) : x[0] * x[0]) + k * pen * pen;
  };
  p.target = TargetSet::points({Vec{k, m}});
  p.controls = ControlSet::box(Vec{-1.0}, Vec{1.0}, {opt.control_samples});
  // Phi' is bounded by 3 / (2 r0); the bump contributes k * that.
  p.lipschitz_hint = k > 0.0 ? 1.0 + 6.0 : 1.0;
  return p;
}

// ---------------------------------------------------------------------------
// Degenerate eikonal

struct EikonalOptions {
  int directions = 64;
  int rings = 1;
};

inline double eikonal_rho(double p, const Vec& x) {
  return std::pow(1.0 + std::sqrt(norm(x)), -p);
}

/// f = (a, b) on the closed unit ball, l = (1 + sqrt|x|)^-p.
inline ControlProblem eikonal(double p, TargetSet target, const EikonalOptions& opt = {}) {
  if (!(p >= 0.0) || !std::isfinite(p)) throw Error(ErrorCode::Config, "eikonal: p must be >= 0");
  ControlProblem pr;
  pr.name = "eikonal";
  pr.state_dim = 2;
  pr.dynamics = [](const Vec&, const Vec& a) { return a; };
  pr.lagrangian = [p](const Vec& x, const Vec&) { return eikonal_rho(p, x); };
  pr.target = std::move(target);
  pr.controls = ControlSet::ball(2, 1.0, opt.directions, opt.rings);
  pr.lipschitz_hint = 1.0;
  if (p > 2.0) pr.flags.push_back("H6_SUSPECT");
  return pr;
}

/// Cost of the unit-speed ray from the origin up to time T, in closed form.
/// Valid for p in {0, 1, 2, 4}; other p use quadrature.
inline double eikonal_ray_cost(double p, double T) {
  const double r = std::sqrt(T);
  if (p == 0.0) return T;
  if (p == 1.0) return 2.0 * r - 2.0 * std::log1p(r);
  if (p == 2.0) return 2.0 * std::log1p(r) + 2.0 / (1.0 + r) - 2.0;
  if (p == 4.0) {
    // s = u^2: integral of 2u / (1+u)^4 du.
    const double q = 1.0 + r;
    return (-1.0 / (q * q) + 2.0 / (3.0 * q * q * q)) - (-1.0 + 2.0 / 3.0);
  }
  return integrate_gl([p](double u) { return 2.0 * u * std::pow(1.0 + u, -p); }, 0.0, r, 256, 8);
}

// ---------------------------------------------------------------------------
// Shape-from-shading

enum class Intensity { Pound0, NrkTilde };

inline double sfs_intensity(Intensity which, const Vec& x) {
  const double r = norm(x);
  if (which == Intensity::Pound0) return r / (1.0 + r);
  const double e = 3.0 * std::exp(2.0 * r);
  return std::isinf(e) ? 1.0 : e / (1.0 + e);
}

struct SfsOptions {
  int directions = 32;
  int rings = 8;
};

/// f = -I(x) u, l = 1 - I(x) sqrt(1 - |u|^2), u in the closed unit ball.
inline ControlProblem sfs(Intensity which, TargetSet target, const SfsOptions& opt = {}) {
  if (which == Intensity::Pound0 && target.contains(Vec(2, 0.0)))
    throw Error(ErrorCode::TargetContainsOrigin, "sfs: the target must exclude the origin");
  ControlProblem p;
  p.name = which == Intensity::Pound0 ? "sfs_pound0" : "sfs_nrk_tilde";
  p.state_dim = 2;
  p.dynamics = [which](const Vec& x, const Vec& u) { return u * -sfs_intensity(which, x); };
  p.lagrangian = [which](const Vec& x, const Vec& u) {
    return 1.0 - sfs_intensity(which, x) * std::sqrt(std::max(0.0, 1.0 - dot(u, u)));
  };
  p.target = std::move(target);
  p.controls = ControlSet::ball(2, 1.0, opt.directions, opt.rings);
  p.lipschitz_hint = which == Intensity::Pound0 ? 1.0 : 0.5;
  if (which == Intensity::NrkTilde) p.flags.push_back("H6_SUSPECT");
  return p;
}

/// The escaping open-loop input (0, -1/(t+1)).
inline ControlSignal log_escape_signal() {
  return ControlSignal::open_loop([](double t) { return Vec{0.0, -1.0 / (t + 1.0)}; }, "log_escape");
}

/// The bound chain constant 2 (1 + 3e^2) / (3e^2).
inline double log_escape_cost_bound() {
  const double e2 = std::exp(2.0);
  return 2.0 * (1.0 + 3.0 * e2) / (3.0 * e2);
}

/// Intensity reaching 1 at the origin; u = 1 - |x|^2 and -u both solve
/// I sqrt(1 + |Du|^2) = 1 inside the unit disk. Verifier fixture only.
struct TwinSolutionFixture {
  ControlProblem problem;
  ScalarFieldFn u, minus_u;
  /// H(x, p) = I(x) sqrt(1 + |p|^2) - 1.
  std::function<double(const Vec&, const Vec&)> hamiltonian;
};

inline TwinSolutionFixture twin_solution_fixture(const SfsOptions& opt = {}) {
  TwinSolutionFixture fx;
  auto I = [](const Vec& x) { return 1.0 / std::sqrt(1.0 + 4.0 * dot(x, x)); };
  ControlProblem& p = fx.problem;
  p.name = "sfs_twin";
  p.state_dim = 2;
  p.dynamics = [I](const Vec& x, const Vec& u) { return u * -I(x); };
  p.lagrangian = [I](const Vec& x, const Vec& u) {
    return 1.0 - I(x) * std::sqrt(std::max(0.0, 1.0 - dot(u, u)));
  };
  p.target = TargetSet::complement_ball(Vec{0.0, 0.0}, 1.0);
  p.controls = ControlSet::ball(2, 1.0, opt.directions, opt.rings);
  p.flags = {"H5_FAILS", "H6_FAILS"};
  fx.u = [](const Vec& x) { return std::max(0.0, 1.0 - dot(x, x)); };
  fx.minus_u = [](const Vec& x) { return -std::max(0.0, 1.0 - dot(x, x)); };
  fx.hamiltonian = [I](const Vec& x, const Vec& q) { return I(x) * std::sqrt(1.0 + dot(q, q)) - 1.0; };
  return fx;
}

// ---------------------------------------------------------------------------
// Scalar half-line example

/// f = |x| a with A = {+1}, l = |x|, target [1, inf).
inline ControlProblem scalar_halfline() {
  ControlProblem p;
  p.name = "scalar_halfline";
  p.state_dim = 1;
  p.dynamics = [](const Vec& x, const Vec& a) { return Vec{std::abs(x[0]) * a[0]}; };
  p.lagrangian = [](const Vec& x, const Vec&) { return std::abs(x[0]); };
  p.target = TargetSet::half_line(Vec{1.0}, Vec{1.0});
  p.controls = ControlSet::finite({Vec{1.0}});
  p.lipschitz_hint = 1.0;
  return p;
}

/// 1 - x on (0, 1], 0 on the target, +inf where the target is unreachable.
inline double scalar_halfline_value(double x) {
  if (x >= 1.0) return 0.0;
  if (x > 0.0) return 1.0 - x;
  return std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------------------
// Catalog entries with reference data

inline Instance example1_instance(Example1Target t) {
  Instance in{example1(t), [t](const Vec& x) { return example1_value(t, x[0]); }, {}, {}};
  for (double x : {-2.0, -1.0, 1.0, 2.0})
    if (!in.problem.target.contains(Vec{x})) in.h5_probes.push_back(Vec{x});
  return in;
}

inline Instance fuller_instance(double k, const FullerOptions& opt = {}) {
  Instance in{fuller(k, opt), {}, {}, {}};
  in.escape_families.push_back(
      {"accelerate", Vec{0.0, 0.0}, ControlSignal::constant(Vec{1.0}), {}});
  return in;
}

inline Instance eikonal_instance(double p, TargetSet target, const EikonalOptions& opt = {}) {
  Instance in{eikonal(p, std::move(target), opt), {}, {}, {}};
  // Along the ray |x| = s, so l <= s^(-p/2); integrable only for p > 2.
  std::function<double(double)> major;
  if (p > 2.0) major = [p](double s) { return s > 0.0 ? std::pow(s, -0.5 * p) : 1.0; };
  in.escape_families.push_back({"ray", Vec{0.0, 0.0}, ControlSignal::constant(Vec{1.0, 0.0}), major});
  return in;
}

inline Instance sfs_instance(Intensity which, TargetSet target, const SfsOptions& opt = {}) {
  Instance in{sfs(which, std::move(target), opt), {}, {}, {}};
  if (which == Intensity::NrkTilde) {
    const double e2 = std::exp(2.0);
    in.escape_families.push_back({"log_escape", Vec{0.0, 1.0}, log_escape_signal(), [e2](double t) {
                                    return (1.0 + 3.0 * e2) / (1.0 + 3.0 * e2 * std::pow(t + 1.0, 1.5));
                                  }});
  }
  return in;
}

inline Instance scalar_halfline_instance() {
  return {scalar_halfline(), [](const Vec& x) { return scalar_halfline_value(x[0]); }, {}, {}};
}

}  // namespace exitctl
