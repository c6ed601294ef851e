#pragma once

// Fixed-step RK4 integration of controlled trajectories with the running
// cost carried as an extra state, plus exit detection by bisection.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "exitctl/error.hpp"
#include "exitctl/problem.hpp"
#include "exitctl/signal.hpp"
#include "exitctl/vec.hpp"

namespace exitctl {

struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> states;
  std::vector<double> cumulative_cost;
  double exit_time = std::numeric_limits<double>::quiet_NaN();
  bool exited = false;

  std::size_t size() const noexcept { return times.size(); }
  double final_time() const { return times.back(); }
  const Vec& final_state() const { return states.back(); }
  double final_cost() const { return cumulative_cost.back(); }
};

struct IntegrateOptions {
  double t0 = 0.0;            ///< absolute start time (signal is queried at t0 + s)
  double cost_offset = 0.0;   ///< added to every cumulative cost sample
  std::size_t record_every = 1;  ///< keep every n-th step; first and last always kept
  double blowup_norm = 1e12;
  double exit_refine = 1e-3;  ///< bisection stops at dt * exit_refine
  bool stop_at_target = true;  ///< false: run the full horizon through the target
};

namespace detail {

struct Stage {
  Vec f;
  double l;
};

inline Stage rhs(const ControlProblem& p, const Vec& x, const Vec& a) {
  return {eval_dynamics(p, x, a), eval_lagrangian(p, x, a)};
}

/// One RK4 step of size h from (t, x). Piecewise-constant signals are
/// frozen at the mid-step value; other signals are sampled per stage.
inline void rk4_step(const ControlProblem& p, const ControlSignal& u, bool frozen, double t,
                     const Vec& x, double h, Vec& x_out, double& dcost) {
  const Vec a_mid = frozen ? u.value(t + 0.5 * h, x) : Vec{};
  auto ctrl = [&](double s, const Vec& y) { return frozen ? a_mid : u.value(s, y); };
  const Stage k1 = rhs(p, x, ctrl(t, x));
  const Vec y2 = x + k1.f * (0.5 * h);
  const Stage k2 = rhs(p, y2, ctrl(t + 0.5 * h, y2));
  const Vec y3 = x + k2.f * (0.5 * h);
  const Stage k3 = rhs(p, y3, ctrl(t + 0.5 * h, y3));
  const Vec y4 = x + k3.f * h;
  const Stage k4 = rhs(p, y4, ctrl(t + h, y4));
  x_out = x + (k1.f + 2.0 * k2.f + 2.0 * k3.f + k4.f) * (h / 6.0);
  dcost = (k1.l + 2.0 * k2.l + 2.0 * k3.l + k4.l) * (h / 6.0);
}

}  // namespace detail

/// Integrates x' = f(x, u) with running cost on [t0, t0 + t_max], stopping
/// at the first entry into the target. Throws BLOWUP (value = last valid
/// absolute time) when the state norm exceeds the guard.
inline Trajectory integrate(const ControlProblem& p, const Vec& x0, const ControlSignal& u,
                            double dt, double t_max, const IntegrateOptions& opt = {}) {
  if (!(dt > 0.0)) throw Error(ErrorCode::Config, "integrate: dt must be positive");
  if (!(t_max >= dt)) throw Error(ErrorCode::Config, "integrate: t_max must be >= dt");
  if (x0.size() != p.state_dim || !all_finite(x0))
    throw Error(ErrorCode::DimensionMismatch, "integrate: bad initial state");

  Trajectory tr;
  const std::size_t stride = std::max<std::size_t>(1, opt.record_every);
  const bool frozen = u.piecewise_constant();
  double t = opt.t0;
  const double t_end = opt.t0 + t_max;
  Vec x = x0;
  double c = opt.cost_offset;
  tr.times.push_back(t);
  tr.states.push_back(x);
  tr.cumulative_cost.push_back(c);
  if (opt.stop_at_target && p.target.contains(x)) {
    tr.exited = true;
    tr.exit_time = t;
    return tr;
  }

  std::size_t step = 0;
  Vec xn;
  double dc = 0.0;
  while (t < t_end) {
    double h = std::min(dt, t_end - t);
    if (frozen) {
      const double b = u.next_break(t);
      if (b > t && b - t < h) h = b - t;
    }
    // Avoid a sliver step from floating-point residue at the horizon.
    if (t_end - (t + h) < 1e-12 * dt) h = t_end - t;
    detail::rk4_step(p, u, frozen, t, x, h, xn, dc);
    if (!all_finite(xn) || norm(xn) > opt.blowup_norm)
      throw Error(ErrorCode::Blowup, "state norm exceeded guard", t);

    if (opt.stop_at_target && p.target.contains(xn)) {
      // Bisect on the fraction of this step at which the target is reached.
      double lo = 0.0, hi = 1.0;
      Vec x_hi = xn;
      double c_hi = dc;
      while ((hi - lo) * h > dt * opt.exit_refine) {
        const double mid = 0.5 * (lo + hi);
        Vec xm;
        double cm = 0.0;
        detail::rk4_step(p, u, frozen, t, x, mid * h, xm, cm);
        if (p.target.contains(xm)) {
          hi = mid;
          x_hi = xm;
          c_hi = cm;
        } else {
          lo = mid;
        }
      }
      t += hi * h;
      tr.times.push_back(t);
      tr.states.push_back(x_hi);
      tr.cumulative_cost.push_back(c + c_hi);
      tr.exited = true;
      tr.exit_time = t;
      return tr;
    }

    t += h;
    x = xn;
    c += dc;
    ++step;
    if (step % stride == 0 || t >= t_end) {
      tr.times.push_back(t);
      tr.states.push_back(x);
      tr.cumulative_cost.push_back(c);
    }
  }
  return tr;
}

/// "# t,x1,..,xN,cost" then one row per sample, %.17g.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& tr) {
  const std::size_t n = tr.states.empty() ? 0 : tr.states.front().size();
  os << "# t";
  for (std::size_t i = 0; i < n; ++i) os << ",x" << (i + 1);
  os << ",cost\n";
  char buf[40];
  for (std::size_t k = 0; k < tr.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g", tr.times[k]);
    os << buf;
    for (std::size_t i = 0; i < n; ++i) {
      std::snprintf(buf, sizeof buf, ",%.17g", tr.states[k][i]);
      os << buf;
    }
    std::snprintf(buf, sizeof buf, ",%.17g\n", tr.cumulative_cost[k]);
    os << buf;
  }
}

// ---------------------------------------------------------------------------
// Fuller switching curve

/// Costate defect of the bang arc that starts on the switching curve at
/// (C, -1) with u = +1. With H = 0 the costate starts at (C^2, 0); the arc
/// meets the mirrored branch x1 = -C x2^2 after tau = 1 + s,
/// s^2 = (1/2 - C)/(1/2 + C), and p2(tau) must vanish there.
inline double fuller_switch_defect(double C) {
  const double s = std::sqrt((0.5 - C) / (0.5 + C));
  const double tau = 1.0 + s;
  return -(C * C * tau - C * tau * tau + tau * tau * tau / 3.0 - tau * tau * tau * tau / 12.0);
}

/// Bisection for the switching constant inside [lo, hi].
inline double fuller_switch_constant_in(double lo, double hi) {
  double flo = fuller_switch_defect(lo);
  const double fhi = fuller_switch_defect(hi);
  if (!(lo > 0.0 && hi < 0.5 && lo < hi) || !(flo * fhi < 0.0))
    throw Error(ErrorCode::Config, "fuller switch constant: bracket does not contain a sign change");
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = fuller_switch_defect(mid);
    if (fm == 0.0 || hi - lo < 1e-15) return mid;
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  throw Error(ErrorCode::Config, "fuller switch constant: bisection did not converge in 200 iterations",
              0.5 * (lo + hi), 200);
}

/// Switching constant C of the Fuller synthesis, approximately 0.4446.
inline double fuller_switch_constant() {
  static const double C = fuller_switch_constant_in(0.1, 0.49);
  return C;
}

/// Switching function s = x1 + C x2 |x2|; u = -1 above the curve (s > 0),
/// +1 below, and on the curve itself the branch that leads to the origin.
inline double fuller_feedback(const Vec& x, double C) {
  const double s = x[0] + C * x[1] * std::abs(x[1]);
  if (s > 0.0) return -1.0;
  if (s < 0.0) return 1.0;
  if (x[0] > 0.0) return 1.0;
  if (x[0] < 0.0) return -1.0;
  return 0.0;
}

inline ControlSignal fuller_feedback_signal(double C) {
  return ControlSignal::feedback([C](const Vec& x) { return Vec{fuller_feedback(x, C)}; },
                                 "fuller");
}

/// p(n) = (1/(2n^2), 1/n), the states reached from the origin by u = +1.
inline Vec fuller_point(int n) { return Vec{0.5 / (double(n) * n), 1.0 / n}; }

}  // namespace exitctl
