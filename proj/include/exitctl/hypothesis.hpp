#pragma once

// Sampled evidence for the positivity hypothesis (H5) and the
// affordability hypothesis (H6), plus the Barbalat-type diagnostic.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "exitctl/error.hpp"
#include "exitctl/integrate.hpp"
#include "exitctl/problem.hpp"
#include "exitctl/quadrature.hpp"
#include "exitctl/signal.hpp"
#include "exitctl/vec.hpp"

namespace exitctl {

// ---------------------------------------------------------------------------
// H5

struct H5Violation {
  Vec x0;
  ControlSignal signal;
  std::string descriptor;
  double horizon;
  double cost;
};

struct H5Report {
  std::size_t samples = 0;
  double min_positive_cost = std::numeric_limits<double>::infinity();
  double dt = 0.0;
  std::vector<H5Violation> violations;

  const char* verdict() const { return violations.empty() ? "NO_VIOLATION_FOUND" : "VIOLATION_FOUND"; }
};

struct H5Options {
  Vec lower, upper;                 ///< sampling box for start states
  std::vector<Vec> probes;          ///< start states tried before random ones
  int max_switches = 3;
  std::uint64_t seed = 12345;
  double zero_cost = 1e-12;
  std::size_t max_recorded = 64;    ///< violations kept in the report
};

/// Integrates each (start state, signal) pair on [0, horizon] and records
/// zero-cost runs that never reach the target. The first signals for every
/// state are the constant ones, one per enumerated control; the rest are
/// random piecewise-constant signals.
inline H5Report check_h5_sampled(const ControlProblem& p, std::size_t n_states,
                                 std::size_t n_signals, double horizon, const H5Options& opt) {
  if (!(horizon > 0.0)) throw Error(ErrorCode::Config, "h5: horizon must be positive");
  if (opt.lower.size() != p.state_dim || opt.upper.size() != p.state_dim)
    throw Error(ErrorCode::Config, "h5: sampling box has the wrong dimension");
  H5Report rep;
  rep.dt = horizon / 50.0;
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto& ctrl = p.controls.enumerate();
  std::uniform_int_distribution<std::size_t> pick(0, ctrl.size() - 1);
  std::uniform_int_distribution<int> nsw(0, std::max(0, opt.max_switches));

  std::vector<Vec> states;
  for (const auto& q : opt.probes)
    if (!p.target.contains(q)) states.push_back(q);
  while (states.size() < opt.probes.size() + n_states) {
    Vec x(p.state_dim);
    for (std::size_t i = 0; i < p.state_dim; ++i)
      x[i] = opt.lower[i] + (opt.upper[i] - opt.lower[i]) * unit(rng);
    if (!p.target.contains(x)) states.push_back(x);
  }

  for (const auto& x0 : states) {
    for (std::size_t j = 0; j < n_signals; ++j) {
      ControlSignal u = ControlSignal::constant(ctrl[j % ctrl.size()]);
      if (j >= ctrl.size()) {
        const int ns = nsw(rng);
        std::vector<double> starts{0.0};
        for (int s = 0; s < ns; ++s) starts.push_back(horizon * unit(rng));
        std::sort(starts.begin(), starts.end());
        starts.erase(std::unique(starts.begin(), starts.end()), starts.end());
        std::vector<Vec> vals;
        for (std::size_t s = 0; s < starts.size(); ++s) vals.push_back(ctrl[pick(rng)]);
        u = ControlSignal::piecewise(std::move(starts), std::move(vals));
      }
      Trajectory tr;
      try {
        tr = integrate(p, x0, u, rep.dt, horizon);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::Blowup) throw;
        ++rep.samples;  // escaped: certainly not a zero-cost stay
        continue;
      }
      ++rep.samples;
      const double c = tr.final_cost();
      if (tr.exited) {
        if (c > 0.0) rep.min_positive_cost = std::min(rep.min_positive_cost, c);
        continue;
      }
      if (c < opt.zero_cost) {
        if (rep.violations.size() < opt.max_recorded)
          rep.violations.push_back({x0, u, u.describe(), horizon, c});
      } else {
        rep.min_positive_cost = std::min(rep.min_positive_cost, c);
      }
    }
  }
  return rep;
}

/// Re-simulates a recorded violation; returns the cost (NaN if it exits).
inline double replay_h5(const ControlProblem& p, const H5Violation& v) {
  const Trajectory tr = integrate(p, v.x0, v.signal, v.horizon / 50.0, v.horizon);
  return tr.exited ? std::numeric_limits<double>::quiet_NaN() : tr.final_cost();
}

// ---------------------------------------------------------------------------
// H6

/// A registered escaping input: start state, signal and, optionally, a
/// decreasing majorant m(t) of the running cost along it.
struct EscapeFamily {
  std::string name;
  Vec x0;
  ControlSignal signal;
  std::function<double(double)> majorant;
};

enum class H6Verdict { Divergent, FiniteLimit, Exited };

inline const char* to_string(H6Verdict v) {
  switch (v) {
    case H6Verdict::Divergent: return "DIVERGENT";
    case H6Verdict::FiniteLimit: return "FINITE_LIMIT";
    case H6Verdict::Exited: return "EXITED";
  }
  return "?";
}

struct EscapeResult {
  std::string name;
  std::vector<double> horizons, costs, max_norms;
  double exponent = std::numeric_limits<double>::quiet_NaN();
  double limit = std::numeric_limits<double>::quiet_NaN();
  double limit_error = std::numeric_limits<double>::quiet_NaN();
  double tail_bound = std::numeric_limits<double>::quiet_NaN();
  bool blowup = false;
  double blowup_time = std::numeric_limits<double>::quiet_NaN();
  H6Verdict verdict = H6Verdict::Divergent;
};

struct H6Options {
  double dt_rel = 1e-4;       ///< segment step = dt_rel * max(1, segment start)
  double tail_tol = 1e-4;     ///< relative size of an acceptable remainder
  std::size_t record_every = 100;
  /// Affordability concerns the whole half-line, so by default the family
  /// runs through the target instead of stopping there.
  bool stop_at_target = false;
};

inline std::vector<double> default_h6_horizons() { return {1, 10, 100, 1e3, 1e4, 1e5, 1e6}; }

/// Integral of a decreasing majorant over [T, inf) after s = T / w^2.
inline double majorant_tail(const std::function<double(double)>& m, double T) {
  return integrate_gl([&](double w) { return w > 0.0 ? m(T / (w * w)) * 2.0 * T / (w * w * w) : 0.0; },
                      0.0, 1.0, 64, 8);
}

/// Least-squares slope of log(cost) against log(horizon) over the upper half.
inline double fit_growth_exponent(const std::vector<double>& T, const std::vector<double>& c) {
  const std::size_t n = T.size();
  const std::size_t start = n / 2;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t m = 0;
  for (std::size_t i = start; i < n; ++i) {
    if (!(c[i] > 0.0)) continue;
    const double x = std::log(T[i]), y = std::log(c[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  if (m < 2) return std::numeric_limits<double>::quiet_NaN();
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

inline EscapeResult run_escape_family(const ControlProblem& p, const EscapeFamily& fam,
                                      const std::vector<double>& horizons, const H6Options& opt = {}) {
  for (std::size_t i = 1; i < horizons.size(); ++i)
    if (!(horizons[i] > horizons[i - 1])) throw Error(ErrorCode::Config, "h6: horizons must increase");
  if (horizons.empty() || !(horizons.front() > 0.0)) throw Error(ErrorCode::Config, "h6: need positive horizons");

  EscapeResult r;
  r.name = fam.name;
  Vec x = fam.x0;
  double t = 0.0, c = 0.0, max_norm = norm(x);
  for (double T : horizons) {
    const double dt = opt.dt_rel * std::max(1.0, t);
    IntegrateOptions io;
    io.t0 = t;
    io.cost_offset = c;
    io.record_every = opt.record_every;
    io.stop_at_target = opt.stop_at_target;
    Trajectory tr;
    try {
      tr = integrate(p, x, fam.signal, dt, T - t, io);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Blowup) throw;
      r.blowup = true;
      r.blowup_time = e.value();
      break;
    }
    for (const auto& s : tr.states) max_norm = std::max(max_norm, norm(s));
    if (tr.exited) {
      r.verdict = H6Verdict::Exited;
      return r;
    }
    x = tr.final_state();
    t = tr.final_time();
    c = tr.final_cost();
    r.horizons.push_back(T);
    r.costs.push_back(c);
    r.max_norms.push_back(max_norm);
  }
  if (r.costs.empty()) return r;
  r.exponent = fit_growth_exponent(r.horizons, r.costs);

  const double c_last = r.costs.back();
  const double scale = std::max(1.0, c_last);
  if (fam.majorant && !r.blowup) {
    r.tail_bound = majorant_tail(fam.majorant, r.horizons.back());
    if (std::isfinite(r.tail_bound) && r.tail_bound <= opt.tail_tol * scale) {
      // The true remainder lies in [0, tail]; report the midpoint.
      r.verdict = H6Verdict::FiniteLimit;
      r.limit = c_last + 0.5 * r.tail_bound;
      r.limit_error = 0.5 * r.tail_bound;
      return r;
    }
  }
  // Without a usable majorant: geometric decay of the per-horizon increments.
  const std::size_t n = r.costs.size();
  if (n >= 4) {
    std::vector<double> d;
    for (std::size_t i = n / 2; i < n; ++i) d.push_back(r.costs[i] - r.costs[i - 1]);
    double rho = 0.0;
    bool geometric = true;
    for (std::size_t i = 1; i < d.size(); ++i) {
      if (d[i - 1] <= 0.0) {
        if (d[i] > 0.0) geometric = false;
        continue;
      }
      const double q = d[i] / d[i - 1];
      if (!(q <= 0.5)) geometric = false;
      rho = std::max(rho, q);
    }
    if (geometric) {
      const double rem = std::max(0.0, d.back()) * rho / (1.0 - rho);
      if (rem <= opt.tail_tol * scale || d.back() <= 0.0) {
        r.verdict = H6Verdict::FiniteLimit;
        r.limit = c_last + rem;
        r.limit_error = rem;
        return r;
      }
    }
  }
  r.verdict = H6Verdict::Divergent;
  return r;
}

struct H6Report {
  std::vector<EscapeResult> families;
};

inline H6Report check_h6_escape(const ControlProblem& p, const std::vector<EscapeFamily>& families,
                                const std::vector<double>& horizons, const H6Options& opt = {}) {
  H6Report rep;
  for (const auto& f : families) rep.families.push_back(run_escape_family(p, f, horizons, opt));
  return rep;
}

// ---------------------------------------------------------------------------
// Barbalat-type diagnostic

struct BarbalatResult {
  double integral = 0.0;
  double terminal_abs = 0.0;
  double tolerance = 0.0;   ///< g^-1(eps)
  bool divergent = false;
  bool consistent = false;
};

struct BarbalatOptions {
  double eps = 1e-4;
  double min_horizon = 100.0;
  double tail_share = 0.1;  ///< divergence if the last half holds more than this share
};

/// Samples g for evenness, g(0) = 0 and strict monotonicity on [0, R].
inline void validate_mk(const std::function<double(double)>& g, double R) {
  if (g(0.0) != 0.0) throw Error(ErrorCode::NotMK, "g(0) != 0");
  double prev = 0.0;
  for (int i = 1; i <= 1000; ++i) {
    const double s = R * i / 1000.0;
    const double v = g(s);
    if (!(v > prev)) throw Error(ErrorCode::NotMK, "g is not strictly increasing on [0, inf)");
    if (std::abs(g(-s) - v) > 1e-12 * std::max(1.0, std::abs(v)))
      throw Error(ErrorCode::NotMK, "g is not even");
    prev = v;
  }
}

/// Integral of g(phi) by the trapezoid rule, |phi(T)|, and whether a finite
/// integral comes with a small terminal value. Runs that ended by entering
/// the target are accepted below the minimum horizon.
inline BarbalatResult barbalat_diagnostic(const std::vector<double>& t, const std::vector<double>& phi,
                                          const std::function<double(double)>& g, bool exited = false,
                                          const BarbalatOptions& opt = {}) {
  if (t.size() != phi.size() || t.size() < 2) throw Error(ErrorCode::Config, "barbalat: need >= 2 samples");
  const double T = t.back() - t.front();
  if (!exited && T < opt.min_horizon) throw Error(ErrorCode::Config, "barbalat: horizon shorter than the minimum");
  double R = 0.0;
  for (double v : phi) R = std::max(R, std::abs(v));
  validate_mk(g, std::max(1.0, 2.0 * R));

  BarbalatResult r;
  const double half = t.front() + 0.5 * T;
  double tail = 0.0;
  for (std::size_t i = 1; i < t.size(); ++i) {
    const double piece = 0.5 * (g(phi[i - 1]) + g(phi[i])) * (t[i] - t[i - 1]);
    r.integral += piece;
    if (t[i] > half) tail += piece;
  }
  r.terminal_abs = std::abs(phi.back());
  r.divergent = !std::isfinite(r.integral) || tail > opt.tail_share * r.integral;
  // g^-1(eps) by bisection on [0, hi].
  double lo = 0.0, hi = 1.0;
  while (g(hi) < opt.eps && hi < 1e300) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) < opt.eps ? lo : hi) = mid;
  }
  r.tolerance = hi;
  r.consistent = r.divergent || r.terminal_abs <= r.tolerance;
  return r;
}

inline BarbalatResult barbalat_diagnostic(const Trajectory& tr, std::size_t coordinate,
                                          const std::function<double(double)>& g,
                                          const BarbalatOptions& opt = {}) {
  std::vector<double> phi;
  phi.reserve(tr.size());
  for (const auto& s : tr.states) phi.push_back(s[coordinate]);
  return barbalat_diagnostic(tr.times, phi, g, tr.exited, opt);
}

}  // namespace exitctl
