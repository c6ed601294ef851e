#pragma once

// Discrete certification of candidate fields: upwind HJB residuals, the
// side condition, sub/superdifferential probes and trajectory inequalities.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "exitctl/error.hpp"
#include "exitctl/grid.hpp"
#include "exitctl/integrate.hpp"
#include "exitctl/problem.hpp"
#include "exitctl/signal.hpp"
#include "exitctl/vec.hpp"

namespace exitctl {

struct SideCondition {
  double threshold = 0.0;
  double min_value = std::numeric_limits<double>::infinity();
  std::size_t min_index = 0;
  bool bounded_below_pass = false;
  double target_max_abs = 0.0;
  std::size_t target_worst_index = 0;
  std::size_t target_nodes = 0;
  bool target_pass = false;
};

struct ResidualReport {
  std::vector<double> residual;   ///< NaN where not evaluated
  double max_abs = 0.0;
  double mean_abs = 0.0;
  std::size_t counted = 0;
  std::size_t worst_index = 0;
  Vec worst_point;
  double h = 0.0;
  double lipschitz = 0.0;
  SideCondition side;
};

struct ResidualOptions {
  int order = 1;                 ///< one-sided difference order, 1..4
  double target_band = 0.0;      ///< nodes closer than this to the target are left out of the summary
  double kink_ratio = 0.5;       ///< high order only where second differences are this small
  /// Optional box restricting the summary and the Lipschitz estimate; the
  /// stencils still read the whole field. Empty means the whole grid.
  Vec window_lower, window_upper;
};

namespace detail {

// One-sided first-derivative weights, forward direction, orders 1..4.
inline constexpr std::array<std::array<double, 5>, 4> kOneSided{{
    {-1.0, 1.0, 0.0, 0.0, 0.0},
    {-1.5, 2.0, -0.5, 0.0, 0.0},
    {-11.0 / 6.0, 3.0, -1.5, 1.0 / 3.0, 0.0},
    {-25.0 / 12.0, 4.0, -3.0, 4.0 / 3.0, -0.25},
}};

inline bool usable(const ValueField& w, std::size_t k) {
  return w.roles[k] != NodeRole::Outflow && std::isfinite(w.values[k]);
}

struct OneSided {
  bool ok = false;       ///< at least the first-order stencil is usable
  bool kinked = false;   ///< the high-order stencil straddles a kink
  int order = 0;
  double high = 0.0;     ///< estimate at `order`
  double first = 0.0;    ///< first-order estimate
};

/// One-sided derivative along `axis` in direction `dir` (+1 forward,
/// -1 backward), shortened near the boundary or unusable nodes.
inline OneSided one_sided(const ValueField& w, std::size_t k, const std::array<int, kMaxDim>& m,
                          std::size_t axis, int dir, int order, double kink_ratio) {
  const Grid& g = w.grid;
  const double h = g.h(axis);
  std::array<double, 5> vals{};
  int avail = 0;  // number of usable steps along the ray
  for (int j = 0; j <= order; ++j) {
    const int mi = m[axis] + dir * j;
    if (mi < 0 || mi >= g.nodes(axis)) break;
    const std::size_t idx = static_cast<std::size_t>(static_cast<long>(k) + dir * j * static_cast<long>(g.stride(axis)));
    if (!usable(w, idx)) break;
    vals[j] = w.values[idx];
    avail = j;
  }
  OneSided r;
  if (avail < 1) return r;
  r.ok = true;
  r.order = std::min(order, avail);
  r.first = dir * (vals[1] - vals[0]) / h;
  if (r.order > 1) {
    // A kink shows up as a jump in first differences. With three second
    // differences (order 4) it must also break their linear trend, which
    // separates it from a smooth stretch where w' happens to be small.
    const int q = r.order;
    std::array<double, 3> dd{};
    double dmax = 0.0, ddmax = 0.0;
    for (int j = 0; j < q; ++j) dmax = std::max(dmax, std::abs(vals[j + 1] - vals[j]));
    for (int j = 0; j + 1 < q; ++j) {
      dd[j] = vals[j + 2] - 2.0 * vals[j + 1] + vals[j];
      ddmax = std::max(ddmax, std::abs(dd[j]));
    }
    const double d4 = q >= 4 ? std::abs(dd[2] - 2.0 * dd[1] + dd[0]) : 0.0;
    r.kinked = ddmax > kink_ratio * dmax && (q < 4 || d4 > kink_ratio * ddmax);
  }
  double s = 0.0;
  for (int j = 0; j <= r.order; ++j) s += kOneSided[r.order - 1][j] * vals[j];
  r.high = dir * s / h;
  return r;
}

/// Derivative used on the `ahead` side. A kinked stencil has its kink
/// strictly ahead of the node, so w is differentiable at the node and a
/// clean high-order stencil on the other side gives the same derivative;
/// with no clean stencil the first-order upwind difference is used.
inline double pick_derivative(const OneSided& ahead, const OneSided& behind) {
  if (ahead.order <= 1) return ahead.first;
  if (!ahead.kinked) return ahead.high;
  if (behind.ok && behind.order > 1 && !behind.kinked) return behind.high;
  return ahead.first;
}

}  // namespace detail

namespace detail {

inline bool in_window(const Vec& x, const Vec& lo, const Vec& hi) {
  if (lo.size() == 0) return true;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] < lo[i] - 1e-12 || x[i] > hi[i] + 1e-12) return false;
  return true;
}

}  // namespace detail

/// Max over finite, non-outflow neighbour pairs of |dw| / h, optionally
/// restricted to pairs whose first node lies in [lo, hi].
inline double lipschitz_estimate(const ValueField& w, const Vec& lo = {}, const Vec& hi = {}) {
  const Grid& g = w.grid;
  double lip = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!detail::usable(w, k) || !detail::in_window(g.point(k), lo, hi)) continue;
    const auto m = g.multi(k);
    for (std::size_t i = 0; i < g.dim(); ++i) {
      if (m[i] + 1 >= g.nodes(i)) continue;
      const std::size_t n = k + g.stride(i);
      if (!detail::usable(w, n)) continue;
      lip = std::max(lip, std::abs(w.values[n] - w.values[k]) / g.h(i));
    }
  }
  return lip;
}

/// Tags nodes within `tol` of the target as TARGET, others INTERIOR.
inline void assign_target_roles(ValueField& w, const TargetSet& target, double tol) {
  for (std::size_t k = 0; k < w.grid.size(); ++k)
    w.roles[k] = target.distance(w.grid.point(k)) <= tol ? NodeRole::Target : NodeRole::Interior;
}

/// Bounded below at `threshold` and w == g on the TARGET nodes.
inline SideCondition check_side_condition(const ValueField& w, double threshold,
                                          const ScalarFieldFn& g = {}, double target_tol = 1e-9) {
  SideCondition sc;
  sc.threshold = threshold;
  for (std::size_t k = 0; k < w.grid.size(); ++k) {
    const double v = w.values[k];
    if ((v < sc.min_value || std::isnan(v)) && !std::isnan(sc.min_value)) {
      sc.min_value = v;
      sc.min_index = k;
    }
    if (w.roles[k] == NodeRole::Target) {
      ++sc.target_nodes;
      const double err = std::abs(v - (g ? g(w.grid.point(k)) : 0.0));
      if (!(err <= sc.target_max_abs)) {
        sc.target_max_abs = err;
        sc.target_worst_index = k;
      }
    }
  }
  sc.bounded_below_pass = sc.min_value >= threshold;
  sc.target_pass = sc.target_max_abs <= target_tol;
  return sc;
}

/// r(x) = max_a { -f(x,a) . Dw(x) - l(x,a) } with the upwind one-sided
/// difference per axis chosen by the sign of f_i. Evaluated at INTERIOR
/// nodes; controls whose stencil is unusable are skipped.
inline ResidualReport hjb_residual(const ValueField& w, const ControlProblem& p,
                                   const ResidualOptions& opt = {}) {
  const Grid& g = w.grid;
  if (g.dim() != p.state_dim) throw Error(ErrorCode::DimensionMismatch, "residual: field and problem dimensions differ");
  if (opt.order < 1 || opt.order > 4) throw Error(ErrorCode::Config, "residual: order must be 1..4");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  ResidualReport rep;
  rep.residual.assign(g.size(), nan);
  rep.h = g.h_max();
  if (opt.window_lower.size() != opt.window_upper.size() ||
      (opt.window_lower.size() != 0 && opt.window_lower.size() != g.dim()))
    throw Error(ErrorCode::DimensionMismatch, "residual: window and grid dimensions differ");
  rep.lipschitz = lipschitz_estimate(w, opt.window_lower, opt.window_upper);
  const auto& ctrl = p.controls.enumerate();

  for (std::size_t k = 0; k < g.size(); ++k) {
    if (w.roles[k] != NodeRole::Interior || !std::isfinite(w.values[k])) continue;
    const Vec x = g.point(k);
    const auto m = g.multi(k);
    // Both one-sided derivatives per axis, resolved once per node.
    std::array<double, kMaxDim> dp{}, dm{};
    std::array<bool, kMaxDim> okp{}, okm{};
    for (std::size_t i = 0; i < g.dim(); ++i) {
      const auto fw = detail::one_sided(w, k, m, i, +1, opt.order, opt.kink_ratio);
      const auto bw = detail::one_sided(w, k, m, i, -1, opt.order, opt.kink_ratio);
      okp[i] = fw.ok;
      okm[i] = bw.ok;
      if (fw.ok) dp[i] = detail::pick_derivative(fw, bw);
      if (bw.ok) dm[i] = detail::pick_derivative(bw, fw);
    }
    double best = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (const auto& a : ctrl) {
      const Vec f = eval_dynamics(p, x, a);
      double dir = 0.0;
      bool ok = true;
      for (std::size_t i = 0; i < g.dim() && ok; ++i) {
        if (f[i] > 0.0) {
          ok = okp[i];
          dir += f[i] * dp[i];
        } else if (f[i] < 0.0) {
          ok = okm[i];
          dir += f[i] * dm[i];
        }
      }
      if (!ok) continue;
      any = true;
      best = std::max(best, -dir - eval_lagrangian(p, x, a));
    }
    if (any) rep.residual[k] = best;
  }

  double sum = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double r = rep.residual[k];
    if (std::isnan(r)) continue;
    if (opt.target_band > 0.0 && p.target.distance(g.point(k)) < opt.target_band) continue;
    if (!detail::in_window(g.point(k), opt.window_lower, opt.window_upper)) continue;
    const double a = std::abs(r);
    sum += a;
    ++rep.counted;
    if (a > rep.max_abs || rep.counted == 1) {
      rep.max_abs = a;
      rep.worst_index = k;
    }
  }
  rep.mean_abs = rep.counted ? sum / rep.counted : 0.0;
  rep.worst_point = g.point(rep.worst_index);
  return rep;
}

/// Per-node CSV: "x1..xN,residual,role".
inline void write_residual_csv(std::ostream& os, const ValueField& w, const ResidualReport& rep) {
  const Grid& g = w.grid;
  os << "# ";
  for (std::size_t i = 0; i < g.dim(); ++i) os << "x" << (i + 1) << ",";
  os << "residual,role\n";
  char buf[40];
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Vec x = g.point(k);
    for (std::size_t i = 0; i < g.dim(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g,", x[i]);
      os << buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g,", rep.residual[k]);
    os << buf << to_string(w.roles[k]) << '\n';
  }
}

/// "PASS max_r=... min_w=... target_err=..."
inline std::string summary_line(const ResidualReport& rep, double residual_tol) {
  const bool pass = rep.max_abs <= residual_tol && rep.side.bounded_below_pass && rep.side.target_pass;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%s max_r=%.6g min_w=%.6g target_err=%.6g", pass ? "PASS" : "FAIL",
                rep.max_abs, rep.side.min_value, rep.side.target_max_abs);
  return buf;
}

// ---------------------------------------------------------------------------
// Pointwise probe of D+w and D-w

struct ProbeResult {
  bool sub_ok = true;     ///< H <= tol on every superdifferential candidate
  bool super_ok = true;   ///< H >= -tol on every subdifferential candidate
  bool smooth = false;
  double tol = 0.0;
  double local_lipschitz = 0.0;
  std::vector<Vec> superdifferential;  ///< D+ candidates
  std::vector<Vec> subdifferential;    ///< D- candidates
  double max_h_super = -std::numeric_limits<double>::infinity();  ///< max H over D+
  double min_h_sub = std::numeric_limits<double>::infinity();     ///< min H over D-
};

using HamiltonianFn = std::function<double(const Vec& x, const Vec& p)>;

/// H(x, p) = max over the enumerated controls of -f . p - l.
inline HamiltonianFn problem_hamiltonian(const ControlProblem& pr) {
  return [&pr](const Vec& x, const Vec& q) {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& a : pr.controls.enumerate())
      best = std::max(best, -dot(eval_dynamics(pr, x, a), q) - eval_lagrangian(pr, x, a));
    return best;
  };
}

struct ProbeOptions {
  int lattice = 9;           ///< candidate lattice points per axis
  double tol_factor = 10.0;  ///< tol = tol_factor * h * local Lipschitz
};

/// Candidates come from a lattice over the box spanned by the axis-wise
/// forward and backward slopes at scale probe_radius, filtered by the
/// defining one-sided inequalities on the probe neighbourhood.
inline ProbeResult pointwise_viscosity_probe(const ValueField& w, const HamiltonianFn& H, std::size_t node,
                                             double probe_radius, const ProbeOptions& opt = {}) {
  const Grid& g = w.grid;
  const std::size_t d = g.dim();
  const auto m = g.multi(node);
  std::array<int, kMaxDim> kk{};
  for (std::size_t i = 0; i < d; ++i) {
    kk[i] = std::max(1, static_cast<int>(std::lround(probe_radius / g.h(i))));
    if (m[i] - kk[i] < 0 || m[i] + kk[i] >= g.nodes(i))
      throw Error(ErrorCode::ProbeOutOfGrid, "probe neighbourhood leaves the grid");
  }
  const Vec x = g.point(node);
  const double w0 = w.values[node];
  ProbeResult r;
  Vec lo(d), hi(d), central(d);
  double lip = 0.0;
  bool smooth = true;
  for (std::size_t i = 0; i < d; ++i) {
    const double step = kk[i] * g.h(i);
    const double vp = w.values[node + kk[i] * g.stride(i)];
    const double vm = w.values[node - kk[i] * g.stride(i)];
    const double sp = (vp - w0) / step, sm = (w0 - vm) / step;
    lo[i] = std::min(sp, sm);
    hi[i] = std::max(sp, sm);
    central[i] = 0.5 * (sp + sm);
    lip = std::max({lip, std::abs(sp), std::abs(sm)});
  }
  r.local_lipschitz = lip;
  r.tol = opt.tol_factor * g.h_max() * lip;
  for (std::size_t i = 0; i < d; ++i)
    if (hi[i] - lo[i] > r.tol) smooth = false;
  r.smooth = smooth;

  if (smooth) {
    r.superdifferential = {central};
    r.subdifferential = {central};
  } else {
    // Neighbourhood nodes: the full (2k+1)^d block.
    std::vector<std::pair<Vec, double>> nb;
    std::array<int, kMaxDim> off{};
    for (std::size_t i = 0; i < d; ++i) off[i] = -kk[i];
    while (true) {
      bool zero = true;
      std::array<int, kMaxDim> mm = m;
      for (std::size_t i = 0; i < d; ++i) {
        mm[i] += off[i];
        zero = zero && off[i] == 0;
      }
      if (!zero) {
        const std::size_t idx = g.flat(mm);
        nb.emplace_back(g.point(idx) - x, w.values[idx] - w0);
      }
      std::size_t ax = d;
      bool done = true;
      while (ax-- > 0) {
        if (++off[ax] <= kk[ax]) {
          done = false;
          break;
        }
        off[ax] = -kk[ax];
      }
      if (done) break;
    }
    std::vector<Vec> cands{central};
    const int L = std::max(2, opt.lattice);
    std::vector<int> idx(d, 0);
    while (true) {
      Vec q(d);
      for (std::size_t i = 0; i < d; ++i) q[i] = lo[i] + (hi[i] - lo[i]) * idx[i] / (L - 1);
      cands.push_back(q);
      std::size_t ax = d;
      bool done = true;
      while (ax-- > 0) {
        if (++idx[ax] < L) {
          done = false;
          break;
        }
        idx[ax] = 0;
      }
      if (done) break;
    }
    for (const auto& q : cands) {
      bool in_sub = true, in_super = true;
      for (const auto& [dy, dw] : nb) {
        const double e = dw - dot(q, dy);
        const double s = r.tol * norm(dy);
        if (e < -s) in_sub = false;
        if (e > s) in_super = false;
      }
      if (in_sub) r.subdifferential.push_back(q);
      if (in_super) r.superdifferential.push_back(q);
    }
  }
  for (const auto& q : r.superdifferential) r.max_h_super = std::max(r.max_h_super, H(x, q));
  for (const auto& q : r.subdifferential) r.min_h_sub = std::min(r.min_h_sub, H(x, q));
  r.sub_ok = r.superdifferential.empty() || r.max_h_super <= r.tol;
  r.super_ok = r.subdifferential.empty() || r.min_h_sub >= -r.tol;
  return r;
}

inline ProbeResult pointwise_viscosity_probe(const ValueField& w, const ControlProblem& p, std::size_t node,
                                             double probe_radius, const ProbeOptions& opt = {}) {
  return pointwise_viscosity_probe(w, problem_hamiltonian(p), node, probe_radius, opt);
}

// ---------------------------------------------------------------------------
// Trajectory inequalities

struct TrajectoryCheck {
  double w0 = 0.0;               ///< w(x0)
  double sub_rhs = 0.0;       ///< cost along u plus w at the end point
  double sub_slack = 0.0;     ///< rhs - w0, must be >= -tol
  bool sub_pass = false;
  double super_min = 0.0;       ///< min over the sampled family
  double super_slack = 0.0;     ///< w0 - min, must be >= -tol
  bool super_pass = false;
  std::size_t family_size = 0;
  int family_pieces = 0;
  bool pass = false;
};

struct TrajectoryCheckOptions {
  double tol = 5e-3;
  double dt = 0.0;            ///< 0: t / 400
  int max_switches = 3;       ///< refinement knob for the supersolution family
  std::size_t budget = 20000; ///< cap on the family size
};

namespace detail {

/// Cost plus terminal value along u on [0, t]; nullopt-like NaN if the
/// run leaves the grid.
inline double run_value(const ValueField& w, const ControlProblem& p, const Vec& x0, const ControlSignal& u,
                        double t, double dt, bool throw_out) {
  const Trajectory tr = integrate(p, x0, u, dt, t);
  for (const auto& s : tr.states) {
    if (!w.grid.inside(s)) {
      if (throw_out) throw Error(ErrorCode::OutOfGrid, "trajectory leaves the grid before the horizon");
      return std::numeric_limits<double>::quiet_NaN();
    }
  }
  const double terminal = tr.exited ? p.exit_value(tr.final_state()) : interpolate(w, tr.final_state());
  return tr.final_cost() + terminal;
}

}  // namespace detail

/// w(x0) <= cost(u) + w(y(t)) along the given signal, and
/// w(x0) >= min over piecewise-constant signals (uniform switch times,
/// values from the enumerated controls) of the same expression.
inline TrajectoryCheck trajectory_inequality_check(const ValueField& w, const ControlProblem& p, const Vec& x0,
                                                   const ControlSignal& u, double t,
                                                   const TrajectoryCheckOptions& opt = {}) {
  if (!(t > 0.0)) throw Error(ErrorCode::Config, "trajectory check: horizon must be positive");
  const double dt = opt.dt > 0.0 ? opt.dt : t / 400.0;
  TrajectoryCheck r;
  r.w0 = interpolate(w, x0);
  r.sub_rhs = detail::run_value(w, p, x0, u, t, dt, true);
  r.sub_slack = r.sub_rhs - r.w0;
  r.sub_pass = r.sub_slack >= -opt.tol;

  const auto& ctrl = p.controls.enumerate();
  const std::size_t na = ctrl.size();
  int pieces = std::max(1, opt.max_switches + 1);
  auto family = [&](int n) {
    double s = 1.0;
    for (int i = 0; i < n; ++i) s *= static_cast<double>(na);
    return s;
  };
  while (pieces > 1 && family(pieces) > static_cast<double>(opt.budget)) --pieces;
  r.family_pieces = pieces;

  double best = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> pick(static_cast<std::size_t>(pieces), 0);
  while (true) {
    std::vector<double> starts;
    std::vector<Vec> vals;
    for (int j = 0; j < pieces; ++j) {
      const Vec& a = ctrl[pick[static_cast<std::size_t>(j)]];
      if (!vals.empty() && vals.back() == a) continue;
      starts.push_back(t * j / pieces);
      vals.push_back(a);
    }
    const double v = detail::run_value(w, p, x0, ControlSignal::piecewise(starts, vals), t, dt, false);
    ++r.family_size;
    if (std::isfinite(v)) best = std::min(best, v);
    std::size_t ax = pick.size();
    bool done = true;
    while (ax-- > 0) {
      if (++pick[ax] < na) {
        done = false;
        break;
      }
      pick[ax] = 0;
    }
    if (done) break;
  }
  r.super_min = best;
  r.super_slack = r.w0 - best;
  r.super_pass = std::isfinite(best) && r.super_slack >= -opt.tol;
  r.pass = r.sub_pass && r.super_pass;
  return r;
}

}  // namespace exitctl
