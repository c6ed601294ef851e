#pragma once

// Grid solvers for the exit-time value function: semi-Lagrangian value
// iteration on the dynamic programming principle, and first-order fast
// marching for isotropic eikonal equations.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <queue>
#include <vector>

#include "exitctl/error.hpp"
#include "exitctl/grid.hpp"
#include "exitctl/problem.hpp"
#include "exitctl/vec.hpp"

namespace exitctl {

inline constexpr double kLarge = 1e6;

enum class BoundaryMode { OutflowLarge, OscInfinite };

struct SolverParams {
  double tolerance = 1e-9;   ///< sup-norm update threshold
  int max_sweeps = 0;        ///< 0: 10 * max nodes per axis
  BoundaryMode boundary_mode = BoundaryMode::OutflowLarge;
  double large = kLarge;     ///< sentinel for OutflowLarge
  double eps0 = 1e-12;       ///< floor in the time-step denominator
  double target_tolerance = -1.0;  ///< rasterization radius; < 0: h_min / 2
  bool jacobi = false;
  std::size_t cache_bytes = std::size_t{512} << 20;  ///< arc cache budget
  /// Called after every sweep with the sweep number and current values.
  std::function<void(int, const std::vector<double>&)> on_sweep;
};

namespace detail {

/// Node index for position k of the sweep with the given axis-reversal mask.
inline std::size_t sweep_index(const Grid& g, std::size_t k, unsigned mask) {
  if (mask == 0) return k;
  auto m = g.multi(k);
  for (std::size_t i = 0; i < g.dim(); ++i)
    if ((mask >> i) & 1u) m[i] = g.nodes(i) - 1 - m[i];
  return g.flat(m);
}

}  // namespace detail

/// Rasterizes the target: nodes within `tol` of the target set.
inline std::vector<NodeRole> rasterize_target(const TargetSet& target, const Grid& g, double tol) {
  std::vector<NodeRole> roles(g.size(), NodeRole::Interior);
  for (std::size_t k = 0; k < g.size(); ++k)
    if (target.distance(g.point(k)) <= tol) roles[k] = NodeRole::Target;
  return roles;
}

/// Fixed point of v(x) = min_a { dt(x) l(x,a) + I[v](x + dt(x) f(x,a)) },
/// dt(x) = h_min / (max_a |f(x,a)| + eps0), by Gauss-Seidel sweeps cycling
/// through the 2^dim axis orderings.
inline ValueField solve_value_iteration(const ControlProblem& p, const Grid& g,
                                        const SolverParams& prm = {}) {
  if (p.state_dim != g.dim()) throw Error(ErrorCode::DimensionMismatch, "solver: grid and problem dimensions differ");
  if (!(prm.tolerance > 0.0)) throw Error(ErrorCode::Config, "solver: tolerance must be positive");
  if (prm.max_sweeps < 0) throw Error(ErrorCode::Config, "solver: max_sweeps must be >= 1");

  const double inf = std::numeric_limits<double>::infinity();
  const bool osc = prm.boundary_mode == BoundaryMode::OscInfinite;
  const double sentinel = osc ? inf : prm.large;
  const double hmin = g.h_min();
  const double rtol = prm.target_tolerance < 0.0 ? 0.5 * hmin : prm.target_tolerance;
  int max_sweeps = prm.max_sweeps;
  if (max_sweeps == 0) max_sweeps = 10 * *std::max_element(g.nodes().begin(), g.nodes().end());

  ValueField w(g, sentinel);
  w.roles = rasterize_target(p.target, g, rtol);
  bool any_target = false;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (w.roles[k] == NodeRole::Target) {
      any_target = true;
      w.values[k] = p.exit_value(g.point(k));
    }
  }
  if (!any_target) throw Error(ErrorCode::EmptyTarget, "no grid node rasterizes to the target");

  const auto& ctrl = p.controls.enumerate();
  const std::size_t na = ctrl.size();
  const std::size_t dim = g.dim();
  constexpr std::uint32_t kOff = UINT32_MAX;

  // One arc per (node, control): step cost, lower-corner index of the foot
  // cell (kOff if the foot leaves the grid) and the in-cell fractions.
  struct Arc {
    double cost;
    std::uint32_t base;
  };
  std::vector<double> fbuf(na * dim);
  auto build_arcs = [&](std::size_t k, Arc* out, double* frac) {
    const Vec x = g.point(k);
    double fmax = 0.0;
    for (std::size_t a = 0; a < na; ++a) {
      const Vec f = eval_dynamics(p, x, ctrl[a]);
      std::copy(f.begin(), f.end(), fbuf.begin() + a * dim);
      fmax = std::max(fmax, norm(f));
    }
    const double dt = hmin / (fmax + prm.eps0);
    bool any_inside = false;
    for (std::size_t a = 0; a < na; ++a) {
      out[a].cost = dt * eval_lagrangian(p, x, ctrl[a]);
      Vec foot = x;
      for (std::size_t i = 0; i < dim; ++i) foot[i] += dt * fbuf[a * dim + i];
      if (!g.inside(foot)) {
        out[a].base = kOff;
        continue;
      }
      any_inside = true;
      std::size_t base = 0;
      for (std::size_t i = 0; i < dim; ++i) {
        const double s = (foot[i] - g.lower()[i]) / g.h(i);
        const int c = std::clamp(static_cast<int>(std::floor(s)), 0, g.nodes(i) - 2);
        base += static_cast<std::size_t>(c) * g.stride(i);
        frac[a * dim + i] = std::clamp(s - c, 0.0, 1.0);
      }
      out[a].base = static_cast<std::uint32_t>(base);
    }
    return any_inside;
  };

  if (g.size() >= kOff) throw Error(ErrorCode::Config, "solver: grid too large");
  std::vector<std::size_t> interior;
  std::vector<Arc> scratch_arc(na);
  std::vector<double> scratch_frac(na * dim);
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (w.roles[k] == NodeRole::Target) continue;
    if (build_arcs(k, scratch_arc.data(), scratch_frac.data()))
      interior.push_back(k);
    else
      w.roles[k] = NodeRole::Outflow;
  }
  // Cache arcs when they fit in the memory budget, else rebuild per visit.
  const std::size_t arc_bytes = sizeof(Arc) + dim * sizeof(double);
  const bool cached = interior.size() * na * arc_bytes <= prm.cache_bytes;
  std::vector<Arc> arcs;
  std::vector<double> fracs;
  if (cached) {
    arcs.resize(interior.size() * na);
    fracs.resize(interior.size() * na * dim);
    for (std::size_t i = 0; i < interior.size(); ++i)
      build_arcs(interior[i], arcs.data() + i * na, fracs.data() + i * na * dim);
  }
  std::vector<std::size_t> slot(g.size(), SIZE_MAX);
  for (std::size_t i = 0; i < interior.size(); ++i) slot[interior[i]] = i;

  const std::size_t corners = std::size_t{1} << dim;
  auto candidate = [&](std::size_t i, const std::vector<double>& v) {
    const std::size_t k = interior[i];
    const Arc* arc = arcs.data() + i * na;
    const double* frac = fracs.data() + i * na * dim;
    if (!cached) {
      build_arcs(k, scratch_arc.data(), scratch_frac.data());
      arc = scratch_arc.data();
      frac = scratch_frac.data();
    }
    double best = inf;
    for (std::size_t a = 0; a < na; ++a) {
      double c;
      if (arc[a].base == kOff) {
        c = arc[a].cost + sentinel;
      } else {
        double self = 0.0, rest = 0.0;
        for (std::size_t cn = 0; cn < corners; ++cn) {
          double wgt = 1.0;
          std::size_t idx = arc[a].base;
          for (std::size_t d = 0; d < dim; ++d) {
            const double f = frac[a * dim + d];
            if ((cn >> d) & 1u) {
              wgt *= f;
              idx += g.stride(d);
            } else {
              wgt *= 1.0 - f;
            }
          }
          if (wgt == 0.0) continue;
          if (idx == k)
            self += wgt;
          else
            rest += wgt * v[idx];
        }
        if (self >= 1.0 - 1e-12) {
          // Foot point on the node itself: staying costs forever unless free.
          c = arc[a].cost > 0.0 ? sentinel : v[k];
        } else {
          c = (arc[a].cost + rest) / (1.0 - self);
        }
      }
      best = std::min(best, c);
    }
    if (!osc) best = std::min(best, prm.large);
    return best;
  };

  const unsigned orderings = 1u << g.dim();
  std::vector<double> next;
  for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
    double delta = 0.0;
    auto track = [&](double before, double after) {
      if (before == after) return;
      const double d = std::abs(after - before);
      delta = std::max(delta, std::isnan(d) ? inf : d);
    };
    if (prm.jacobi) {
      next = w.values;
      for (std::size_t i = 0; i < interior.size(); ++i) {
        next[interior[i]] = candidate(i, w.values);
        track(w.values[interior[i]], next[interior[i]]);
      }
      w.values.swap(next);
    } else {
      const unsigned mask = static_cast<unsigned>(sweep - 1) % orderings;
      for (std::size_t pos = 0; pos < g.size(); ++pos) {
        const std::size_t k = detail::sweep_index(g, pos, mask);
        const std::size_t i = slot[k];
        if (i == SIZE_MAX) continue;
        const double c = candidate(i, w.values);
        track(w.values[k], c);
        w.values[k] = c;
      }
    }
    w.sweeps = static_cast<std::size_t>(sweep);
    w.last_update = delta;
    if (prm.on_sweep) prm.on_sweep(sweep, w.values);
    if (delta < prm.tolerance) return w;
  }
  throw Error(ErrorCode::NotConverged,
              "value iteration did not converge in " + std::to_string(max_sweeps) + " sweeps",
              w.last_update, max_sweeps);
}

/// Fast marching for |Dv| = rho(x) with v = 0 on the target.
inline ValueField solve_fast_marching(const std::function<double(const Vec&)>& rho,
                                      const TargetSet& target, const Grid& g,
                                      double target_tolerance = -1.0) {
  const double inf = std::numeric_limits<double>::infinity();
  const double rtol = target_tolerance < 0.0 ? 0.5 * g.h_min() : target_tolerance;
  ValueField w(g, inf);
  w.roles = rasterize_target(target, g, rtol);
  std::vector<double> r(g.size(), 0.0);
  bool any_target = false;
  for (std::size_t k = 0; k < g.size(); ++k) {
    r[k] = rho(g.point(k));
    if (w.roles[k] == NodeRole::Target) {
      any_target = true;
      continue;
    }
    if (!(r[k] > 0.0))
      throw Error(ErrorCode::NonpositiveRhs, "fast marching: rho <= 0 outside the target",
                  static_cast<double>(k), static_cast<long>(k));
  }
  if (!any_target) throw Error(ErrorCode::EmptyTarget, "no grid node rasterizes to the target");

  enum : unsigned char { Far, Trial, Known };
  std::vector<unsigned char> state(g.size(), Far);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;

  auto update = [&](std::size_t k) {
    const auto m = g.multi(k);
    std::array<double, kMaxDim> a{}, hh{}, ra{};
    std::size_t n = 0;
    for (std::size_t i = 0; i < g.dim(); ++i) {
      double best = inf, rb = 0.0;
      if (m[i] > 0 && state[k - g.stride(i)] == Known) {
        best = w.values[k - g.stride(i)];
        rb = r[k - g.stride(i)];
      }
      if (m[i] + 1 < g.nodes(i) && state[k + g.stride(i)] == Known && w.values[k + g.stride(i)] < best) {
        best = w.values[k + g.stride(i)];
        rb = r[k + g.stride(i)];
      }
      if (best < inf) {
        a[n] = best;
        hh[n] = g.h(i);
        ra[n] = std::max(rb, 0.0);
        ++n;
      }
    }
    // Sort the upwind values and grow the active set while the solution
    // stays above the next neighbour value.
    std::array<std::size_t, kMaxDim> ord{};
    for (std::size_t i = 0; i < n; ++i) ord[i] = i;
    std::sort(ord.begin(), ord.begin() + n, [&](auto x, auto y) { return a[x] < a[y]; });
    // rho is averaged between the node and its active upwind neighbours,
    // which is the trapezoid rule along a one-dimensional characteristic.
    double u = inf;
    double sa = 0.0, sb = 0.0, sc = 0.0, rsum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double ai = a[ord[j]], ih2 = 1.0 / (hh[ord[j]] * hh[ord[j]]);
      if (u <= ai) break;
      sa += ih2;
      sb += -2.0 * ai * ih2;
      sc += ai * ai * ih2;
      rsum += ra[ord[j]];
      const double re = 0.5 * (r[k] + rsum / double(j + 1));
      const double disc = sb * sb - 4.0 * sa * (sc - re * re);
      u = (-sb + std::sqrt(std::max(disc, 0.0))) / (2.0 * sa);
    }
    return u;
  };

  for (std::size_t k = 0; k < g.size(); ++k) {
    if (w.roles[k] != NodeRole::Target) continue;
    w.values[k] = 0.0;
    state[k] = Known;
  }
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (state[k] != Known) continue;
    const auto m = g.multi(k);
    for (std::size_t i = 0; i < g.dim(); ++i) {
      for (int s : {-1, 1}) {
        const int mi = m[i] + s;
        if (mi < 0 || mi >= g.nodes(i)) continue;
        const std::size_t nb = s < 0 ? k - g.stride(i) : k + g.stride(i);
        if (state[nb] == Known) continue;
        const double u = update(nb);
        if (u < w.values[nb]) {
          w.values[nb] = u;
          state[nb] = Trial;
          heap.emplace(u, nb);
        }
      }
    }
  }
  while (!heap.empty()) {
    const auto [val, k] = heap.top();
    heap.pop();
    if (state[k] == Known || val > w.values[k]) continue;
    state[k] = Known;
    const auto m = g.multi(k);
    for (std::size_t i = 0; i < g.dim(); ++i) {
      for (int s : {-1, 1}) {
        const int mi = m[i] + s;
        if (mi < 0 || mi >= g.nodes(i)) continue;
        const std::size_t nb = s < 0 ? k - g.stride(i) : k + g.stride(i);
        if (state[nb] == Known) continue;
        const double u = update(nb);
        if (u < w.values[nb]) {
          w.values[nb] = u;
          state[nb] = Trial;
          heap.emplace(u, nb);
        }
      }
    }
  }
  return w;
}

}  // namespace exitctl
