#pragma once

// Exit-time control problem data: dynamics, running cost, target set,
// compact control set and optional exit cost.

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "exitctl/error.hpp"
#include "exitctl/vec.hpp"

namespace exitctl {

using DynamicsFn = std::function<Vec(const Vec& x, const Vec& a)>;
using LagrangianFn = std::function<double(const Vec& x, const Vec& a)>;
using ScalarFieldFn = std::function<double(const Vec& x)>;

// ---------------------------------------------------------------------------
// Control sets

/// Compact control set. Enumeration order is fixed at construction.
class ControlSet {
 public:
  struct Finite {
    std::vector<Vec> values;
  };
  /// Tensor grid over [lower, upper]; when `ball_radius` > 0 only samples
  /// with norm <= ball_radius are enumerated.
  struct Box {
    Vec lower, upper;
    std::vector<int> samples;
    double ball_radius = 0.0;
  };
  /// Closed ball of `radius` sampled in polar form: the centre plus `rings`
  /// concentric circles of `directions` equally spaced unit directions.
  struct Ball {
    std::size_t dim = 2;
    double radius = 1.0;
    int directions = 64;
    int rings = 1;
  };

  static ControlSet finite(std::vector<Vec> values) {
    if (values.empty()) throw Error(ErrorCode::Config, "finite control set is empty");
    const auto dim = values.front().size();
    for (const auto& v : values) {
      if (v.size() != dim) throw Error(ErrorCode::Config, "finite control set has mixed dimensions");
      if (!all_finite(v)) throw Error(ErrorCode::Config, "finite control set has non-finite entries");
    }
    return ControlSet(Finite{std::move(values)});
  }

  static ControlSet box(Vec lower, Vec upper, std::vector<int> samples,
                        double ball_radius = 0.0) {
    if (lower.size() != upper.size() || lower.size() != samples.size() || lower.empty())
      throw Error(ErrorCode::Config, "box control set: inconsistent dimensions");
    for (std::size_t i = 0; i < lower.size(); ++i) {
      if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]) || lower[i] > upper[i])
        throw Error(ErrorCode::Config, "box control set: bounds must be finite and ordered");
      if (samples[i] < 1 || (samples[i] == 1 && lower[i] != upper[i]))
        throw Error(ErrorCode::Config, "box control set: need >= 2 samples on non-degenerate axes");
    }
    return ControlSet(Box{lower, upper, std::move(samples), ball_radius});
  }

  static ControlSet ball(std::size_t dim, double radius, int directions, int rings) {
    if (dim < 1 || dim > 2) throw Error(ErrorCode::Config, "ball control set supports dimension 1 or 2");
    if (!(radius > 0.0) || rings < 1 || (dim == 2 && directions < 3))
      throw Error(ErrorCode::Config, "ball control set: invalid radius or sampling");
    return ControlSet(Ball{dim, radius, directions, rings});
  }

  std::size_t control_dim() const noexcept { return dim_; }
  const std::vector<Vec>& enumerate() const noexcept { return enumerated_; }

  /// Membership in the underlying compact set (not just its samples).
  bool contains(const Vec& a, double tol = 1e-12) const {
    if (a.size() != dim_) return false;
    return std::visit(
        [&](const auto& rep) -> bool {
          using T = std::decay_t<decltype(rep)>;
          if constexpr (std::is_same_v<T, Finite>) {
            for (const auto& v : rep.values)
              if (norm(v - a) <= tol) return true;
            return false;
          } else if constexpr (std::is_same_v<T, Box>) {
            for (std::size_t i = 0; i < dim_; ++i)
              if (a[i] < rep.lower[i] - tol || a[i] > rep.upper[i] + tol) return false;
            return rep.ball_radius <= 0.0 || norm(a) <= rep.ball_radius + tol;
          } else {
            return norm(a) <= rep.radius + tol;
          }
        },
        rep_);
  }

  /// Short machine-readable description, e.g. "box:-1/1/3" or "ball:64,4".
  std::string describe() const;

  const std::variant<Finite, Box, Ball>& representation() const noexcept { return rep_; }

 private:
  explicit ControlSet(std::variant<Finite, Box, Ball> rep) : rep_(std::move(rep)) {
    std::visit([this](const auto& r) { build(r); }, rep_);
  }

  void build(const Finite& f) {
    dim_ = f.values.front().size();
    enumerated_ = f.values;
  }

  void build(const Box& b) {
    dim_ = b.lower.size();
    std::vector<int> idx(dim_, 0);
    // Last axis fastest.
    while (true) {
      Vec a(dim_);
      for (std::size_t i = 0; i < dim_; ++i) {
        a[i] = b.samples[i] == 1
                   ? b.lower[i]
                   : b.lower[i] + (b.upper[i] - b.lower[i]) * idx[i] / (b.samples[i] - 1);
      }
      if (b.ball_radius <= 0.0 || norm(a) <= b.ball_radius * (1.0 + 1e-12))
        enumerated_.push_back(a);
      std::size_t ax = dim_;
      while (ax > 0) {
        --ax;
        if (++idx[ax] < b.samples[ax]) break;
        idx[ax] = 0;
        if (ax == 0) return;
      }
    }
  }

  void build(const Ball& b) {
    dim_ = b.dim;
    enumerated_.push_back(Vec(dim_, 0.0));
    for (int k = 1; k <= b.rings; ++k) {
      const double r = b.radius * k / b.rings;
      if (dim_ == 1) {
        enumerated_.push_back(Vec{-r});
        enumerated_.push_back(Vec{r});
        continue;
      }
      for (int j = 0; j < b.directions; ++j) {
        const double th = 2.0 * std::numbers::pi * j / b.directions;
        enumerated_.push_back(Vec{r * std::cos(th), r * std::sin(th)});
      }
    }
  }

  std::variant<Finite, Box, Ball> rep_;
  std::size_t dim_ = 0;
  std::vector<Vec> enumerated_;
};

inline std::vector<Vec> enumerate_controls(const ControlSet& set) { return set.enumerate(); }

// ---------------------------------------------------------------------------
// Target sets

class TargetSet {
 public:
  struct Points {
    std::vector<Vec> points;
  };
  /// {anchor + s * direction : s >= 0}
  struct HalfLine {
    Vec anchor, direction;
  };
  /// {x : |x - center| >= radius}
  struct ComplementBall {
    Vec center;
    double radius;
  };
  struct Implicit {
    ScalarFieldFn distance;
    Vec witness;
  };

  static TargetSet points(std::vector<Vec> pts, double tolerance = 0.0) {
    if (pts.empty()) throw Error(ErrorCode::Config, "point target is empty");
    return TargetSet(Points{std::move(pts)}, tolerance);
  }
  static TargetSet half_line(Vec anchor, Vec direction, double tolerance = 0.0) {
    const double n = norm(direction);
    if (anchor.size() != direction.size() || !(n > 0.0))
      throw Error(ErrorCode::Config, "half-line target needs a nonzero direction");
    return TargetSet(HalfLine{anchor, direction * (1.0 / n)}, tolerance);
  }
  static TargetSet complement_ball(Vec center, double radius, double tolerance = 0.0) {
    if (!(radius > 0.0)) throw Error(ErrorCode::Config, "complement-ball radius must be positive");
    return TargetSet(ComplementBall{std::move(center), radius}, tolerance);
  }
  static TargetSet implicit(ScalarFieldFn distance, Vec witness, double tolerance = 0.0) {
    return TargetSet(Implicit{std::move(distance), std::move(witness)}, tolerance);
  }

  double tolerance() const noexcept { return tolerance_; }
  TargetSet with_tolerance(double tol) const {
    TargetSet t = *this;
    t.tolerance_ = tol;
    return t;
  }

  std::size_t dim() const { return witness().size(); }

  double distance(const Vec& x) const {
    return std::visit(
        [&](const auto& rep) -> double {
          using T = std::decay_t<decltype(rep)>;
          if constexpr (std::is_same_v<T, Points>) {
            double d = std::numeric_limits<double>::infinity();
            for (const auto& p : rep.points) d = std::min(d, norm(x - p));
            return d;
          } else if constexpr (std::is_same_v<T, HalfLine>) {
            const Vec rel = x - rep.anchor;
            const double s = std::max(0.0, dot(rel, rep.direction));
            return norm(rel - rep.direction * s);
          } else if constexpr (std::is_same_v<T, ComplementBall>) {
            return std::max(0.0, rep.radius - norm(x - rep.center));
          } else {
            return std::max(0.0, rep.distance(x));
          }
        },
        rep_);
  }

  bool contains(const Vec& x) const { return distance(x) <= tolerance_; }

  /// A point of the set; used for the nonemptiness check.
  Vec witness() const {
    return std::visit(
        [](const auto& rep) -> Vec {
          using T = std::decay_t<decltype(rep)>;
          if constexpr (std::is_same_v<T, Points>) {
            return rep.points.front();
          } else if constexpr (std::is_same_v<T, HalfLine>) {
            return rep.anchor;
          } else if constexpr (std::is_same_v<T, ComplementBall>) {
            Vec w = rep.center;
            w[0] += rep.radius;
            return w;
          } else {
            return rep.witness;
          }
        },
        rep_);
  }

  const std::variant<Points, HalfLine, ComplementBall, Implicit>& representation() const noexcept {
    return rep_;
  }

 private:
  TargetSet(std::variant<Points, HalfLine, ComplementBall, Implicit> rep, double tol)
      : rep_(std::move(rep)), tolerance_(tol) {
    if (!(tol >= 0.0)) throw Error(ErrorCode::Config, "target tolerance must be nonnegative");
  }

  std::variant<Points, HalfLine, ComplementBall, Implicit> rep_;
  double tolerance_ = 0.0;
};

// ---------------------------------------------------------------------------
// Problem

struct ControlProblem {
  std::string name;
  std::size_t state_dim = 1;
  DynamicsFn dynamics;
  LagrangianFn lagrangian;
  TargetSet target = TargetSet::points({Vec{0.0}});
  ControlSet controls = ControlSet::finite({Vec{0.0}});
  ScalarFieldFn exit_cost;  ///< empty means g == 0
  double lipschitz_hint = 1.0;
  std::vector<std::string> flags;  ///< e.g. "H6_SUSPECT"

  double exit_value(const Vec& x) const { return exit_cost ? exit_cost(x) : 0.0; }

  bool has_flag(const std::string& f) const {
    for (const auto& g : flags)
      if (g == f) return true;
    return false;
  }

  ControlProblem with_target_tolerance(double tol) const {
    ControlProblem p = *this;
    p.target = target.with_tolerance(tol);
    return p;
  }
};

inline Vec eval_dynamics(const ControlProblem& p, const Vec& x, const Vec& a) {
  if (x.size() != p.state_dim)
    throw Error(ErrorCode::DimensionMismatch, "state has wrong dimension for " + p.name);
  Vec v = p.dynamics(x, a);
  if (v.size() != p.state_dim || !all_finite(v))
    throw Error(ErrorCode::MalformedProblem, "dynamics of " + p.name + " returned a non-finite or mis-sized vector");
  return v;
}

inline double eval_lagrangian(const ControlProblem& p, const Vec& x, const Vec& a) {
  if (x.size() != p.state_dim)
    throw Error(ErrorCode::DimensionMismatch, "state has wrong dimension for " + p.name);
  const double l = p.lagrangian(x, a);
  if (!std::isfinite(l))
    throw Error(ErrorCode::MalformedProblem, "lagrangian of " + p.name + " is not finite");
  if (l < 0.0)
    throw Error(ErrorCode::NegativeLagrangian,
                "lagrangian of " + p.name + " is negative (" + std::to_string(l) + ")");
  return l;
}

/// Sampled evidence for the structural invariants of a problem instance.
struct InvariantReport {
  std::size_t samples = 0;
  bool nonnegative = true;
  bool deterministic = true;
  bool target_consistent = true;
  bool target_nonempty = true;
  double max_lipschitz_quotient = 0.0;
  bool lipschitz_warning = false;  ///< sampled quotient > 1.1 * lipschitz_hint
};

/// Samples states uniformly in [lower, upper] and controls from the set's
/// enumeration; never throws on a violation, only reports it.
inline InvariantReport check_invariants(const ControlProblem& p, const Vec& lower,
                                        const Vec& upper, std::size_t samples,
                                        std::uint64_t seed = 7) {
  InvariantReport rep;
  rep.samples = samples;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto& ctrl = p.controls.enumerate();
  std::uniform_int_distribution<std::size_t> pick(0, ctrl.size() - 1);
  auto draw = [&] {
    Vec x(p.state_dim);
    for (std::size_t i = 0; i < p.state_dim; ++i)
      x[i] = lower[i] + (upper[i] - lower[i]) * unit(rng);
    return x;
  };
  rep.target_nonempty = p.target.distance(p.target.witness()) == 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    const Vec x = draw();
    const Vec& a = ctrl[pick(rng)];
    const double l1 = p.lagrangian(x, a);
    const double l2 = p.lagrangian(x, a);
    if (!(l1 >= 0.0)) rep.nonnegative = false;
    const Vec f1 = p.dynamics(x, a);
    const Vec f2 = p.dynamics(x, a);
    if (!(f1 == f2) || std::bit_cast<std::uint64_t>(l1) != std::bit_cast<std::uint64_t>(l2))
      rep.deterministic = false;
    const double d = p.target.distance(x);
    if (d < 0.0 || p.target.contains(x) != (d <= p.target.tolerance())) rep.target_consistent = false;
    const Vec y = draw();
    const double dx = norm(x - y);
    if (dx > 0.0) {
      const double q = norm(p.dynamics(x, a) - p.dynamics(y, a)) / dx;
      rep.max_lipschitz_quotient = std::max(rep.max_lipschitz_quotient, q);
    }
  }
  rep.lipschitz_warning = rep.max_lipschitz_quotient > 1.1 * p.lipschitz_hint;
  return rep;
}

inline std::string ControlSet::describe() const {
  auto join = [](const Vec& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) s += ',';
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", v[i]);
      s += buf;
    }
    return s;
  };
  return std::visit(
      [&](const auto& rep) -> std::string {
        using T = std::decay_t<decltype(rep)>;
        if constexpr (std::is_same_v<T, Finite>) {
          std::string s = "finite:";
          for (std::size_t i = 0; i < rep.values.size(); ++i) {
            if (i) s += ';';
            s += join(rep.values[i]);
          }
          return s;
        } else if constexpr (std::is_same_v<T, Box>) {
          std::string s = "box:" + join(rep.lower) + "/" + join(rep.upper) + "/";
          for (std::size_t i = 0; i < rep.samples.size(); ++i) {
            if (i) s += ',';
            s += std::to_string(rep.samples[i]);
          }
          if (rep.ball_radius > 0.0) s += "/ball";
          return s;
        } else {
          return "ball:" + std::to_string(rep.directions) + "," + std::to_string(rep.rings);
        }
      },
      rep_);
}

}  // namespace exitctl
