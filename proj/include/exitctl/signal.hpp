#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "exitctl/error.hpp"
#include "exitctl/vec.hpp"

namespace exitctl {

/// Open-loop or closed-loop control input t, x -> a.
class ControlSignal {
 public:
  struct Constant {
    Vec value;
  };
  /// values[i] applies on [starts[i], starts[i+1]); starts[0] == 0.
  struct PiecewiseConstant {
    std::vector<double> starts;
    std::vector<Vec> values;
  };
  struct Feedback {
    std::function<Vec(const Vec&)> law;
    std::string label;
  };
  struct OpenLoop {
    std::function<Vec(double)> law;
    std::string label;
  };
  /// `first` on [0, switch_time), `second` shifted to start at switch_time.
  struct Concat {
    std::shared_ptr<const ControlSignal> first, second;
    double switch_time;
  };
  using Rep = std::variant<Constant, PiecewiseConstant, Feedback, OpenLoop, Concat>;

  static ControlSignal constant(Vec a) { return ControlSignal(Constant{std::move(a)}); }

  static ControlSignal piecewise(std::vector<double> starts, std::vector<Vec> values) {
    if (starts.empty() || starts.size() != values.size())
      throw Error(ErrorCode::Config, "piecewise signal needs one value per start time");
    if (starts.front() != 0.0) throw Error(ErrorCode::Config, "piecewise signal must start at t=0");
    for (std::size_t i = 1; i < starts.size(); ++i)
      if (!(starts[i] > starts[i - 1]))
        throw Error(ErrorCode::Config, "piecewise signal breakpoints must be strictly increasing");
    return ControlSignal(PiecewiseConstant{std::move(starts), std::move(values)});
  }

  static ControlSignal feedback(std::function<Vec(const Vec&)> law, std::string label) {
    return ControlSignal(Feedback{std::move(law), std::move(label)});
  }

  static ControlSignal open_loop(std::function<Vec(double)> law, std::string label) {
    return ControlSignal(OpenLoop{std::move(law), std::move(label)});
  }

  Vec value(double t, const Vec& x) const {
    return std::visit(
        [&](const auto& r) -> Vec {
          using T = std::decay_t<decltype(r)>;
          if constexpr (std::is_same_v<T, Constant>) {
            return r.value;
          } else if constexpr (std::is_same_v<T, PiecewiseConstant>) {
            const auto it = std::upper_bound(r.starts.begin(), r.starts.end(), t);
            const auto i = it == r.starts.begin() ? 0 : std::distance(r.starts.begin(), it) - 1;
            return r.values[static_cast<std::size_t>(i)];
          } else if constexpr (std::is_same_v<T, Feedback>) {
            return r.law(x);
          } else if constexpr (std::is_same_v<T, OpenLoop>) {
            return r.law(t);
          } else {
            return t < r.switch_time ? r.first->value(t, x)
                                     : r.second->value(t - r.switch_time, x);
          }
        },
        rep_);
  }

  /// True when the signal ignores the state and is constant between breakpoints.
  bool piecewise_constant() const {
    return std::visit(
        [](const auto& r) -> bool {
          using T = std::decay_t<decltype(r)>;
          if constexpr (std::is_same_v<T, Constant> || std::is_same_v<T, PiecewiseConstant>) {
            return true;
          } else if constexpr (std::is_same_v<T, Concat>) {
            return r.first->piecewise_constant() && r.second->piecewise_constant();
          } else {
            return false;
          }
        },
        rep_);
  }

  /// Smallest breakpoint strictly after t (infinity if none).
  double next_break(double t) const {
    constexpr double inf = std::numeric_limits<double>::infinity();
    return std::visit(
        [&](const auto& r) -> double {
          using T = std::decay_t<decltype(r)>;
          if constexpr (std::is_same_v<T, PiecewiseConstant>) {
            const auto it = std::upper_bound(r.starts.begin(), r.starts.end(), t);
            return it == r.starts.end() ? inf : *it;
          } else if constexpr (std::is_same_v<T, Concat>) {
            if (t < r.switch_time) return std::min(r.first->next_break(t), r.switch_time);
            return r.switch_time + r.second->next_break(t - r.switch_time);
          } else {
            return inf;
          }
        },
        rep_);
  }

  /// Machine-readable descriptor, stable across runs.
  std::string describe() const {
    return std::visit(
        [](const auto& r) -> std::string {
          using T = std::decay_t<decltype(r)>;
          if constexpr (std::is_same_v<T, Constant>) {
            return "constant:" + join(r.value);
          } else if constexpr (std::is_same_v<T, PiecewiseConstant>) {
            std::string s = "piecewise:";
            for (std::size_t i = 0; i < r.starts.size(); ++i) {
              if (i) s += ';';
              s += num(r.starts[i]) + ":" + join(r.values[i]);
            }
            return s;
          } else if constexpr (std::is_same_v<T, Feedback>) {
            return "feedback:" + r.label;
          } else if constexpr (std::is_same_v<T, OpenLoop>) {
            return "open_loop:" + r.label;
          } else {
            return "concat(" + r.first->describe() + "|" + num(r.switch_time) + "|" +
                   r.second->describe() + ")";
          }
        },
        rep_);
  }

  const Rep& representation() const noexcept { return rep_; }

  static std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
  }
  static std::string join(const Vec& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) s += ',';
      s += num(v[i]);
    }
    return s;
  }

 private:
  explicit ControlSignal(Rep rep) : rep_(std::move(rep)) {}
  friend ControlSignal concat(const ControlSignal&, double, const ControlSignal&);

  Rep rep_;
};

/// `first` restricted to [0, T) followed by `second` shifted to start at T.
/// Piecewise-constant inputs are flattened into a single piecewise signal.
inline ControlSignal concat(const ControlSignal& first, double T, const ControlSignal& second) {
  if (!(T >= 0.0)) throw Error(ErrorCode::Config, "concat: switch time must be nonnegative");
  if (T == 0.0) return second;
  auto pieces = [](const ControlSignal& s, std::vector<double>& st, std::vector<Vec>& val) {
    if (auto c = std::get_if<ControlSignal::Constant>(&s.representation())) {
      st = {0.0};
      val = {c->value};
      return true;
    }
    if (auto p = std::get_if<ControlSignal::PiecewiseConstant>(&s.representation())) {
      st = p->starts;
      val = p->values;
      return true;
    }
    return false;
  };
  std::vector<double> s1, s2;
  std::vector<Vec> v1, v2;
  if (pieces(first, s1, v1) && pieces(second, s2, v2)) {
    std::vector<double> st;
    std::vector<Vec> val;
    for (std::size_t i = 0; i < s1.size() && s1[i] < T; ++i) {
      st.push_back(s1[i]);
      val.push_back(v1[i]);
    }
    for (std::size_t i = 0; i < s2.size(); ++i) {
      st.push_back(T + s2[i]);
      val.push_back(v2[i]);
    }
    return ControlSignal::piecewise(std::move(st), std::move(val));
  }
  return ControlSignal(ControlSignal::Concat{std::make_shared<const ControlSignal>(first),
                                             std::make_shared<const ControlSignal>(second), T});
}

}  // namespace exitctl
