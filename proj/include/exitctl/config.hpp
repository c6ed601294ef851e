#pragma once

// Run configuration: line-oriented `key = value` with `[section]` headers.
// Every value is validated and stored in a normalized spelling, so
// normalized() of a parsed config parses back to the same config.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "exitctl/applications.hpp"
#include "exitctl/error.hpp"
#include "exitctl/grid.hpp"
#include "exitctl/integrate.hpp"
#include "exitctl/problem.hpp"
#include "exitctl/signal.hpp"
#include "exitctl/solver.hpp"
#include "exitctl/vec.hpp"
#include "exitctl/verifier.hpp"

namespace exitctl {

enum class ValueKind { Real, Integer, Vector, Word, Bool, Target, Signal, List };

struct KeySpec {
  const char* section;
  const char* key;
  ValueKind kind;
};

// Known keys. Anything else is rejected.
inline const std::vector<KeySpec>& config_schema() {
  static const std::vector<KeySpec> s = {
      {"instance", "name", ValueKind::Word},
      {"instance", "k", ValueKind::Real},
      {"instance", "m", ValueKind::Real},
      {"instance", "p", ValueKind::Real},
      {"instance", "variant", ValueKind::Word},
      {"instance", "intensity", ValueKind::Word},
      {"instance", "target", ValueKind::Target},
      {"instance", "target_tolerance", ValueKind::Real},
      {"instance", "directions", ValueKind::Integer},
      {"instance", "rings", ValueKind::Integer},
      {"instance", "control_samples", ValueKind::Integer},
      {"grid", "lower", ValueKind::Vector},
      {"grid", "upper", ValueKind::Vector},
      {"grid", "nodes", ValueKind::Vector},
      {"solver", "method", ValueKind::Word},
      {"solver", "tolerance", ValueKind::Real},
      {"solver", "max_sweeps", ValueKind::Integer},
      {"solver", "boundary_mode", ValueKind::Word},
      {"solver", "target_tolerance", ValueKind::Real},
      {"solver", "jacobi", ValueKind::Bool},
      {"simulate", "x0", ValueKind::Vector},
      {"simulate", "signal", ValueKind::Signal},
      {"simulate", "dt", ValueKind::Real},
      {"simulate", "horizon", ValueKind::Real},
      {"simulate", "record_every", ValueKind::Integer},
      {"verify", "order", ValueKind::Integer},
      {"verify", "target_band", ValueKind::Real},
      {"verify", "residual_tol", ValueKind::Real},
      {"verify", "lower_bound", ValueKind::Real},
      {"verify", "target_roles", ValueKind::Bool},
      {"verify", "window_lower", ValueKind::Vector},
      {"verify", "window_upper", ValueKind::Vector},
      {"hypotheses", "states", ValueKind::Integer},
      {"hypotheses", "signals", ValueKind::Integer},
      {"hypotheses", "horizon", ValueKind::Real},
      {"hypotheses", "seed", ValueKind::Integer},
      {"hypotheses", "max_switches", ValueKind::Integer},
      {"hypotheses", "lower", ValueKind::Vector},
      {"hypotheses", "upper", ValueKind::Vector},
      {"hypotheses", "h6_horizons", ValueKind::List},
      {"hypotheses", "dt_rel", ValueKind::Real},
  };
  return s;
}

inline const char* const kSectionOrder[] = {"instance", "grid", "solver", "simulate", "verify", "hypotheses"};

namespace detail {

inline std::string lower_word(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

inline Vec parse_vec(const std::string& s) {
  std::vector<double> v;
  for (const auto& part : detail::split(s, ',')) v.push_back(detail::parse_double(detail::trim(part)));
  if (v.empty() || v.size() > kMaxDim) throw Error(ErrorCode::Parse, "bad vector '" + s + "'");
  return Vec(std::span<const double>(v));
}

inline std::string vec_text(const Vec& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + detail::fmt17(v[i]);
  return out;
}

inline long parse_int(const std::string& s) {
  std::size_t used = 0;
  long v = 0;
  try {
    v = std::stol(s, &used);
  } catch (const std::exception&) {
    throw Error(ErrorCode::Parse, "bad integer '" + s + "'");
  }
  if (used != s.size()) throw Error(ErrorCode::Parse, "bad integer '" + s + "'");
  return v;
}

/// Splits "kind:rest"; rest may be empty.
inline std::pair<std::string, std::string> tagged(const std::string& s) {
  const auto c = s.find(':');
  if (c == std::string::npos) return {lower_word(detail::trim(s)), ""};
  return {lower_word(detail::trim(s.substr(0, c))), detail::trim(s.substr(c + 1))};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Targets: point:x,y | points:x,y;x,y | halfline:anchor/direction |
// complement_ball:center/radius

inline TargetSet parse_target(const std::string& text, double tolerance = 0.0) {
  const auto [kind, rest] = detail::tagged(text);
  if (kind == "point") return TargetSet::points({detail::parse_vec(rest)}, tolerance);
  if (kind == "points") {
    std::vector<Vec> pts;
    for (const auto& p : detail::split(rest, ';')) pts.push_back(detail::parse_vec(detail::trim(p)));
    for (const auto& p : pts)
      if (p.size() != pts.front().size()) throw Error(ErrorCode::Parse, "points of mixed dimension");
    return TargetSet::points(std::move(pts), tolerance);
  }
  const auto parts = detail::split(rest, '/');
  if (kind == "halfline" && parts.size() == 2)
    return TargetSet::half_line(detail::parse_vec(detail::trim(parts[0])), detail::parse_vec(detail::trim(parts[1])), tolerance);
  if (kind == "complement_ball" && parts.size() == 2)
    return TargetSet::complement_ball(detail::parse_vec(detail::trim(parts[0])), detail::parse_double(detail::trim(parts[1])), tolerance);
  throw Error(ErrorCode::Parse, "bad target '" + text + "'");
}

inline std::string normalize_target(const std::string& text) {
  const auto [kind, rest] = detail::tagged(text);
  const TargetSet t = parse_target(text);
  const auto parts = detail::split(rest, '/');
  if (kind == "point") return "point:" + detail::vec_text(detail::parse_vec(rest));
  if (kind == "points") {
    std::string out = "points:";
    bool first = true;
    for (const auto& p : detail::split(rest, ';')) {
      out += (first ? "" : ";") + detail::vec_text(detail::parse_vec(detail::trim(p)));
      first = false;
    }
    return out;
  }
  if (kind == "halfline")
    return "halfline:" + detail::vec_text(detail::parse_vec(detail::trim(parts[0]))) + "/" +
           detail::vec_text(detail::parse_vec(detail::trim(parts[1])));
  return "complement_ball:" + detail::vec_text(detail::parse_vec(detail::trim(parts[0]))) + "/" +
         detail::fmt17(detail::parse_double(detail::trim(parts[1])));
}

// ---------------------------------------------------------------------------
// Signals: constant:a | piecewise:t:a;t:a | feedback:fuller | open_loop:log_escape
// Vector-valued controls use ',' inside a value.

inline ControlSignal parse_signal(const std::string& text) {
  const auto [kind, rest] = detail::tagged(text);
  if (kind == "constant") return ControlSignal::constant(detail::parse_vec(rest));
  if (kind == "piecewise") {
    std::vector<double> starts;
    std::vector<Vec> values;
    for (const auto& piece : detail::split(rest, ';')) {
      const auto c = piece.find(':');
      if (c == std::string::npos) throw Error(ErrorCode::Parse, "bad piece '" + piece + "'");
      starts.push_back(detail::parse_double(detail::trim(piece.substr(0, c))));
      values.push_back(detail::parse_vec(detail::trim(piece.substr(c + 1))));
    }
    try {
      return ControlSignal::piecewise(std::move(starts), std::move(values));
    } catch (const Error& e) {
      throw Error(ErrorCode::Parse, e.what());
    }
  }
  if (kind == "feedback" && detail::lower_word(rest) == "fuller")
    return fuller_feedback_signal(fuller_switch_constant());
  if (kind == "open_loop" && detail::lower_word(rest) == "log_escape") return log_escape_signal();
  throw Error(ErrorCode::Parse, "bad signal '" + text + "'");
}

inline std::string normalize_signal(const std::string& text) {
  const auto [kind, rest] = detail::tagged(text);
  if (kind == "feedback" || kind == "open_loop") {
    parse_signal(text);
    return kind + ":" + detail::lower_word(rest);
  }
  return parse_signal(text).describe();
}

// ---------------------------------------------------------------------------

struct RunConfig {
  std::map<std::string, std::map<std::string, std::string>> values;

  bool has(const std::string& sec, const std::string& key) const {
    auto s = values.find(sec);
    return s != values.end() && s->second.count(key);
  }
  bool has_section(const std::string& sec) const { return values.count(sec) != 0; }

  const std::string& text(const std::string& sec, const std::string& key) const {
    if (!has(sec, key)) throw Error(ErrorCode::Config, "missing [" + sec + "] " + key);
    return values.at(sec).at(key);
  }
  std::string word(const std::string& sec, const std::string& key, const std::string& def) const {
    return has(sec, key) ? text(sec, key) : def;
  }
  double real(const std::string& sec, const std::string& key) const { return detail::parse_double(text(sec, key)); }
  double real(const std::string& sec, const std::string& key, double def) const {
    return has(sec, key) ? real(sec, key) : def;
  }
  long integer(const std::string& sec, const std::string& key, long def) const {
    return has(sec, key) ? detail::parse_int(text(sec, key)) : def;
  }
  bool flag(const std::string& sec, const std::string& key, bool def) const {
    return has(sec, key) ? text(sec, key) == "true" : def;
  }
  Vec vec(const std::string& sec, const std::string& key) const { return detail::parse_vec(text(sec, key)); }
  std::vector<double> list(const std::string& sec, const std::string& key) const {
    std::vector<double> out;
    for (const auto& p : detail::split(text(sec, key), ',')) out.push_back(detail::parse_double(detail::trim(p)));
    return out;
  }

  /// Canonical text: fixed section order, keys sorted, normalized values.
  std::string normalized() const {
    std::ostringstream os;
    bool first = true;
    for (const char* sec : kSectionOrder) {
      auto it = values.find(sec);
      if (it == values.end()) continue;
      if (!first) os << '\n';
      first = false;
      os << '[' << sec << "]\n";
      for (const auto& [k, v] : it->second) os << k << " = " << v << '\n';
    }
    return os.str();
  }

  bool operator==(const RunConfig&) const = default;
};

inline std::string normalize_value(ValueKind kind, const std::string& raw) {
  switch (kind) {
    case ValueKind::Real: return detail::fmt17(detail::parse_double(raw));
    case ValueKind::Integer: return std::to_string(detail::parse_int(raw));
    case ValueKind::Vector: return detail::vec_text(detail::parse_vec(raw));
    case ValueKind::Word: return detail::lower_word(raw);
    case ValueKind::Bool: {
      const auto w = detail::lower_word(raw);
      if (w == "true" || w == "1" || w == "yes") return "true";
      if (w == "false" || w == "0" || w == "no") return "false";
      throw Error(ErrorCode::Parse, "bad boolean '" + raw + "'");
    }
    case ValueKind::Target: return normalize_target(raw);
    case ValueKind::Signal: return normalize_signal(raw);
    case ValueKind::List: {
      std::string out;
      bool first = true;
      for (const auto& p : detail::split(raw, ',')) {
        out += (first ? "" : ",") + detail::fmt17(detail::parse_double(detail::trim(p)));
        first = false;
      }
      return out;
    }
  }
  return raw;
}

/// Parses the config text. '#' starts a comment; blank lines are ignored.
inline RunConfig parse_config(std::istream& is) {
  RunConfig cfg;
  std::string line, section;
  int lineno = 0;
  auto fail = [&](const std::string& msg) {
    throw Error(ErrorCode::Config, "line " + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(is, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail("unterminated section header");
      section = detail::lower_word(detail::trim(line.substr(1, line.size() - 2)));
      if (std::find_if(std::begin(kSectionOrder), std::end(kSectionOrder),
                       [&](const char* s) { return section == s; }) == std::end(kSectionOrder))
        fail("unknown section [" + section + "]");
      cfg.values[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected key = value");
    if (section.empty()) fail("key outside of a section");
    const std::string key = detail::lower_word(detail::trim(line.substr(0, eq)));
    const std::string raw = detail::trim(line.substr(eq + 1));
    const auto& schema = config_schema();
    auto spec = std::find_if(schema.begin(), schema.end(),
                             [&](const KeySpec& s) { return section == s.section && key == s.key; });
    if (spec == schema.end()) fail("unknown key '" + key + "' in [" + section + "]");
    if (cfg.has(section, key)) fail("duplicate key '" + key + "'");
    if (raw.empty()) fail("empty value for '" + key + "'");
    try {
      cfg.values[section][key] = normalize_value(spec->kind, raw);
    } catch (const Error& e) {
      fail(e.what());
    }
  }
  return cfg;
}

inline RunConfig parse_config(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is);
}

// ---------------------------------------------------------------------------
// Typed views

inline Instance build_instance(const RunConfig& c) {
  const std::string name = c.text("instance", "name");
  const double tol = c.real("instance", "target_tolerance", 0.0);
  auto allow_target = [&](bool allowed) {
    if (!allowed && c.has("instance", "target"))
      throw Error(ErrorCode::Config, "instance '" + name + "' has a fixed target");
    if (allowed && !c.has("instance", "target"))
      throw Error(ErrorCode::Config, "instance '" + name + "' needs a target spec");
  };
  Instance in;
  if (name == "example1") {
    allow_target(false);
    const std::string v = c.word("instance", "variant", "t1");
    if (v != "t1" && v != "t2") throw Error(ErrorCode::Config, "example1 variant must be t1 or t2");
    in = example1_instance(v == "t1" ? Example1Target::T1 : Example1Target::T2);
  } else if (name == "fuller") {
    allow_target(false);
    FullerOptions opt;
    if (c.has("instance", "m")) opt.m = c.real("instance", "m");
    opt.control_samples = static_cast<int>(c.integer("instance", "control_samples", 3));
    in = fuller_instance(c.real("instance", "k", 0.0), opt);
  } else if (name == "eikonal") {
    allow_target(true);
    EikonalOptions opt;
    opt.directions = static_cast<int>(c.integer("instance", "directions", opt.directions));
    opt.rings = static_cast<int>(c.integer("instance", "rings", opt.rings));
    in = eikonal_instance(c.real("instance", "p", 0.0), parse_target(c.text("instance", "target"), tol), opt);
  } else if (name == "sfs") {
    allow_target(true);
    SfsOptions opt;
    opt.directions = static_cast<int>(c.integer("instance", "directions", opt.directions));
    opt.rings = static_cast<int>(c.integer("instance", "rings", opt.rings));
    const std::string w = c.word("instance", "intensity", "nrk_tilde");
    if (w != "pound0" && w != "nrk_tilde") throw Error(ErrorCode::Config, "intensity must be pound0 or nrk_tilde");
    in = sfs_instance(w == "pound0" ? Intensity::Pound0 : Intensity::NrkTilde,
                      parse_target(c.text("instance", "target"), tol), opt);
  } else if (name == "scalar_halfline") {
    allow_target(false);
    in = scalar_halfline_instance();
  } else {
    throw Error(ErrorCode::Config, "unknown instance '" + name + "'");
  }
  if (c.has("instance", "target_tolerance") && name != "eikonal" && name != "sfs")
    in.problem = in.problem.with_target_tolerance(tol);
  return in;
}

inline Grid build_grid(const RunConfig& c) {
  const Vec lo = c.vec("grid", "lower"), hi = c.vec("grid", "upper"), n = c.vec("grid", "nodes");
  if (lo.size() != hi.size() || lo.size() != n.size())
    throw Error(ErrorCode::Config, "grid lower/upper/nodes differ in length");
  std::vector<int> nodes;
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (n[i] != std::floor(n[i]) || n[i] < 2) throw Error(ErrorCode::Config, "grid nodes must be integers >= 2");
    nodes.push_back(static_cast<int>(n[i]));
  }
  return Grid(lo, hi, nodes);
}

inline SolverParams build_solver_params(const RunConfig& c) {
  SolverParams sp;
  sp.tolerance = c.real("solver", "tolerance", sp.tolerance);
  sp.max_sweeps = static_cast<int>(c.integer("solver", "max_sweeps", sp.max_sweeps));
  const std::string mode = c.word("solver", "boundary_mode", "outflow_large");
  if (mode == "outflow_large") sp.boundary_mode = BoundaryMode::OutflowLarge;
  else if (mode == "osc_infinite") sp.boundary_mode = BoundaryMode::OscInfinite;
  else throw Error(ErrorCode::Config, "boundary_mode must be outflow_large or osc_infinite");
  sp.target_tolerance = c.real("solver", "target_tolerance", sp.target_tolerance);
  sp.jacobi = c.flag("solver", "jacobi", false);
  return sp;
}

}  // namespace exitctl
