#pragma once

// Rectangular grids, per-node value fields and their CSV exchange format.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "exitctl/error.hpp"
#include "exitctl/vec.hpp"

namespace exitctl {

class Grid {
 public:
  Grid() = default;
  Grid(Vec lower, Vec upper, std::vector<int> nodes)
      : lower_(lower), upper_(upper), nodes_(std::move(nodes)) {
    if (lower_.size() == 0 || lower_.size() > kMaxDim || lower_.size() != upper_.size() ||
        nodes_.size() != lower_.size())
      throw Error(ErrorCode::Config, "grid: inconsistent dimensions");
    total_ = 1;
    for (std::size_t i = 0; i < dim(); ++i) {
      if (!(upper_[i] > lower_[i]) || !std::isfinite(lower_[i]) || !std::isfinite(upper_[i]))
        throw Error(ErrorCode::Config, "grid: upper must exceed lower on every axis");
      if (nodes_[i] < 2) throw Error(ErrorCode::Config, "grid: need at least 2 nodes per axis");
      h_[i] = (upper_[i] - lower_[i]) / (nodes_[i] - 1);
      total_ *= static_cast<std::size_t>(nodes_[i]);
    }
    stride_[dim() - 1] = 1;
    for (std::size_t i = dim() - 1; i-- > 0;)
      stride_[i] = stride_[i + 1] * static_cast<std::size_t>(nodes_[i + 1]);
  }

  /// Uniform grid with the same node count on every axis.
  static Grid uniform(const Vec& lower, const Vec& upper, int nodes) {
    return Grid(lower, upper, std::vector<int>(lower.size(), nodes));
  }

  std::size_t dim() const noexcept { return lower_.size(); }
  const Vec& lower() const noexcept { return lower_; }
  const Vec& upper() const noexcept { return upper_; }
  const std::vector<int>& nodes() const noexcept { return nodes_; }
  int nodes(std::size_t axis) const { return nodes_[axis]; }
  double h(std::size_t axis) const { return h_[axis]; }
  double h_min() const { return *std::min_element(h_.begin(), h_.begin() + dim()); }
  double h_max() const { return *std::max_element(h_.begin(), h_.begin() + dim()); }
  std::size_t size() const noexcept { return total_; }
  std::size_t stride(std::size_t axis) const { return stride_[axis]; }

  double coord(std::size_t axis, int i) const {
    if (i == nodes_[axis] - 1) return upper_[axis];
    return lower_[axis] + i * h_[axis];
  }

  /// Row-major multi-index, last axis fastest.
  std::array<int, kMaxDim> multi(std::size_t idx) const {
    std::array<int, kMaxDim> m{};
    for (std::size_t i = 0; i < dim(); ++i) {
      m[i] = static_cast<int>(idx / stride_[i]);
      idx %= stride_[i];
    }
    return m;
  }

  std::size_t flat(const std::array<int, kMaxDim>& m) const {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < dim(); ++i) idx += static_cast<std::size_t>(m[i]) * stride_[i];
    return idx;
  }

  Vec point(std::size_t idx) const {
    const auto m = multi(idx);
    Vec x(dim());
    for (std::size_t i = 0; i < dim(); ++i) x[i] = coord(i, m[i]);
    return x;
  }

  bool inside(const Vec& x, double rel_tol = 1e-9) const {
    for (std::size_t i = 0; i < dim(); ++i) {
      const double slack = rel_tol * h_[i];
      if (!(x[i] >= lower_[i] - slack && x[i] <= upper_[i] + slack)) return false;
    }
    return true;
  }

  /// Index of the node nearest to x (clamped to the grid).
  std::size_t nearest(const Vec& x) const {
    std::array<int, kMaxDim> m{};
    for (std::size_t i = 0; i < dim(); ++i) {
      const long k = std::lround((x[i] - lower_[i]) / h_[i]);
      m[i] = static_cast<int>(std::clamp<long>(k, 0, nodes_[i] - 1));
    }
    return flat(m);
  }

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.lower_ == b.lower_ && a.upper_ == b.upper_ && a.nodes_ == b.nodes_;
  }

 private:
  Vec lower_, upper_;
  std::vector<int> nodes_;
  std::array<double, kMaxDim> h_{};
  std::array<std::size_t, kMaxDim> stride_{};
  std::size_t total_ = 0;
};

enum class NodeRole : unsigned char { Target, Interior, Outflow };

inline const char* to_string(NodeRole r) {
  switch (r) {
    case NodeRole::Target: return "TARGET";
    case NodeRole::Interior: return "INTERIOR";
    case NodeRole::Outflow: return "OUTFLOW";
  }
  return "?";
}

inline NodeRole parse_role(const std::string& s) {
  if (s == "TARGET") return NodeRole::Target;
  if (s == "INTERIOR") return NodeRole::Interior;
  if (s == "OUTFLOW") return NodeRole::Outflow;
  throw Error(ErrorCode::Parse, "unknown node role '" + s + "'");
}

struct ValueField {
  Grid grid;
  std::vector<double> values;
  std::vector<NodeRole> roles;
  std::size_t sweeps = 0;         ///< solver sweeps spent (0 for imported fields)
  double last_update = 0.0;       ///< sup-norm of the final sweep update

  ValueField() = default;
  explicit ValueField(Grid g, double fill = 0.0, NodeRole role = NodeRole::Interior)
      : grid(std::move(g)), values(grid.size(), fill), roles(grid.size(), role) {}

  /// Samples a function at every node.
  template <class F>
  static ValueField from_function(const Grid& g, F&& fn) {
    ValueField w(g);
    for (std::size_t i = 0; i < g.size(); ++i) w.values[i] = fn(g.point(i));
    return w;
  }
};

/// Multilinear interpolation from the 2^dim enclosing nodes. Nodes with
/// zero weight never contribute, so an infinite neighbour does not leak
/// into a foot point that sits exactly on a finite node.
inline double interpolate(const ValueField& w, const Vec& x) {
  const Grid& g = w.grid;
  if (x.size() != g.dim()) throw Error(ErrorCode::DimensionMismatch, "interpolate: wrong dimension");
  if (!g.inside(x)) throw Error(ErrorCode::OutOfGrid, "interpolate: point outside grid");
  std::array<int, kMaxDim> base{};
  std::array<double, kMaxDim> frac{};
  for (std::size_t i = 0; i < g.dim(); ++i) {
    const double s = (x[i] - g.lower()[i]) / g.h(i);
    int k = static_cast<int>(std::floor(s));
    k = std::clamp(k, 0, g.nodes(i) - 2);
    base[i] = k;
    frac[i] = std::clamp(s - k, 0.0, 1.0);
  }
  const std::size_t corners = std::size_t{1} << g.dim();
  double acc = 0.0;
  for (std::size_t c = 0; c < corners; ++c) {
    double wgt = 1.0;
    std::size_t idx = 0;
    for (std::size_t i = 0; i < g.dim(); ++i) {
      const bool up = (c >> i) & 1u;
      wgt *= up ? frac[i] : 1.0 - frac[i];
      idx += static_cast<std::size_t>(base[i] + (up ? 1 : 0)) * g.stride(i);
    }
    if (wgt != 0.0) acc += wgt * w.values[idx];
  }
  return acc;
}

// ---------------------------------------------------------------------------
// CSV exchange

namespace detail {

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& s) {
  const char* b = s.c_str();
  char* e = nullptr;
  const double v = std::strtod(b, &e);
  while (*e == ' ' || *e == '\t' || *e == '\r') ++e;
  if (e == b || *e != '\0') throw Error(ErrorCode::Parse, "not a number: '" + s + "'");
  return v;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

inline void write_value_csv(std::ostream& os, const ValueField& w) {
  const Grid& g = w.grid;
  auto join = [](auto&& get, std::size_t n) {
    std::string s;
    for (std::size_t i = 0; i < n; ++i) {
      if (i) s += ',';
      s += get(i);
    }
    return s;
  };
  os << "# grid lower=" << join([&](std::size_t i) { return detail::fmt17(g.lower()[i]); }, g.dim())
     << " upper=" << join([&](std::size_t i) { return detail::fmt17(g.upper()[i]); }, g.dim())
     << " nodes=" << join([&](std::size_t i) { return std::to_string(g.nodes(i)); }, g.dim()) << "\n";
  os << "# ";
  for (std::size_t i = 0; i < g.dim(); ++i) os << "x" << (i + 1) << ",";
  os << "value,role\n";
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Vec x = g.point(k);
    for (std::size_t i = 0; i < g.dim(); ++i) os << detail::fmt17(x[i]) << ',';
    os << detail::fmt17(w.values[k]) << ',' << to_string(w.roles[k]) << '\n';
  }
}

inline ValueField read_value_csv(std::istream& is) {
  std::string line;
  Vec lower, upper;
  std::vector<int> nodes;
  bool have_meta = false;
  while (std::getline(is, line)) {
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line[0] != '#') break;
    if (line.rfind("# grid", 0) != 0) continue;
    std::istringstream ls(line.substr(6));
    std::string tok;
    while (ls >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) throw Error(ErrorCode::Parse, "bad grid metadata token '" + tok + "'");
      const std::string key = tok.substr(0, eq);
      const auto parts = detail::split(tok.substr(eq + 1), ',');
      if (parts.empty() || parts.size() > kMaxDim) throw Error(ErrorCode::Parse, "bad grid metadata");
      if (key == "lower" || key == "upper") {
        Vec v(parts.size());
        for (std::size_t i = 0; i < parts.size(); ++i) v[i] = detail::parse_double(parts[i]);
        (key == "lower" ? lower : upper) = v;
      } else if (key == "nodes") {
        nodes.clear();
        for (const auto& p : parts) nodes.push_back(static_cast<int>(detail::parse_double(p)));
      } else {
        throw Error(ErrorCode::Parse, "unknown grid metadata key '" + key + "'");
      }
    }
    have_meta = true;
  }
  if (!have_meta) throw Error(ErrorCode::Parse, "missing '# grid' metadata line");
  Grid g = [&] {
    try {
      return Grid(lower, upper, nodes);
    } catch (const Error& e) {
      throw Error(ErrorCode::Parse, std::string("grid metadata: ") + e.what());
    }
  }();
  ValueField w(g);
  std::size_t k = 0;
  auto take = [&](const std::string& row) {
    const auto cols = detail::split(row, ',');
    if (cols.size() != g.dim() + 2)
      throw Error(ErrorCode::Parse, "row " + std::to_string(k) + " has " + std::to_string(cols.size()) + " columns");
    if (k >= g.size()) throw Error(ErrorCode::Parse, "more rows than grid nodes");
    const Vec x = g.point(k);
    for (std::size_t i = 0; i < g.dim(); ++i) {
      const double c = detail::parse_double(cols[i]);
      if (std::abs(c - x[i]) > 1e-9 * g.h(i))
        throw Error(ErrorCode::Parse, "row " + std::to_string(k) + " coordinates do not match the grid");
    }
    w.values[k] = detail::parse_double(cols[g.dim()]);
    w.roles[k] = parse_role(detail::trim(cols[g.dim() + 1]));
    ++k;
  };
  if (!line.empty() && line[0] != '#') take(line);
  while (std::getline(is, line)) {
    line = detail::trim(line);
    if (line.empty() || line[0] == '#') continue;
    take(line);
  }
  if (k != g.size())
    throw Error(ErrorCode::Parse, "expected " + std::to_string(g.size()) + " rows, got " + std::to_string(k));
  return w;
}

/// Sub-field over the nodes lying in [lower, upper].
inline ValueField crop(const ValueField& w, const Vec& lower, const Vec& upper) {
  const Grid& g = w.grid;
  std::array<int, kMaxDim> lo{}, n{};
  Vec nl(g.dim()), nu(g.dim());
  std::vector<int> counts(g.dim());
  for (std::size_t i = 0; i < g.dim(); ++i) {
    lo[i] = static_cast<int>(std::ceil((lower[i] - g.lower()[i]) / g.h(i) - 1e-9));
    const int hi = static_cast<int>(std::floor((upper[i] - g.lower()[i]) / g.h(i) + 1e-9));
    lo[i] = std::max(lo[i], 0);
    n[i] = std::min(hi, g.nodes(i) - 1) - lo[i] + 1;
    if (n[i] < 2) throw Error(ErrorCode::Config, "crop: window too small");
    counts[i] = n[i];
    nl[i] = g.coord(i, lo[i]);
    nu[i] = g.coord(i, lo[i] + n[i] - 1);
  }
  ValueField out{Grid(nl, nu, counts)};
  for (std::size_t k = 0; k < out.grid.size(); ++k) {
    auto m = out.grid.multi(k);
    for (std::size_t i = 0; i < g.dim(); ++i) m[i] += lo[i];
    const std::size_t src = g.flat(m);
    out.values[k] = w.values[src];
    out.roles[k] = w.roles[src];
  }
  return out;
}

}  // namespace exitctl
