#pragma once

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>

namespace exitctl {

inline constexpr std::size_t kMaxDim = 4;

/// Small fixed-capacity vector used for states and controls. No heap
/// traffic, so evaluators can be called in tight solver loops.
class Vec {
 public:
  Vec() = default;
  explicit Vec(std::size_t n, double fill = 0.0) : n_(n) {
    assert(n <= kMaxDim);
    std::fill_n(v_.begin(), n, fill);
  }
  Vec(std::initializer_list<double> init) : n_(init.size()) {
    assert(init.size() <= kMaxDim);
    std::copy(init.begin(), init.end(), v_.begin());
  }
  explicit Vec(std::span<const double> s) : n_(s.size()) {
    assert(s.size() <= kMaxDim);
    std::copy(s.begin(), s.end(), v_.begin());
  }

  std::size_t size() const noexcept { return n_; }
  bool empty() const noexcept { return n_ == 0; }
  double& operator[](std::size_t i) { return v_[i]; }
  double operator[](std::size_t i) const { return v_[i]; }
  double* begin() noexcept { return v_.data(); }
  double* end() noexcept { return v_.data() + n_; }
  const double* begin() const noexcept { return v_.data(); }
  const double* end() const noexcept { return v_.data() + n_; }
  std::span<const double> span() const noexcept { return {v_.data(), n_}; }

  Vec& operator+=(const Vec& o) {
    for (std::size_t i = 0; i < n_; ++i) v_[i] += o.v_[i];
    return *this;
  }
  Vec& operator-=(const Vec& o) {
    for (std::size_t i = 0; i < n_; ++i) v_[i] -= o.v_[i];
    return *this;
  }
  Vec& operator*=(double s) {
    for (std::size_t i = 0; i < n_; ++i) v_[i] *= s;
    return *this;
  }
  friend Vec operator+(Vec a, const Vec& b) { return a += b; }
  friend Vec operator-(Vec a, const Vec& b) { return a -= b; }
  friend Vec operator*(Vec a, double s) { return a *= s; }
  friend Vec operator*(double s, Vec a) { return a *= s; }
  friend Vec operator-(Vec a) { return a *= -1.0; }

  friend bool operator==(const Vec& a, const Vec& b) {
    return a.n_ == b.n_ && std::equal(a.begin(), a.end(), b.begin());
  }

 private:
  std::array<double, kMaxDim> v_{};
  std::size_t n_ = 0;
};

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

inline bool all_finite(const Vec& a) {
  return std::all_of(a.begin(), a.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace exitctl
