#pragma once

// Catenoid profile functions phi(s) = cosh((n-1)s)^(1/(n-1)),
// psi(s) = int_0^s phi^(2-n), and the tail omega(s) = int_s^inf phi^(2-n).

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "quadrature.hpp"

namespace catenoid {

/// log(cosh x) without overflow.
inline double log_cosh(double x) {
  const double a = std::abs(x);
  return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
}

inline double sech(double x) {
  const double a = std::abs(x);
  if (a > 700.0) return 0.0;
  const double e = std::exp(-a);
  return 2.0 * e / (1.0 + e * e);
}

struct ProfilePair {
  double phi = 1.0;
  double psi = 0.0;
  double dphi = 0.0;
};

/// Everything the radial geometry needs at one s.
struct ProfileJet {
  double phi = 1.0, dphi = 0.0, ddphi = 0.0;
  double psi = 0.0, dpsi = 1.0, ddpsi = 0.0;
  double tanh_x = 0.0, sech_x = 1.0;  // x = (n-1)s
};

namespace detail {
inline void check_dim(int n) {
  if (n < 2) throw std::invalid_argument("profile: dimension n must be >= 2");
}
inline double dpsi_value(int n, double s) {
  if (n == 2) return 1.0;
  const double p = static_cast<double>(n - 2) / static_cast<double>(n - 1);
  return std::exp(-p * log_cosh((n - 1) * s));
}
}  // namespace detail

/// phi^a for any real a, via log cosh.
inline double phi_pow(int n, double s, double a) {
  return std::exp(a * log_cosh((n - 1) * s) / static_cast<double>(n - 1));
}

/// Profile at s; psi by adaptive Simpson from 0 to s (exact for n = 2).
inline ProfilePair profile(int n, double s) {
  detail::check_dim(n);
  ProfilePair p;
  const double x = (n - 1) * s;
  p.phi = phi_pow(n, s, 1.0);
  p.dphi = p.phi * std::tanh(x);
  if (n == 2) {
    p.psi = s;
  } else if (s != 0.0) {
    auto f = [n](double t) { return detail::dpsi_value(n, t); };
    p.psi = quad::adaptive_simpson(f, 0.0, s, 1e-13).value;
  }
  return p;
}

/// Closed-form series for omega(s) = int_s^inf phi^(2-n), valid for s > 0
/// and fast once (n-1)s >~ 2:
///   omega = 2^p/(n-1) sum_k binom(-p,k) e^{-(p+2k)X}/(p+2k),  X = (n-1)s.
inline double omega_series(int n, double s) {
  if (n <= 2) throw std::invalid_argument("omega_series: requires n >= 3");
  if (s <= 0.0) throw std::invalid_argument("omega_series: requires s > 0");
  const double p = static_cast<double>(n - 2) / static_cast<double>(n - 1);
  const double X = (n - 1) * s;
  const double y = std::exp(-2.0 * X);
  double binom = 1.0, yk = 1.0, sum = 0.0;
  for (int k = 0; k < 400; ++k) {
    const double term = binom * yk / (p + 2.0 * k);
    sum += term;
    if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    binom *= (-p - k) / (k + 1.0);
    yk *= y;
  }
  return std::pow(2.0, p) / (n - 1) * std::exp(-p * X) * sum;
}

/// Tabulated psi on [0, s_switch] (cell-wise adaptive Simpson, quintic
/// Hermite interpolation using the closed-form psi', psi''), omega series
/// beyond. Immutable after construction.
class ProfileTable {
 public:
  explicit ProfileTable(int n, double s_switch = 3.0, std::size_t cells = 768) : n_(n) {
    detail::check_dim(n);
    if (n_ == 2) return;
    s_switch_ = s_switch;
    h_ = s_switch / static_cast<double>(cells);
    psi_.assign(cells + 1, 0.0);
    auto f = [n](double t) { return detail::dpsi_value(n, t); };
    for (std::size_t i = 0; i < cells; ++i) {
      const double a = h_ * static_cast<double>(i);
      psi_[i + 1] = psi_[i] + quad::adaptive_simpson(f, a, a + h_, 1e-16).value;
    }
    T_ = psi_.back() + omega_series(n_, s_switch_);
  }

  int dim() const { return n_; }
  /// T = int_0^inf phi^(2-n); infinite for n = 2.
  double T() const { return n_ == 2 ? INFINITY : T_; }

  double psi(double s) const {
    if (n_ == 2) return s;
    return s < 0.0 ? -psi_abs(-s) : psi_abs(s);
  }

  /// omega(s) = T - psi(s), carried with relative accuracy for large s.
  double omega(double s) const {
    if (n_ == 2) throw std::domain_error("omega: divergent for n = 2");
    if (s >= s_switch_) return omega_series(n_, s);
    if (s >= 0.0) return T_ - psi_abs(s);
    return T_ + psi_abs(-s);
  }

  ProfileJet jet(double s) const {
    ProfileJet j;
    const double x = (n_ - 1) * s;
    j.tanh_x = std::tanh(x);
    j.sech_x = sech(x);
    j.phi = phi_pow(n_, s, 1.0);
    j.dphi = j.phi * j.tanh_x;
    j.ddphi = j.phi * (j.tanh_x * j.tanh_x + (n_ - 1) * j.sech_x * j.sech_x);
    j.psi = psi(s);
    j.dpsi = detail::dpsi_value(n_, s);
    j.ddpsi = -(n_ - 2) * j.dpsi * j.tanh_x;
    return j;
  }

  ProfilePair pair(double s) const {
    const ProfileJet j = jet(s);
    return {j.phi, j.psi, j.dphi};
  }

 private:
  double psi_abs(double s) const {
    if (s >= s_switch_) return T_ - omega_series(n_, s);
    const std::size_t cells = psi_.size() - 1;
    std::size_t i = static_cast<std::size_t>(s / h_);
    if (i >= cells) i = cells - 1;
    const double a = h_ * static_cast<double>(i);
    const double t = (s - a) / h_;
    auto d1 = [this](double x) { return detail::dpsi_value(n_, x); };
    auto d2 = [this](double x) {
      return -(n_ - 2) * detail::dpsi_value(n_, x) * std::tanh((n_ - 1) * x);
    };
    const double y0 = psi_[i], y1 = psi_[i + 1];
    const double p0 = d1(a), p1 = d1(a + h_), q0 = d2(a), q1 = d2(a + h_);
    const double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
    const double H0 = 1 - 10 * t3 + 15 * t4 - 6 * t5;
    const double H1 = t - 6 * t3 + 8 * t4 - 3 * t5;
    const double H2 = 0.5 * (t2 - 3 * t3 + 3 * t4 - t5);
    const double H3 = 0.5 * (t3 - 2 * t4 + t5);
    const double H4 = -4 * t3 + 7 * t4 - 3 * t5;
    const double H5 = 10 * t3 - 15 * t4 + 6 * t5;
    return y0 * H0 + h_ * p0 * H1 + h_ * h_ * q0 * H2 + y1 * H5 + h_ * p1 * H4 +
           h_ * h_ * q1 * H3;
  }

  int n_ = 2;
  double s_switch_ = 0.0;
  double h_ = 0.0;
  double T_ = 0.0;
  std::vector<double> psi_;
};

}  // namespace catenoid
