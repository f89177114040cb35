#pragma once

// Minimal n-catenoids (n >= 3) in radially symmetric asymptotically flat
// metrics: Green inversion of T0 on exponentially weighted spaces, a frozen
// linearization Newton iteration, and the rescaling reduction.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "curvature.hpp"
#include "geometry.hpp"
#include "grid.hpp"
#include "metric.hpp"
#include "profile.hpp"
#include "quadrature.hpp"
#include "spectral.hpp"
#include "stencil.hpp"

namespace catenoid {

/// Rejects weights outside (-(n-2), 0). For n = 2 that interval is empty.
inline void check_weight(int n, double q) {
  if (n < 3) {
    std::ostringstream os;
    os << "constructor: n = " << n << " admits no weight q, since the interval (-(n-2), 0) is empty; "
       << "the isomorphism statement for T0 is vacuous in this dimension and no catenoid is constructed";
    throw std::invalid_argument(os.str());
  }
  if (!(q > -(n - 2.0) && q < 0.0)) {
    std::ostringstream os;
    os << "constructor: q = " << q << " lies outside the admissible interval (" << -(n - 2) << ", 0)";
    throw std::invalid_argument(os.str());
  }
}

inline double default_weight(int n) { return -(n - 2.0) / 2.0; }

// ---------------------------------------------------------------------------
// Kernel of T0

/// S1 = phi'/phi = tanh x and S2 = psi tanh x - phi^{2-n} (x = (n-1)s), the
/// Wronskian, omega, T, and the pair Y+- that decays at +-infinity:
/// Y+(s) = omega(s) tanh x + phi^{2-n}, Y-(s) = Y+(-s).
class JacobiBasis {
 public:
  explicit JacobiBasis(int n) : n_(checked(n)), table_(n) {}

  int dim() const { return n_; }
  const ProfileTable& table() const { return table_; }
  double T_total() const { return table_.T(); }
  double omega_tail(double s) const { return table_.omega(s); }

  double S1(double s) const { return std::tanh(x(s)); }
  double dS1(double s) const { return k() * sq(sech(x(s))); }
  double ddS1(double s) const { return -2.0 * k() * k() * sq(sech(x(s))) * std::tanh(x(s)); }

  double S2(double s) const { return table_.psi(s) * std::tanh(x(s)) - phi_pow(n_, s, 2.0 - n_); }
  double dS2(double s) const {
    return k() * (phi_pow(n_, s, 2.0 - n_) * std::tanh(x(s)) + table_.psi(s) * sq(sech(x(s))));
  }
  double ddS2(double s) const {
    const double th = std::tanh(x(s)), sh2 = sq(sech(x(s))), p = phi_pow(n_, s, 2.0 - n_);
    return k() * ((2.0 - n_) * p * th * th + k() * p * sh2 + p * sh2 - 2.0 * k() * table_.psi(s) * sh2 * th);
  }

  /// (n-1) cosh^{-(n-2)/(n-1)}((n-1)s).
  double W0(double s) const { return k() * phi_pow(n_, s, 2.0 - n_); }
  /// S1 S2' - S1' S2 from the jets.
  double wronskian(double s) const { return S1(s) * dS2(s) - dS1(s) * S2(s); }

  double Yp(double s) const { return table_.omega(s) * std::tanh(x(s)) + phi_pow(n_, s, 2.0 - n_); }
  double dYp(double s) const {
    return k() * (table_.omega(s) * sq(sech(x(s))) - phi_pow(n_, s, 2.0 - n_) * std::tanh(x(s)));
  }
  double Ym(double s) const { return Yp(-s); }
  double dYm(double s) const { return -dYp(-s); }
  /// Y- Y+' - Y-' Y+ = 2 T (n-1) phi^{2-n}.
  double green_wronskian(double s) const { return 2.0 * T_total() * W0(s); }

 private:
  static int checked(int n) {
    if (n < 3) check_weight(n, -0.5);
    return n;
  }
  double k() const { return n_ - 1.0; }
  double x(double s) const { return k() * s; }
  static double sq(double a) { return a * a; }

  int n_;
  ProfileTable table_;
};

/// T0 S = S'' + (n-2) tanh(x) S' + n(n-1) sech^2(x) S.
inline double t0_apply(int n, double s, double S, double dS, double ddS) {
  const double x = (n - 1) * s;
  const double sh = sech(x);
  return ddS + (n - 2) * std::tanh(x) * dS + n * (n - 1) * sh * sh * S;
}

/// T0 on uniform samples with stencil derivatives. Order 6 combines the
/// fourth-order stencils at spacings h and 2h by Richardson extrapolation
/// (fourth order within four nodes of either end).
inline std::vector<double> t0_apply(int n, const std::vector<double>& s, const std::vector<double>& S,
                                    int order = 4) {
  if (s.size() != S.size() || s.size() < 5) throw std::invalid_argument("t0_apply: bad samples");
  if (order != 2 && order != 4 && order != 6) throw std::invalid_argument("t0_apply: order must be 2, 4 or 6");
  const double h = s[1] - s[0];
  std::vector<double> out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (order == 6 && i >= 4 && i + 4 < s.size()) {
      const double d1h = fd::d1_centered(S[i - 2], S[i - 1], S[i + 1], S[i + 2], h, 4);
      const double d1H = fd::d1_centered(S[i - 4], S[i - 2], S[i + 2], S[i + 4], 2 * h, 4);
      const double d2h = fd::d2_centered(S[i - 2], S[i - 1], S[i], S[i + 1], S[i + 2], h, 4);
      const double d2H = fd::d2_centered(S[i - 4], S[i - 2], S[i], S[i + 2], S[i + 4], 2 * h, 4);
      out[i] = t0_apply(n, s[i], S[i], (16 * d1h - d1H) / 15, (16 * d2h - d2H) / 15);
    } else {
      const int o = order == 6 ? 4 : order;
      out[i] = t0_apply(n, s[i], S[i], fd::d1_at(S, i, h, o), fd::d2_at(S, i, h, o));
    }
  }
  return out;
}

/// T0 of a callable with fourth-order centered differences of step h.
inline std::function<double(double)> t0_apply(int n, std::function<double(double)> S, double h = 1e-3) {
  return [n, S = std::move(S), h](double s) {
    const double fm2 = S(s - 2 * h), fm1 = S(s - h), f0 = S(s), fp1 = S(s + h), fp2 = S(s + 2 * h);
    return t0_apply(n, s, f0, fd::d1_centered(fm2, fm1, fp1, fp2, h, 4),
                    fd::d2_centered(fm2, fm1, f0, fp1, fp2, h, 4));
  };
}

// ---------------------------------------------------------------------------
// Green solve

struct GreenSolution {
  int dim_n = 3;
  double q = -0.5;
  std::vector<double> s, S, dS, ddS, f;
  /// S = S1 [A - ...] + S2 [B + ...]: A = S'(0)/(n-1), B = -S(0).
  double A = 0.0, B = 0.0;
  /// The same constants from A + B T + I+ + I~+ = 0, -A + B T + I- + I~- = 0.
  double A_system = 0.0, B_system = 0.0;
  double I_plus = 0.0, I_minus = 0.0, It_plus = 0.0, It_minus = 0.0;
  double forcing_norm = 0.0;  // sup |f| phi^{-q}
  DecayFit decay;

  /// max |T0 S - f| with the sixth-order stencil; four nodes at each end skipped.
  double roundtrip_error() const {
    const auto t = t0_apply(dim_n, s, S, 6);
    double e = 0.0;
    for (std::size_t i = 4; i + 4 < s.size(); ++i) e = std::max(e, std::abs(t[i] - f[i]));
    return e;
  }
};

namespace detail {

/// Forcing on the whole line: a callable, or samples with local cubic
/// interpolation inside the window and exponential continuation outside.
class Forcing {
 public:
  Forcing(std::vector<double> s, std::function<double(double)> fn)
      : s_(std::move(s)), fn_(std::move(fn)) {}
  Forcing(std::vector<double> s, std::vector<double> f) : s_(std::move(s)), f_(std::move(f)) {
    const std::size_t n = f_.size();
    const double h = s_[1] - s_[0];
    auto rate = [&](double edge, double inner) {
      if (edge == 0.0 || inner == 0.0 || (edge > 0) != (inner > 0) || std::abs(edge) >= std::abs(inner)) return 0.0;
      return std::log(std::abs(inner / edge)) / h;  // decay rate > 0
    };
    kl_ = rate(f_[0], f_[1]);
    kr_ = rate(f_[n - 1], f_[n - 2]);
  }

  bool sampled() const { return !fn_; }
  double node(std::size_t i) const { return fn_ ? fn_(s_[i]) : f_[i]; }

  /// Value at sigma inside cell i.
  double in_cell(std::size_t i, double sigma) const {
    if (fn_) return fn_(sigma);
    const std::size_t n = s_.size();
    const std::size_t j0 = i == 0 ? 0 : std::min(i - 1, n - 4);
    double out = 0.0;
    for (std::size_t a = j0; a < j0 + 4; ++a) {
      double l = 1.0;
      for (std::size_t b = j0; b < j0 + 4; ++b)
        if (b != a) l *= (sigma - s_[b]) / (s_[a] - s_[b]);
      out += l * f_[a];
    }
    return out;
  }

  /// Value beyond the window.
  double outside(double sigma) const {
    if (fn_) return fn_(sigma);
    if (sigma > s_.back()) return kr_ > 0.0 ? f_.back() * std::exp(-kr_ * (sigma - s_.back())) : 0.0;
    return kl_ > 0.0 ? f_.front() * std::exp(-kl_ * (s_.front() - sigma)) : 0.0;
  }

 private:
  std::vector<double> s_;
  std::function<double(double)> fn_;
  std::vector<double> f_;
  double kl_ = 0.0, kr_ = 0.0;
};

/// int_a^{+-inf} g via sigma = a -+ log t on dyadic panels of t.
inline double line_tail(const std::function<double(double)>& g, double a, int sign) {
  auto integrand = [&](double t) { return g(a - sign * std::log(t)) / t; };
  const double v = quad::graded_unit_integral(integrand, 90, 12);
  if (!std::isfinite(v)) throw std::domain_error("t0_green_solve: non-finite tail integral");
  return v;
}

}  // namespace detail

inline GreenSolution green_solve_impl(const JacobiBasis& b, double q, const std::vector<double>& s,
                                      const detail::Forcing& F) {
  const int n = b.dim();
  check_weight(n, q);
  const std::size_t N = s.size();
  if (N < 9) throw std::invalid_argument("t0_green_solve: need at least 9 nodes");
  const double h = (s.back() - s.front()) / (N - 1.0);
  for (std::size_t i = 0; i + 1 < N; ++i)
    if (std::abs(s[i + 1] - s[i] - h) > 1e-9 * h) throw std::invalid_argument("t0_green_solve: nodes must be uniform");
  const std::size_t mid = (N - 1) / 2;
  if (N % 2 == 0 || std::abs(s[mid]) > 1e-12 || std::abs(s.front() + s.back()) > 1e-9)
    throw std::invalid_argument("t0_green_solve: grid must be symmetric with a node at s = 0");

  GreenSolution g;
  g.dim_n = n;
  g.q = q;
  g.s = s;
  g.f.resize(N);
  for (std::size_t i = 0; i < N; ++i) {
    g.f[i] = F.node(i);
    if (!std::isfinite(g.f[i])) throw std::invalid_argument("t0_green_solve: non-finite forcing");
  }
  g.S.assign(N, 0.0);
  g.dS.assign(N, 0.0);
  g.ddS.assign(N, 0.0);
  const bool zero = std::all_of(g.f.begin(), g.f.end(), [](double v) { return v == 0.0; });
  if (zero && F.sampled()) return g;
  {
    const auto wn = weighted_norm_1d(n, s, g.f, NormKind::sup_weighted, 0, q);
    g.forcing_norm = wn.value;
    if (!zero && !wn.bounded)
      throw std::invalid_argument("t0_green_solve: forcing is not in the weighted class for q = " + std::to_string(q));
  }

  const quad::Rule& rule = quad::cached_rule(10);
  auto cell = [&](std::size_t i, auto&& weight) {
    return quad::gauss_legendre_integrate(rule, [&](double t) { return weight(t) * F.in_cell(i, t); }, s[i], s[i + 1]);
  };
  auto pw = [n](double t) { return phi_pow(n, t, n - 2.0); };
  auto wL = [&](double t) { return b.Ym(t) * pw(t); };
  auto wR = [&](double t) { return b.Yp(t) * pw(t); };

  std::vector<double> L(N, 0.0), R(N, 0.0);
  L[0] = detail::line_tail([&](double t) { return wL(t) * F.outside(t); }, s.front(), -1);
  R[N - 1] = detail::line_tail([&](double t) { return wR(t) * F.outside(t); }, s.back(), +1);
  for (std::size_t i = 0; i + 1 < N; ++i) L[i + 1] = L[i] + cell(i, wL);
  for (std::size_t i = N - 1; i-- > 0;) R[i] = R[i + 1] + cell(i, wR);

  const double W = 2.0 * b.T_total() * (n - 1.0);
  for (std::size_t i = 0; i < N; ++i) {
    const double t = s[i];
    g.S[i] = (b.Yp(t) * L[i] + b.Ym(t) * R[i]) / W;
    g.dS[i] = (b.dYp(t) * L[i] + b.dYm(t) * R[i]) / W;
    const double x = (n - 1) * t, sh = sech(x);
    g.ddS[i] = g.f[i] - (n - 2) * std::tanh(x) * g.dS[i] - n * (n - 1) * sh * sh * g.S[i];
  }
  g.A = g.dS[mid] / (n - 1.0);
  g.B = -g.S[mid];

  // the 2x2 system, with f(-sigma) on the negative side
  auto one = [](double) { return 1.0; };
  auto wt_plus = [&](double t) { return b.omega_tail(t) * pw(t) * b.S1(t); };
  auto wt_minus = [&](double t) { return b.omega_tail(-t) * pw(t) * b.S1(-t); };
  double ip = detail::line_tail([&](double t) { return F.outside(t); }, s.back(), +1);
  double im = detail::line_tail([&](double t) { return F.outside(t); }, s.front(), -1);
  double itp = detail::line_tail([&](double t) { return wt_plus(t) * F.outside(t); }, s.back(), +1);
  double itm = detail::line_tail([&](double t) { return wt_minus(t) * F.outside(t); }, s.front(), -1);
  for (std::size_t i = 0; i + 1 < N; ++i) {
    if (i >= mid) {
      ip += cell(i, one);
      itp += cell(i, wt_plus);
    } else {
      im += cell(i, one);
      itm += cell(i, wt_minus);
    }
  }
  g.I_plus = ip / (n - 1.0);
  g.I_minus = im / (n - 1.0);
  g.It_plus = itp / (n - 1.0);
  g.It_minus = itm / (n - 1.0);
  g.A_system = -0.5 * (g.I_plus + g.It_plus - g.I_minus - g.It_minus);
  g.B_system = -0.5 * (g.I_plus + g.It_plus + g.I_minus + g.It_minus) / b.T_total();

  if (std::any_of(g.S.begin(), g.S.end(), [](double v) { return v != 0.0; })) g.decay = decay_fit(s, g.S, n);
  return g;
}

/// T0 S = f with S -> 0 at both ends, f given as a callable.
inline GreenSolution t0_green_solve(const JacobiBasis& b, double q, const std::vector<double>& s,
                                    std::function<double(double)> f) {
  if (!f) throw std::invalid_argument("t0_green_solve: empty forcing");
  return green_solve_impl(b, q, s, detail::Forcing(s, std::move(f)));
}

/// Same with f sampled on s; beyond the window f continues exponentially
/// from its last two samples when they decay, and vanishes otherwise.
inline GreenSolution t0_green_solve(const JacobiBasis& b, double q, const std::vector<double>& s,
                                    const std::vector<double>& f) {
  if (f.size() != s.size()) throw std::invalid_argument("t0_green_solve: sample count mismatch");
  return green_solve_impl(b, q, s, detail::Forcing(s, f));
}

/// Symmetric uniform grid on [-s_max, s_max] with an odd node count.
inline std::vector<double> symmetric_grid(double s_max, std::size_t n_s) {
  if (!(s_max > 0.0) || n_s < 9 || n_s % 2 == 0)
    throw std::invalid_argument("symmetric_grid: need s_max > 0 and an odd count >= 9");
  std::vector<double> s(n_s);
  const std::size_t mid = (n_s - 1) / 2;
  const double h = s_max / mid;
  for (std::size_t i = 0; i < n_s; ++i) s[i] = (static_cast<double>(i) - static_cast<double>(mid)) * h;
  return s;
}

// ---------------------------------------------------------------------------
// Radial metrics

/// Isotropic radial metric (1 + h(r)) delta on r >= r0.
struct RadialMetricSpec {
  int dim_n = 3;
  double r0 = 1.0;
  RadialProfile h;  // empty: flat
  std::string kind = "flat";
  double mass = 0.0;  // Schwarzschild only
  int k = 2;
  double norm_Mk = 0.0;  // sum_a sup_{r >= r0} |h^{(a)}| r^{n-1+a}, over all n+1 diagonal entries

  bool flat() const { return !h; }
};

/// The weighted norm with a <= k <= 2 of an isotropic profile, sup over a
/// geometric grid on [r_min, 1e6 r_min].
inline double sampled_mk_norm(const RadialProfile& h, int n, double r_min, int k = 2) {
  if (!h) return 0.0;
  if (k < 0 || k > 2) throw std::invalid_argument("sampled_mk_norm: k must lie in [0, 2]");
  double sup[3] = {0, 0, 0};
  const int pts = 6001;
  for (int i = 0; i < pts; ++i) {
    const double r = r_min * std::pow(1e6, i / (pts - 1.0));
    const RadialJet j = h(r);
    const double d[3] = {j.h, j.dh, j.ddh};
    for (int a = 0; a <= k; ++a) sup[a] = std::max(sup[a], std::abs(d[a]) * std::pow(r, n - 1 + a));
  }
  return (n + 1) * (sup[0] + sup[1] + sup[2]);
}

/// The weighted norm of h = (1 + m/(2 r^{n-1}))^{4/(n-1)} - 1 over r >= c/2.
/// With y = m/(2 r^{n-1}), r^{n-1+a} h^{(a)} = (m/2) sum_l binom(p, l) P_a(l) y^{l-1},
/// P_a(l) = prod_{j<a} (-(n-1) l - j); the supremum over y in (0, y_max] is
/// taken on a dense grid of that closed form.
inline double schwarzschild_mk_norm(double m, int n, double c, int k = 2) {
  if (m < 0.0) throw std::invalid_argument("schwarzschild_mk_norm: m must be nonnegative");
  if (n < 2 || !(c > 0.0) || k < 0) throw std::invalid_argument("schwarzschild_mk_norm: bad arguments");
  if (m == 0.0) return 0.0;
  const double p = 4.0 / (n - 1.0);
  const double ymax = m / (2.0 * std::pow(0.5 * c, n - 1));
  if (!(ymax < 0.9)) throw std::domain_error("schwarzschild_mk_norm: r >= c/2 reaches the strong-field region");
  auto Q = [&](int a, double y) {
    double sum = 0.0, binom = p, yl = 1.0;
    for (int l = 1; l < 2000; ++l) {
      double P = 1.0;
      for (int j = 0; j < a; ++j) P *= -(n - 1.0) * l - j;
      const double term = binom * P * yl;
      sum += term;
      if (l > 3 && std::abs(term) < 1e-17 * std::abs(sum)) break;
      binom *= (p - l) / (l + 1.0);
      yl *= y;
    }
    return 0.5 * m * sum;
  };
  double total = 0.0;
  for (int a = 0; a <= k; ++a) {
    double sup = 0.0;
    for (int i = 0; i <= 400; ++i) sup = std::max(sup, std::abs(Q(a, ymax * i / 400.0)));
    total += sup;
  }
  return (n + 1) * total;
}

/// Norm of the leading term 2m/((n-1) r^{n-1}) alone; exactly linear in m.
inline double schwarzschild_leading_norm(double m, int n, int k = 2) {
  double total = 0.0;
  for (int a = 0; a <= k; ++a) {
    double P = 1.0;
    for (int j = 0; j < a; ++j) P *= (n - 1.0) + j;
    total += 2.0 * m / (n - 1.0) * P;
  }
  return (n + 1) * total;
}

inline RadialMetricSpec flat_radial_metric(int n, double r0) {
  RadialMetricSpec g;
  g.dim_n = n;
  g.r0 = r0;
  return g;
}

/// (1 + m/(2 r^{n-1}))^{4/(n-1)} delta.
inline RadialMetricSpec schwarzschild_radial_metric(double m, int n, double r0) {
  if (m < 0.0) throw std::invalid_argument("schwarzschild_radial_metric: m must be nonnegative");
  if (!(r0 > 0.0)) throw std::invalid_argument("schwarzschild_radial_metric: r0 must be positive");
  RadialMetricSpec g;
  g.dim_n = n;
  g.r0 = r0;
  g.mass = m;
  g.kind = "schwarzschild";
  if (m == 0.0) return g;
  const double p = 4.0 / (n - 1.0);
  g.h = [m, n, p](double r) {
    const double y = m / (2.0 * std::pow(r, n - 1));
    const double base = std::pow(1.0 + y, p - 2.0);
    RadialJet j;
    j.h = std::expm1(p * std::log1p(y));
    // h' = -4 (1+y)^{p-1} y / r
    j.dh = -4.0 * base * (1.0 + y) * y / r;
    j.ddh = -4.0 * base * (y / (r * r)) * ((p - 1.0) * (-(n - 1.0)) * y + (1.0 + y) * (-(n - 1.0) - 1.0));
    return j;
  };
  g.norm_Mk = schwarzschild_mk_norm(m, n, 2.0 * r0, 2);
  return g;
}

/// Tabulated profile, natural cubic spline inside and power-law tail outside.
inline RadialMetricSpec spline_radial_metric(int n, double r0, std::vector<double> r, std::vector<double> h,
                                             double tail_power) {
  if (!r.empty() && r.front() > r0) throw std::invalid_argument("spline_radial_metric: table must start at or below r0");
  RadialMetricSpec g;
  g.dim_n = n;
  g.r0 = r0;
  g.kind = "spline";
  RadialSpline sp(std::move(r), std::move(h), tail_power);
  g.h = [sp](double x) { return sp(x); };
  g.norm_Mk = sampled_mk_norm(g.h, n, r0, 2);
  return g;
}

/// (2 r0 / c)^{n-1} times the norm over r >= c/2: the smallness quantity of
/// the construction at neck c.
inline double effective_metric_norm(const RadialMetricSpec& g, double c) {
  if (g.flat()) return 0.0;
  const double lam = 2.0 * g.r0 / c;
  const double base = g.kind == "schwarzschild" ? schwarzschild_mk_norm(g.mass, g.dim_n, c, 2)
                                                : sampled_mk_norm(g.h, g.dim_n, 0.5 * c, 2);
  return std::pow(lam, g.dim_n - 1) * base;
}

// ---------------------------------------------------------------------------
// Construction

struct ConstructOptions {
  double s_max = 20.0;
  std::size_t n_s = 2001;
  double q = std::numeric_limits<double>::quiet_NaN();  // NaN: -(n-2)/2
  double tol = 1e-8;
  int max_iter = 25;
  double epsilon = 0.1;  // smallness threshold for the warning
  int floor_order = 4;   // stencil order of the discretization-floor measurement
};

struct ConstructionResult {
  int dim_n = 3;
  double neck = 1.0, q = -0.5;
  std::vector<double> s, omega, domega, ddomega;
  double residual_H = 0.0;             // sup |H| with solver jets
  double residual_H_conformal = 0.0;   // same surface, conformal route
  double discretization_floor = 0.0;   // sup |H| with stencil derivatives of the samples
  int iterations = 0;
  bool converged = false;
  bool failed = false;
  std::vector<double> newton_history;  // sup |H| before each update
  std::vector<double> contraction;     // history[k+1] / history[k]
  double quadratic_ratio_max = 0.0;    // max history[k+1] / history[k]^2
  DecayFit decay;
  double decay_rate = 0.0;
  bool decay_in_range = false;
  double metric_norm = 0.0;
  bool smallness_ok = true;
  std::string message, warning;

  PerturbationField field() const {
    return PerturbationField(CylinderGrid(s.back(), s.size(), 1), omega);
  }

  void write_csv(std::ostream& os) const {
    os << "s,omega,domega,ddomega\n";
    os.precision(17);
    for (std::size_t i = 0; i < s.size(); ++i)
      os << s[i] << ',' << omega[i] << ',' << domega[i] << ',' << ddomega[i] << '\n';
  }

  void write_history_csv(std::ostream& os) const {
    os << "iteration,residual_H\n";
    os.precision(17);
    for (std::size_t i = 0; i < newton_history.size(); ++i) os << i << ',' << newton_history[i] << '\n';
  }
};

namespace detail {

inline std::vector<double> radial_H(const JacobiBasis& b, const CatenoidSpec& spec, const RadialMetricSpec& g,
                                    const std::vector<double>& s, const std::vector<double>& w,
                                    const std::vector<double>& dw, const std::vector<double>& ddw,
                                    bool conformal = false) {
  std::vector<double> H(s.size());
  const RadialProfile* eta = g.flat() ? nullptr : &g.h;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const ProfileCurve pc = normal_graph_profile(spec, b.table().jet(s[i]), w[i], dw[i], ddw[i]);
    H[i] = conformal ? radial_mean_curvature_conformal(spec.dim_n, pc, eta) : radial_mean_curvature(spec.dim_n, pc, eta);
  }
  return H;
}

inline double sup_abs(const std::vector<double>& v, std::size_t skip = 0) {
  double m = 0.0;
  for (std::size_t i = skip; i + skip < v.size(); ++i) m = std::max(m, std::abs(v[i]));
  return m;
}

}  // namespace detail

/// Omega_{k+1} = Omega_k + S_k with T0 S_k = -c^2 phi^2 H(h, Omega_k): the
/// linearization is frozen at the flat catenoid, where D_2 H = c^{-2} phi^{-2} T0.
inline ConstructionResult newton_construct(int n, const RadialMetricSpec& metric, double c,
                                           const ConstructOptions& opt = {}) {
  const double q = std::isnan(opt.q) ? default_weight(n) : opt.q;
  check_weight(n, q);
  if (metric.dim_n != n) throw std::invalid_argument("newton_construct: metric dimension differs from n");
  if (!(c > 0.0) || c < 2.0 * metric.r0 * (1.0 - 1e-12))
    throw std::invalid_argument("newton_construct: neck must satisfy c >= 2 r0");
  if (!(opt.tol > 0.0) || opt.max_iter < 1) throw std::invalid_argument("newton_construct: bad tolerance or iteration cap");

  const JacobiBasis basis(n);
  const CatenoidSpec spec(c, n);
  ConstructionResult r;
  r.dim_n = n;
  r.neck = c;
  r.q = q;
  r.s = symmetric_grid(opt.s_max, opt.n_s);
  const std::size_t N = r.s.size();
  r.omega.assign(N, 0.0);
  r.domega.assign(N, 0.0);
  r.ddomega.assign(N, 0.0);
  r.metric_norm = effective_metric_norm(metric, c);
  r.smallness_ok = r.metric_norm < opt.epsilon;
  if (!r.smallness_ok) {
    std::ostringstream os;
    os << "metric norm " << r.metric_norm << " is not below the threshold " << opt.epsilon << "; attempting anyway";
    r.warning = os.str();
  }

  std::vector<double> phi2(N);
  for (std::size_t i = 0; i < N; ++i) phi2[i] = phi_pow(n, r.s[i], 2.0);

  std::vector<double> prev_w, prev_dw, prev_ddw;
  for (int it = 0; it < opt.max_iter; ++it) {
    const auto H = detail::radial_H(basis, spec, metric, r.s, r.omega, r.domega, r.ddomega);
    const double res = detail::sup_abs(H);
    if (!std::isfinite(res) || (!r.newton_history.empty() && res > r.newton_history.back())) {
      r.failed = true;
      r.message = std::isfinite(res) ? "residual increased; keeping the previous iterate" : "non-finite mean curvature";
      r.omega = prev_w;
      r.domega = prev_dw;
      r.ddomega = prev_ddw;
      break;
    }
    r.newton_history.push_back(res);
    r.iterations = it + 1;
    if (res < opt.tol) {
      r.converged = true;
      break;
    }
    if (it + 1 == opt.max_iter) break;
    std::vector<double> f(N);
    for (std::size_t i = 0; i < N; ++i) f[i] = -c * c * phi2[i] * H[i];
    const GreenSolution d = t0_green_solve(basis, q, r.s, f);
    prev_w = r.omega;
    prev_dw = r.domega;
    prev_ddw = r.ddomega;
    for (std::size_t i = 0; i < N; ++i) {
      r.omega[i] += d.S[i];
      r.domega[i] += d.dS[i];
      r.ddomega[i] += d.ddS[i];
    }
    if (detail::sup_abs(r.omega) > c / 3.0) {
      r.failed = true;
      r.message = "graph condition violated (|Omega| > c/3)";
      break;
    }
  }
  if (!r.converged && !r.failed) {
    r.failed = true;
    r.message = "no convergence within " + std::to_string(opt.max_iter) + " iterations; best iterate kept";
  }
  if (r.converged) r.message = "converged in " + std::to_string(r.iterations) + " iteration(s)";

  r.residual_H = detail::sup_abs(detail::radial_H(basis, spec, metric, r.s, r.omega, r.domega, r.ddomega));
  r.residual_H_conformal =
      detail::sup_abs(detail::radial_H(basis, spec, metric, r.s, r.omega, r.domega, r.ddomega, true));
  {
    const double h = r.s[1] - r.s[0];
    std::vector<double> d1(N), d2(N);
    for (std::size_t i = 0; i < N; ++i) {
      d1[i] = fd::d1_at(r.omega, i, h, opt.floor_order);
      d2[i] = fd::d2_at(r.omega, i, h, opt.floor_order);
    }
    r.discretization_floor = detail::sup_abs(detail::radial_H(basis, spec, metric, r.s, r.omega, d1, d2), 3);
  }
  for (std::size_t k = 0; k + 1 < r.newton_history.size(); ++k) {
    const double a = r.newton_history[k], b2 = r.newton_history[k + 1];
    r.contraction.push_back(b2 / a);
    r.quadratic_ratio_max = std::max(r.quadratic_ratio_max, b2 / (a * a));
  }
  if (detail::sup_abs(r.omega) > 0.0) {
    r.decay = decay_fit(r.s, r.omega, n);
    r.decay_rate = r.decay.fitted_rate;
    r.decay_in_range = !r.decay.flagged && r.decay_rate > -(n - 2.0) && r.decay_rate < 0.0;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Rescaling

struct RescaledMetric {
  RadialMetricSpec metric;    // h~(y) = h(y / lambda) on the same r0
  double factor = 1.0;        // lambda = 2 r0 / c
  double canonical_neck = 0.0;  // 2 r0
};

/// Phi(x) = (2 r0 / c) x maps the catenoid of neck c to the one of neck 2 r0;
/// h~ = h o Phi^{-1}. A Schwarzschild mass m becomes m (2 r0 / c)^{n-1}.
inline RescaledMetric rescale_reduce(const RadialMetricSpec& g, double c) {
  if (!(c > 0.0) || c < 2.0 * g.r0 * (1.0 - 1e-12)) throw std::invalid_argument("rescale_reduce: requires c >= 2 r0");
  RescaledMetric out;
  const double lam = 2.0 * g.r0 / c;
  out.factor = lam;
  out.canonical_neck = 2.0 * g.r0;
  out.metric = g;
  if (g.kind == "schwarzschild") {
    out.metric = schwarzschild_radial_metric(g.mass * std::pow(lam, g.dim_n - 1), g.dim_n, g.r0);
  } else if (!g.flat()) {
    out.metric.h = [h = g.h, lam](double y) {
      const RadialJet j = h(y / lam);
      return RadialJet{j.h, j.dh / lam, j.ddh / (lam * lam)};
    };
    out.metric.kind = g.kind + "_rescaled";
    out.metric.norm_Mk = sampled_mk_norm(out.metric.h, g.dim_n, g.r0, 2);
  }
  return out;
}

struct RescaleCheck {
  ConstructionResult direct;     // neck c, metric h
  ConstructionResult canonical;  // neck 2 r0, metric h~
  double factor = 1.0;
  double sup_difference = 0.0;   // sup |Omega_direct - Omega~ / lambda|
};

inline RescaleCheck rescale_check(int n, const RadialMetricSpec& g, double c, const ConstructOptions& opt = {}) {
  RescaleCheck rc;
  const RescaledMetric rm = rescale_reduce(g, c);
  rc.factor = rm.factor;
  rc.direct = newton_construct(n, g, c, opt);
  rc.canonical = newton_construct(n, rm.metric, rm.canonical_neck, opt);
  for (std::size_t i = 0; i < rc.direct.omega.size(); ++i)
    rc.sup_difference = std::max(rc.sup_difference, std::abs(rc.direct.omega[i] - rc.canonical.omega[i] / rm.factor));
  return rc;
}

}  // namespace catenoid
