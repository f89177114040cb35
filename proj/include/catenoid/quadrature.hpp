#pragma once

// One-dimensional quadrature: Gauss-Legendre rules, adaptive Simpson,
// adaptive Gauss-Kronrod (G7/K15) and fourth-order cumulative integration
// of uniformly sampled data.

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace catenoid::quad {

struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Legendre nodes and weights on [-1, 1] (Newton on the three-term
/// recurrence, converged to machine precision).
inline Rule gauss_legendre(std::size_t n) {
  if (n == 0) throw std::invalid_argument("gauss_legendre: n must be positive");
  Rule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  const std::size_t half = (n + 1) / 2;
  for (std::size_t i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                        (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
        p0 = p1;
        p1 = pk;
      }
      if (n == 1) { p1 = x; p0 = 1.0; }
      dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // recompute derivative at the converged node
    double p0 = 1.0, p1 = x;
    for (std::size_t k = 2; k <= n; ++k) {
      const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
      p0 = p1;
      p1 = pk;
    }
    if (n == 1) { p1 = x; p0 = 1.0; }
    dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.nodes[i] = -x;
    r.nodes[n - 1 - i] = x;
    r.weights[i] = w;
    r.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) r.nodes[n / 2] = 0.0;
  return r;
}

/// Rules of orders up to 64 computed once and reused.
inline const Rule& cached_rule(std::size_t n) {
  static const std::array<Rule, 65> table = [] {
    std::array<Rule, 65> t{};
    for (std::size_t k = 1; k < t.size(); ++k) t[k] = gauss_legendre(k);
    return t;
  }();
  if (n == 0 || n >= table.size()) throw std::invalid_argument("cached_rule: order must be in [1, 64]");
  return table[n];
}

template <class F>
double gauss_legendre_integrate(const Rule& rule, F&& f, double a, double b) {
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i)
    sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
  return half * sum;
}

/// Composite Gauss-Legendre on `panels` equal sub-intervals.
template <class F>
double composite_gauss_legendre(F&& f, double a, double b, std::size_t panels,
                                std::size_t order = 16) {
  const Rule& rule = order <= 64 ? cached_rule(order) : gauss_legendre(order);
  const double h = (b - a) / static_cast<double>(panels);
  double sum = 0.0;
  for (std::size_t p = 0; p < panels; ++p) {
    const double lo = a + h * static_cast<double>(p);
    sum += gauss_legendre_integrate(rule, f, lo, lo + h);
  }
  return sum;
}

/// int_0^1 f on dyadic panels [2^{-k-1}, 2^{-k}], k < levels, each with an
/// order-point Gauss rule. Suited to integrands with an algebraic endpoint
/// singularity at t = 0; the neglected piece is [0, 2^{-levels}].
template <class F>
double graded_unit_integral(F&& f, int levels = 60, std::size_t order = 16) {
  const Rule& rule = cached_rule(order);
  double sum = 0.0, hi = 1.0;
  for (int k = 0; k < levels; ++k) {
    const double lo = 0.5 * hi;
    sum += gauss_legendre_integrate(rule, f, lo, hi);
    hi = lo;
  }
  return sum;
}

struct Estimate {
  double value = 0.0;
  double error = 0.0;
  std::size_t evaluations = 0;
};

namespace detail {

template <class F>
double simpson_step(F& f, double a, double fa, double b, double fb, double m, double fm,
                    double whole, double tol, int depth, std::size_t& evals, double& err) {
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  evals += 2;
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
    err += std::abs(delta) / 15.0;
    return left + right + delta / 15.0;
  }
  return simpson_step(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1, evals, err) +
         simpson_step(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1, evals, err);
}

// QUADPACK G7/K15 abscissae and weights.
inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class F>
void gk15(F& f, double a, double b, double& result, double& error) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  const double fc = f(c);
  double rk = fc * kWgk[7];
  double rg = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double x = h * kXgk[j];
    const double f1 = f(c - x), f2 = f(c + x);
    rk += kWgk[j] * (f1 + f2);
    if (j % 2 == 1) rg += kWg[j / 2] * (f1 + f2);
  }
  result = rk * h;
  error = std::abs((rk - rg) * h);
}

template <class F>
double gk_recurse(F& f, double a, double b, double tol, int depth, std::size_t& evals,
                  double& err) {
  double r = 0.0, e = 0.0;
  gk15(f, a, b, r, e);
  evals += 15;
  if (depth <= 0 || e <= tol || std::abs(b - a) < 1e-14 * (1.0 + std::abs(a))) {
    err += e;
    return r;
  }
  const double m = 0.5 * (a + b);
  return gk_recurse(f, a, m, 0.5 * tol, depth - 1, evals, err) +
         gk_recurse(f, m, b, 0.5 * tol, depth - 1, evals, err);
}

}  // namespace detail

/// Adaptive Simpson with Richardson correction; `tol` is absolute.
template <class F>
Estimate adaptive_simpson(F&& f, double a, double b, double tol = 1e-12, int max_depth = 48) {
  Estimate est;
  if (a == b) return est;
  const double fa = f(a), fb = f(b), m = 0.5 * (a + b), fm = f(m);
  est.evaluations = 3;
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  est.value = detail::simpson_step(f, a, fa, b, fb, m, fm, whole, tol, max_depth,
                                   est.evaluations, est.error);
  return est;
}

/// Adaptive bisection with the G7/K15 pair; `tol` is absolute.
template <class F>
Estimate adaptive_gauss_kronrod(F&& f, double a, double b, double tol = 1e-13,
                                int max_depth = 40) {
  Estimate est;
  if (a == b) return est;
  est.value = detail::gk_recurse(f, a, b, tol, max_depth, est.evaluations, est.error);
  return est;
}

/// Cumulative integral of uniformly spaced samples, anchored at index
/// `anchor` (result[anchor] == 0). Each cell uses the cubic through the four
/// nearest samples (weights -1, 13, 13, -1 over 24), falling back to a
/// one-sided cubic at the ends; overall fourth order.
inline std::vector<double> cumulative_integral(std::span<const double> y, double h,
                                               std::size_t anchor = 0) {
  const std::size_t n = y.size();
  if (n < 4) throw std::invalid_argument("cumulative_integral: need at least 4 samples");
  if (anchor >= n) throw std::invalid_argument("cumulative_integral: anchor out of range");
  std::vector<double> cell(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (i >= 1 && i + 2 < n) {
      cell[i] = h / 24.0 * (-y[i - 1] + 13.0 * y[i] + 13.0 * y[i + 1] - y[i + 2]);
    } else if (i == 0) {
      cell[i] = h / 24.0 * (9.0 * y[0] + 19.0 * y[1] - 5.0 * y[2] + y[3]);
    } else {
      cell[i] = h / 24.0 * (9.0 * y[n - 1] + 19.0 * y[n - 2] - 5.0 * y[n - 3] + y[n - 4]);
    }
  }
  std::vector<double> out(n, 0.0);
  for (std::size_t i = anchor + 1; i < n; ++i) out[i] = out[i - 1] + cell[i - 1];
  for (std::size_t i = anchor; i-- > 0;) out[i] = out[i + 1] - cell[i];
  return out;
}

/// Composite trapezoid weights for n uniform samples with spacing h.
inline std::vector<double> trapezoid_weights(std::size_t n, double h) {
  std::vector<double> w(n, h);
  if (n > 0) {
    w.front() *= 0.5;
    w.back() *= 0.5;
  }
  return w;
}

}  // namespace catenoid::quad
