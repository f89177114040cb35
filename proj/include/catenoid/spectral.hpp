#pragma once

// Angular Fourier decomposition on the cylinder, the constant-coefficient
// mode ODEs Omega_0'' = Gamma_0 and Omega_j'' - j^2 Omega_j = Gamma_j,
// weighted norms, decay fits and the integration-by-parts identity for psi0.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "curvature.hpp"
#include "geometry.hpp"
#include "grid.hpp"
#include "profile.hpp"
#include "quadrature.hpp"
#include "stencil.hpp"

namespace catenoid {

// ---------------------------------------------------------------------------
// Fourier decomposition

struct ModeSpectrum {
  CylinderGrid grid;
  int j_max = 0;
  std::vector<double> gamma0;               // (1/2pi) int f du
  std::vector<std::vector<double>> cosine;  // cosine[j] = (1/pi) int f cos(ju) du, j >= 1
  std::vector<std::vector<double>> sine;    // sine[j]   = (1/pi) int f sin(ju) du

  /// Field rebuilt from the retained modes at grid node (k, i).
  double reconstruct(std::size_t k, std::size_t i) const {
    const double u = grid.u(k);
    double s = gamma0[i];
    for (int j = 1; j <= j_max; ++j) s += cosine[j][i] * std::cos(j * u) + sine[j][i] * std::sin(j * u);
    return s;
  }

  /// Discrete mode energy at v_i: Gamma0^2 + (1/2) sum_j (Gamma'_j^2 + Gamma''_j^2).
  double energy(std::size_t i) const {
    double e = gamma0[i] * gamma0[i];
    for (int j = 1; j <= j_max; ++j) e += 0.5 * (cosine[j][i] * cosine[j][i] + sine[j][i] * sine[j][i]);
    return e;
  }

  void write_csv(std::ostream& os) const {
    os << "mode,flavor,v,coefficient\n";
    os.precision(17);
    for (std::size_t i = 0; i < grid.n_v; ++i) os << 0 << ",cosine," << grid.v(i) << ',' << gamma0[i] << '\n';
    for (int j = 1; j <= j_max; ++j)
      for (std::size_t i = 0; i < grid.n_v; ++i) {
        os << j << ",cosine," << grid.v(i) << ',' << cosine[j][i] << '\n';
        os << j << ",sine," << grid.v(i) << ',' << sine[j][i] << '\n';
      }
  }
};

/// On-grid angular transform (rectangle rule, exact for trigonometric
/// polynomials of degree below n_u / 2).
inline ModeSpectrum fourier_decompose(const PerturbationField& f, int j_max) {
  const CylinderGrid& g = f.grid();
  if (j_max < 0) throw std::invalid_argument("fourier_decompose: j_max must be nonnegative");
  if (g.n_u < 2 * static_cast<std::size_t>(j_max) + 2)
    throw std::invalid_argument("fourier_decompose: need n_u >= 2 j_max + 2 (n_u = " +
                                std::to_string(g.n_u) + ", j_max = " + std::to_string(j_max) + ")");
  ModeSpectrum s;
  s.grid = g;
  s.j_max = j_max;
  s.gamma0.assign(g.n_v, 0.0);
  s.cosine.assign(j_max + 1, std::vector<double>(g.n_v, 0.0));
  s.sine.assign(j_max + 1, std::vector<double>(g.n_v, 0.0));
  const double nu = static_cast<double>(g.n_u);
  for (std::size_t k = 0; k < g.n_u; ++k) {
    const double u = g.u(k);
    for (std::size_t i = 0; i < g.n_v; ++i) {
      const double x = f.value(k, i);
      s.gamma0[i] += x / nu;
      for (int j = 1; j <= j_max; ++j) {
        s.cosine[j][i] += 2.0 * x * std::cos(j * u) / nu;
        s.sine[j][i] += 2.0 * x * std::sin(j * u) / nu;
      }
    }
  }
  return s;
}

/// Relative Parseval defect: |sum_i mean_u f^2 - sum_i energy_i| / sum_i mean_u f^2.
inline double parseval_defect(const PerturbationField& f, const ModeSpectrum& s) {
  const CylinderGrid& g = f.grid();
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t i = 0; i < g.n_v; ++i) {
    double m = 0.0;
    for (std::size_t k = 0; k < g.n_u; ++k) m += f.value(k, i) * f.value(k, i);
    lhs += m / static_cast<double>(g.n_u);
    rhs += s.energy(i);
  }
  return lhs == 0.0 ? std::abs(rhs) : std::abs(lhs - rhs) / lhs;
}

inline double reconstruction_error(const PerturbationField& f, const ModeSpectrum& s) {
  double e = 0.0;
  for (std::size_t k = 0; k < f.grid().n_u; ++k)
    for (std::size_t i = 0; i < f.grid().n_v; ++i) e = std::max(e, std::abs(f.value(k, i) - s.reconstruct(k, i)));
  return e;
}

// ---------------------------------------------------------------------------
// Mode problems

enum class ModeFlavor { cosine, sine };

struct ModeProblem {
  int j = 0;
  ModeFlavor flavor = ModeFlavor::cosine;
  std::vector<double> v;    // uniform nodes
  std::vector<double> rhs;  // Gamma_j sampled at v
  /// Optional closed form of Gamma_j. When present it is used inside cells
  /// and for the tails beyond the window; otherwise Gamma is interpolated
  /// by local cubics and taken to vanish outside the window.
  std::function<double(double)> rhs_fn;
  double eta = 0.9;

  double eta_prime() const { return eta / 8.0; }

  void validate() const {
    if (j < 0) throw std::invalid_argument("ModeProblem: j must be nonnegative");
    if (j == 0 && flavor != ModeFlavor::cosine)
      throw std::invalid_argument("ModeProblem: mode zero has the cosine flavor only");
    if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("ModeProblem: eta must lie in (0, 1)");
    if (v.size() < 5 || rhs.size() != v.size())
      throw std::invalid_argument("ModeProblem: need >= 5 nodes with matching rhs samples");
    const double h = v[1] - v[0];
    if (!(h > 0.0)) throw std::invalid_argument("ModeProblem: nodes must increase");
    for (std::size_t i = 1; i < v.size(); ++i)
      if (std::abs(v[i] - v[i - 1] - h) > 1e-9 * h)
        throw std::invalid_argument("ModeProblem: nodes must be uniformly spaced");
    for (double x : rhs)
      if (!std::isfinite(x)) throw std::invalid_argument("ModeProblem: rhs must be finite");
  }

  static ModeProblem from_function(int j, std::function<double(double)> fn, double v_max, std::size_t n_v,
                                   ModeFlavor flavor = ModeFlavor::cosine) {
    ModeProblem p;
    p.j = j;
    p.flavor = flavor;
    const CylinderGrid g(v_max, n_v);
    p.v = g.v_nodes();
    p.rhs.resize(n_v);
    for (std::size_t i = 0; i < n_v; ++i) p.rhs[i] = fn(p.v[i]);
    p.rhs_fn = std::move(fn);
    return p;
  }
};

struct ModeSolution {
  int j = 0;
  ModeFlavor flavor = ModeFlavor::cosine;
  std::vector<double> v, omega, domega, ddomega;
  /// sup over interior nodes of |D^2 Omega - j^2 Omega - Gamma| with D^2 the
  /// fourth-order stencil applied to the returned samples.
  double ode_residual = 0.0;
};

namespace detail {

/// Gamma on cell [v_i, v_{i+1}]: closed form or the local cubic through the
/// four nearest samples.
class CellSampler {
 public:
  explicit CellSampler(const ModeProblem& p) : p_(p), h_(p.v[1] - p.v[0]) {}

  double operator()(std::size_t cell, double x) const {
    if (p_.rhs_fn) return p_.rhs_fn(x);
    const std::size_t n = p_.v.size();
    std::size_t b = cell == 0 ? 0 : cell - 1;
    if (b + 3 >= n) b = n - 4;
    double s = 0.0;
    for (std::size_t a = b; a < b + 4; ++a) {
      double l = 1.0;
      for (std::size_t c = b; c < b + 4; ++c)
        if (c != a) l *= (x - p_.v[c]) / (p_.v[a] - p_.v[c]);
      s += l * p_.rhs[a];
    }
    return s;
  }
  double h() const { return h_; }

 private:
  const ModeProblem& p_;
  double h_;
};

inline double interior_residual(const ModeSolution& s, const std::vector<double>& rhs, int j) {
  const double h = s.v[1] - s.v[0];
  double r = 0.0;
  for (std::size_t i = 2; i + 2 < s.v.size(); ++i) {
    const double d2 = fd::d2_at(s.omega, i, h, 4);
    r = std::max(r, std::abs(d2 - double(j) * j * s.omega[i] - rhs[i]));
  }
  return r;
}

/// int_V^inf g(w) K(w - V) dw via t = e^{-(w - V)}; K(x) = e^{-a x}.
inline double exp_tail(const std::function<double(double)>& g, double V, double a, int sign) {
  auto integrand = [&](double t) {
    const double w = V - sign * std::log(t);
    return std::pow(t, a - 1.0) * g(w);
  };
  const double full = quad::graded_unit_integral(integrand, 60, 16);
  const double coarse = quad::graded_unit_integral(integrand, 30, 16);
  if (!std::isfinite(full) || std::abs(full - coarse) > 1e-8 * (1.0 + std::abs(full)))
    throw std::domain_error("mode solver: divergent tail integral beyond v = " + std::to_string(V));
  return full;
}

}  // namespace detail

/// Bounded solution of Omega'' - j^2 Omega = Gamma, j >= 1:
/// Omega = -(1/2j) int e^{-j|v-w|} Gamma(w) dw, assembled from left and
/// right exponential recurrences with per-cell Gauss rules.
inline ModeSolution solve_mode_j(const ModeProblem& p) {
  p.validate();
  if (p.j < 1) throw std::invalid_argument("solve_mode_j: requires j >= 1");
  const std::size_t n = p.v.size();
  const double j = p.j;
  const detail::CellSampler G(p);
  const double h = G.h();
  const quad::Rule& rule = quad::cached_rule(12);
  const double decay = std::exp(-j * h);
  std::vector<double> L(n, 0.0), R(n, 0.0);
  if (p.rhs_fn) {
    L[0] = detail::exp_tail(p.rhs_fn, p.v.front(), j, -1);
    R[n - 1] = detail::exp_tail(p.rhs_fn, p.v.back(), j, +1);
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double a = p.v[i], b = p.v[i + 1];
    L[i + 1] = decay * L[i] +
               quad::gauss_legendre_integrate(rule, [&](double w) { return std::exp(-j * (b - w)) * G(i, w); }, a, b);
  }
  for (std::size_t i = n - 1; i-- > 0;) {
    const double a = p.v[i], b = p.v[i + 1];
    R[i] = decay * R[i + 1] +
           quad::gauss_legendre_integrate(rule, [&](double w) { return std::exp(-j * (w - a)) * G(i, w); }, a, b);
  }
  ModeSolution s;
  s.j = p.j;
  s.flavor = p.flavor;
  s.v = p.v;
  s.omega.resize(n);
  s.domega.resize(n);
  s.ddomega.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    s.omega[i] = -(L[i] + R[i]) / (2.0 * j);
    s.domega[i] = 0.5 * (L[i] - R[i]);
    s.ddomega[i] = j * j * s.omega[i] + p.rhs[i];
  }
  s.ode_residual = detail::interior_residual(s, p.rhs, p.j);
  return s;
}

/// Mode zero. Omega_0'' = Gamma_0 is solved as
///   Omega_0 = v [A0 + int_0^v Gamma] + [B0 - int_0^v w Gamma]
/// with the symmetric constants A0 = (P- - P+)/2, B0 = (Q+ - Q-)/2, where
/// P+- and Q+- are the half-line integrals of Gamma and w Gamma. As
/// v -> +-inf, Omega_0 ~ mu+- v + lambda+-; a decaying solution exists iff
/// all four vanish, i.e. iff int Gamma = int w Gamma = 0.
struct ModeZeroResult {
  ModeSolution solution;
  bool decaying = false;
  double total_moment = 0.0;  // int Gamma
  double first_moment = 0.0;  // int w Gamma
  double P_plus = 0.0, P_minus = 0.0, Q_plus = 0.0, Q_minus = 0.0;
  double A0 = 0.0, B0 = 0.0;
  double mu_plus = 0.0, mu_minus = 0.0;          // slopes at +-inf
  double lambda_plus = 0.0, lambda_minus = 0.0;  // offsets at +-inf
  std::string message;
};

inline ModeZeroResult solve_mode_zero(const ModeProblem& p, bool decay_required = true,
                                      double moment_tol = 1e-9) {
  p.validate();
  if (p.j != 0) throw std::invalid_argument("solve_mode_zero: requires j = 0");
  const std::size_t n = p.v.size();
  std::size_t c = 0;
  while (c < n && std::abs(p.v[c]) > 1e-9 * (p.v[1] - p.v[0])) ++c;
  if (c == n) throw std::invalid_argument("solve_mode_zero: grid must contain the node v = 0");
  const detail::CellSampler G(p);
  const quad::Rule& rule = quad::cached_rule(12);
  // cumulative int_0^{v_i} Gamma and int_0^{v_i} w Gamma
  std::vector<double> C0(n, 0.0), C1(n, 0.0);
  double scale = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double a = p.v[i], b = p.v[i + 1];
    const double i0 = quad::gauss_legendre_integrate(rule, [&](double w) { return G(i, w); }, a, b);
    const double i1 = quad::gauss_legendre_integrate(rule, [&](double w) { return w * G(i, w); }, a, b);
    scale += quad::gauss_legendre_integrate(rule, [&](double w) { return (1.0 + std::abs(w)) * std::abs(G(i, w)); }, a, b);
    if (i >= c) {
      C0[i + 1] = i0;
      C1[i + 1] = i1;
    } else {
      C0[i] = -i0;
      C1[i] = -i1;
    }
  }
  for (std::size_t i = c + 1; i < n; ++i) {
    C0[i] += C0[i - 1];
    C1[i] += C1[i - 1];
  }
  for (std::size_t i = c; i-- > 0;) {
    C0[i] += C0[i + 1];
    C1[i] += C1[i + 1];
  }
  ModeZeroResult r;
  double tail0p = 0.0, tail1p = 0.0, tail0m = 0.0, tail1m = 0.0;
  if (p.rhs_fn) {
    const double Vp = p.v.back(), Vm = p.v.front();
    auto g = p.rhs_fn;
    // int_V^inf Gamma = int_0^1 Gamma(V - ln t) / t dt, and w Gamma likewise
    tail0p = detail::exp_tail(g, Vp, 0.0, +1);
    tail1p = detail::exp_tail([&](double w) { return w * g(w); }, Vp, 0.0, +1);
    tail0m = detail::exp_tail(g, Vm, 0.0, -1);
    tail1m = detail::exp_tail([&](double w) { return w * g(w); }, Vm, 0.0, -1);
  }
  r.P_plus = C0.back() + tail0p;
  r.Q_plus = C1.back() + tail1p;
  r.P_minus = -C0.front() + tail0m;
  r.Q_minus = -C1.front() + tail1m;
  r.total_moment = r.P_plus + r.P_minus;
  r.first_moment = r.Q_plus + r.Q_minus;
  r.A0 = 0.5 * (r.P_minus - r.P_plus);
  r.B0 = 0.5 * (r.Q_plus - r.Q_minus);
  r.mu_plus = r.A0 + r.P_plus;
  r.mu_minus = r.A0 - r.P_minus;
  r.lambda_plus = r.B0 - r.Q_plus;
  r.lambda_minus = r.B0 + r.Q_minus;
  ModeSolution& s = r.solution;
  s.j = 0;
  s.v = p.v;
  s.omega.resize(n);
  s.domega.resize(n);
  s.ddomega.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    s.omega[i] = p.v[i] * (r.A0 + C0[i]) + (r.B0 - C1[i]);
    s.domega[i] = r.A0 + C0[i];
    s.ddomega[i] = p.rhs[i];
  }
  s.ode_residual = detail::interior_residual(s, p.rhs, 0);
  const double tol = moment_tol * std::max(1.0, scale);
  r.decaying = std::abs(r.total_moment) <= tol && std::abs(r.first_moment) <= tol;
  if (!r.decaying) {
    std::ostringstream os;
    os << "no decaying solution: int Gamma = " << r.total_moment << ", int w Gamma = " << r.first_moment
       << " (mu+ = " << r.mu_plus << ", mu- = " << r.mu_minus << ", lambda+ = " << r.lambda_plus
       << ", lambda- = " << r.lambda_minus << ")";
    r.message = os.str();
    if (!decay_required) r.message += "; bounded-growth solution returned";
  }
  return r;
}

/// |Omega_j| cosh^eta(v) divided by
/// (||Gamma|| / 2j)(1/sqrt(2(j+eta)) + 1/sqrt(2(j-eta))), with
/// ||Gamma||^2 = int Gamma^2 cosh^{2 eta}. The proof shows this is bounded by
/// a constant independent of j.
inline double mode_decay_constant(const ModeProblem& p, const ModeSolution& s) {
  const double j = p.j, eta = p.eta;
  const double h = p.v[1] - p.v[0];
  double norm2 = 0.0;
  const auto w = quad::trapezoid_weights(p.v.size(), h);
  for (std::size_t i = 0; i < p.v.size(); ++i)
    norm2 += w[i] * p.rhs[i] * p.rhs[i] * std::exp(2.0 * eta * log_cosh(p.v[i]));
  const double bound = std::sqrt(norm2) / (2.0 * j) *
                       (1.0 / std::sqrt(2.0 * (j + eta)) + 1.0 / std::sqrt(2.0 * (j - eta)));
  double sup = 0.0;
  for (std::size_t i = 0; i < s.v.size(); ++i)
    sup = std::max(sup, std::abs(s.omega[i]) * std::exp(eta * log_cosh(s.v[i])));
  return bound > 0.0 ? sup / bound : 0.0;
}

/// Solves every retained mode of a spectrum and reassembles Omega on the grid.
struct CylinderSolution {
  PerturbationField omega;
  ModeZeroResult mode_zero;
  std::vector<ModeSolution> cosine, sine;  // index j, j >= 1
  double max_ode_residual = 0.0;
};

inline CylinderSolution solve_cylinder(const ModeSpectrum& spec, double eta = 0.9) {
  const CylinderGrid& g = spec.grid;
  const auto nodes = g.v_nodes();
  auto problem = [&](int j, ModeFlavor fl, const std::vector<double>& rhs) {
    ModeProblem p;
    p.j = j;
    p.flavor = fl;
    p.v = nodes;
    p.rhs = rhs;
    p.eta = eta;
    return p;
  };
  CylinderSolution out;
  out.mode_zero = solve_mode_zero(problem(0, ModeFlavor::cosine, spec.gamma0), false);
  out.max_ode_residual = out.mode_zero.solution.ode_residual;
  out.cosine.resize(spec.j_max + 1);
  out.sine.resize(spec.j_max + 1);
  for (int j = 1; j <= spec.j_max; ++j) {
    out.cosine[j] = solve_mode_j(problem(j, ModeFlavor::cosine, spec.cosine[j]));
    out.sine[j] = solve_mode_j(problem(j, ModeFlavor::sine, spec.sine[j]));
    out.max_ode_residual = std::max({out.max_ode_residual, out.cosine[j].ode_residual, out.sine[j].ode_residual});
  }
  std::vector<double> vals(g.size());
  for (std::size_t k = 0; k < g.n_u; ++k) {
    const double u = g.u(k);
    for (std::size_t i = 0; i < g.n_v; ++i) {
      double x = out.mode_zero.solution.omega[i];
      for (int j = 1; j <= spec.j_max; ++j)
        x += out.cosine[j].omega[i] * std::cos(j * u) + out.sine[j].omega[i] * std::sin(j * u);
      vals[g.index(k, i)] = x;
    }
  }
  out.omega = PerturbationField(g, std::move(vals));
  return out;
}

// ---------------------------------------------------------------------------
// Weighted norms and decay fits

enum class NormKind { sup_weighted, integral_weighted };

struct WeightedNormReport {
  NormKind kind = NormKind::sup_weighted;
  int k = 0;
  double q = 0.0;
  double value = 0.0;
  double half_window_value = 0.0;  // same norm over |v| <= V/2
  double trend = 1.0;              // value / half_window_value
  bool bounded = true;             // trend below 1.1
};

namespace detail {

/// log phi(s) for the n-catenoid (log cosh v when n = 2).
inline double log_phi(int n, double s) { return log_cosh((n - 1) * s) / (n - 1); }

inline WeightedNormReport finish_norm(NormKind kind, int k, double q, double full, double half) {
  WeightedNormReport r;
  r.kind = kind;
  r.k = k;
  r.q = q;
  r.value = full;
  r.half_window_value = half;
  r.trend = half > 0.0 ? full / half : (full > 0.0 ? INFINITY : 1.0);
  r.bounded = r.trend < 1.1;
  return r;
}

}  // namespace detail

/// Weighted norm of a profile f(s) sampled on uniform nodes, with weight
/// phi^{-q} of the n-catenoid; derivatives up to k (<= 4) by stencils.
inline WeightedNormReport weighted_norm_1d(int n, const std::vector<double>& s, const std::vector<double>& f,
                                           NormKind kind, int k, double q) {
  if (k < 0 || k > 4) throw std::invalid_argument("weighted_norm: k must lie in [0, 4]");
  if (s.size() != f.size() || s.size() < 5) throw std::invalid_argument("weighted_norm: bad samples");
  const double h = s[1] - s[0];
  std::vector<std::vector<double>> d{f};
  for (int a = 1; a <= k; ++a) {
    std::vector<double> next(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) next[i] = fd::d1_at(d.back(), i, h, 4);
    d.push_back(std::move(next));
  }
  const double smax = std::max(std::abs(s.front()), std::abs(s.back()));
  const auto w = quad::trapezoid_weights(s.size(), h);
  double full = 0.0, half = 0.0;
  for (const auto& g : d) {
    double sf = 0.0, sh = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double wt = std::exp(-q * detail::log_phi(n, s[i]));
      const double x = std::abs(g[i]) * wt;
      const bool inner = std::abs(s[i]) <= 0.5 * smax + 1e-12;
      if (kind == NormKind::sup_weighted) {
        sf = std::max(sf, x);
        if (inner) sh = std::max(sh, x);
      } else {
        sf += w[i] * x * x;
        if (inner) sh += w[i] * x * x;
      }
    }
    full += sf;
    half += sh;
  }
  if (kind == NormKind::integral_weighted) {
    full = std::sqrt(full);
    half = std::sqrt(half);
  }
  return detail::finish_norm(kind, k, q, full, half);
}

/// Weighted norm of a cylinder field (n = 2, weight cosh^{-q} v), k <= 2,
/// using the field's jets; angular integrals by the rectangle rule.
inline WeightedNormReport weighted_norm(const PerturbationField& f, NormKind kind, int k, double q) {
  if (k < 0 || k > 2) throw std::invalid_argument("weighted_norm: field norms support k <= 2");
  const CylinderGrid& g = f.grid();
  const double V = g.v_max;
  const auto wv = quad::trapezoid_weights(g.n_v, g.h_v());
  const double hu = g.h_u();
  std::vector<double> sf(6, 0.0), sh(6, 0.0);
  const int count = k == 0 ? 1 : (k == 1 ? 3 : 6);
  for (std::size_t kk = 0; kk < g.n_u; ++kk)
    for (std::size_t i = 0; i < g.n_v; ++i) {
      const FieldJet& j = f.jet(kk, i);
      const double a[6] = {j.value, j.du, j.dv, j.duu, j.duv, j.dvv};
      const double wt = std::exp(-q * log_cosh(g.v(i)));
      const bool inner = std::abs(g.v(i)) <= 0.5 * V + 1e-12;
      for (int t = 0; t < count; ++t) {
        const double x = std::abs(a[t]) * wt;
        if (kind == NormKind::sup_weighted) {
          sf[t] = std::max(sf[t], x);
          if (inner) sh[t] = std::max(sh[t], x);
        } else {
          sf[t] += wv[i] * hu * x * x;
          if (inner) sh[t] += wv[i] * hu * x * x;
        }
      }
    }
  double full = 0.0, half = 0.0;
  for (int t = 0; t < count; ++t) {
    full += sf[t];
    half += sh[t];
  }
  if (kind == NormKind::integral_weighted) {
    full = std::sqrt(full);
    half = std::sqrt(half);
  }
  return detail::finish_norm(kind, k, q, full, half);
}

struct DecayFit {
  double fitted_rate = 0.0;  // exponent in phi^{rate} (cosh^{rate} v when n = 2)
  double rate_left = 0.0, rate_right = 0.0;
  double window_lo = 0.0, window_hi = 0.0;  // |s| range used
  double residual = 0.0;                    // rms of log residuals
  bool decaying = true;                     // precondition: edge value below the maximum
  bool flagged = false;                     // rate >= 0 or precondition failed
  std::string message;
};

/// Least-squares slope of log|f| against log phi over the outer half-window
/// (both ends pooled; each end also fitted separately).
inline DecayFit decay_fit(const std::vector<double>& s, const std::vector<double>& f, int n = 2) {
  if (s.size() != f.size() || s.size() < 8) throw std::invalid_argument("decay_fit: need >= 8 samples");
  DecayFit d;
  const double smax = std::max(std::abs(s.front()), std::abs(s.back()));
  d.window_lo = 0.5 * smax;
  d.window_hi = smax;
  double fmax = 0.0;
  for (double x : f) fmax = std::max(fmax, std::abs(x));
  const double edge = std::max(std::abs(f.front()), std::abs(f.back()));
  d.decaying = edge < fmax;
  auto fit = [&](int side) {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const bool ok = side == 0 ? std::abs(s[i]) >= d.window_lo : (side > 0 ? s[i] >= d.window_lo : s[i] <= -d.window_lo);
      if (ok && f[i] != 0.0 && std::isfinite(f[i])) {
        x.push_back(std::exp(detail::log_phi(n, s[i])));
        y.push_back(std::abs(f[i]));
      }
    }
    return fit_loglog(x, y);
  };
  const SlopeFit both = fit(0), l = fit(-1), r = fit(+1);
  d.fitted_rate = both.slope;
  d.residual = both.residual;
  d.rate_left = l.slope;
  d.rate_right = r.slope;
  d.flagged = !both.ok || d.fitted_rate >= 0.0 || !d.decaying;
  std::ostringstream os;
  os << "rate " << d.fitted_rate << " (left " << d.rate_left << ", right " << d.rate_right << ") on |s| in ["
     << d.window_lo << ", " << d.window_hi << "], residual " << d.residual;
  if (!d.decaying) os << "; field not decaying (edge value >= maximum)";
  else if (d.fitted_rate >= 0.0) os << "; non-negative rate";
  d.message = os.str();
  return d;
}

/// Decay fit of a cylinder field from its u-maximum at each v.
inline DecayFit decay_fit(const PerturbationField& f) {
  const CylinderGrid& g = f.grid();
  std::vector<double> m(g.n_v, 0.0);
  for (std::size_t k = 0; k < g.n_u; ++k)
    for (std::size_t i = 0; i < g.n_v; ++i) m[i] = std::max(m[i], std::abs(f.value(k, i)));
  return decay_fit(g.v_nodes(), m, 2);
}

// ---------------------------------------------------------------------------
// Integration by parts against psi0

struct IbpReport {
  std::vector<double> windows;
  std::vector<double> residuals;  // int_{|v| <= V} psi0 L(Omega) c^2 cosh^2 v du dv
  std::vector<double> boundary;   // boundary terms [psi0 Omega_v - psi0' Omega] integrated in u
  DecayFit omega_decay;           // decay of Omega itself (hypothesis check)
  bool hypothesis_ok = true;      // Omega decays (negative fitted rate)
  bool converges_to_zero = false;
  double residual_rate = 0.0;     // slope of log|residual| vs V over the last windows
  std::string message;
};

/// Windowed integral of psi0 L(Omega) dvol for a closed-form Omega. Since
/// L psi0 = 0 it equals the boundary flux, which must vanish in the limit
/// when Omega = o(1).
inline IbpReport integration_by_parts_check(const CatenoidSpec& spec, const JetFunction& omega,
                                            std::vector<double> windows = {5, 10, 20, 40, 80},
                                            std::size_t n_u = 32, double zero_tol = 1e-8) {
  IbpReport r;
  std::sort(windows.begin(), windows.end());
  r.windows = windows;
  (void)spec;  // L psi0 dvol does not depend on the neck
  const double hu = 2.0 * std::numbers::pi / n_u;
  auto stable_integrand = [&](double v) {
    // psi0 L(Omega) c^2 cosh^2 v = psi0 (Omega_uu + Omega_vv + 2 sech^2 Omega)
    double s = 0.0;
    for (std::size_t k = 0; k < n_u; ++k) {
      const FieldJet w = omega(hu * k, v);
      const double sh = sech(v);
      s += w.duu + w.dvv + 2.0 * sh * sh * w.value;
    }
    return psi0(v) * s * hu;
  };
  double prev_V = 0.0, acc = 0.0;
  for (double V : windows) {
    acc += quad::adaptive_gauss_kronrod(stable_integrand, prev_V, V, 1e-14).value;
    acc += quad::adaptive_gauss_kronrod(stable_integrand, -V, -prev_V, 1e-14).value;
    prev_V = V;
    r.residuals.push_back(acc);
    double b = 0.0;
    for (std::size_t k = 0; k < n_u; ++k) {
      const double u = hu * k;
      for (double sgn : {1.0, -1.0}) {
        const double v = sgn * V;
        const FieldJet w = omega(u, v);
        const double sh = sech(v), th = std::tanh(v);
        const double dpsi = -th - v * sh * sh;
        b += sgn * (psi0(v) * w.dv - dpsi * w.value) * hu;
      }
    }
    r.boundary.push_back(b);
  }
  // decay of Omega on the largest window (u-maximum profile)
  const double Vmax = windows.back();
  std::vector<double> vs, fs;
  for (int i = 0; i <= 400; ++i) {
    const double v = -Vmax + 2.0 * Vmax * i / 400.0;
    double m = 0.0;
    for (std::size_t k = 0; k < n_u; ++k) m = std::max(m, std::abs(omega(hu * k, v).value));
    vs.push_back(v);
    fs.push_back(m);
  }
  r.omega_decay = decay_fit(vs, fs, 2);
  r.hypothesis_ok = !r.omega_decay.flagged;
  const std::size_t nw = r.residuals.size();
  const double last = std::abs(r.residuals.back());
  const double prev = nw >= 2 ? std::abs(r.residuals[nw - 2]) : INFINITY;
  r.converges_to_zero = last < zero_tol && last <= prev + zero_tol;
  if (nw >= 2 && last > 0.0 && prev > 0.0 && std::isfinite(prev))
    r.residual_rate = (std::log(last) - std::log(prev)) / (windows[nw - 1] - windows[nw - 2]);
  std::ostringstream os;
  os << "residual " << r.residuals.back() << " at V = " << Vmax << "; Omega decay: " << r.omega_decay.message;
  if (!r.hypothesis_ok) os << "; hypothesis violated (Omega is not o(1))";
  r.message = os.str();
  return r;
}

// ---------------------------------------------------------------------------
// Mode-zero moments under slow metric decay

struct MomentConvergence {
  double tau = 0.0;
  std::vector<double> windows;
  std::vector<double> total;   // int_{-V}^{V} Gamma_tau
  std::vector<double> first;   // int_0^V w Gamma_tau
  bool converged = false;      // last increments below tol
  double last_increment = 0.0;
};

/// Forcing from a perturbation |e| = O(|x|^{-1-tau}) enters mode zero like
/// cosh^{-tau}(v). Reports the windowed moments and whether they settle.
inline MomentConvergence moment_convergence(double tau, std::vector<double> windows = {10, 20, 40, 80},
                                            double tol = 1e-6) {
  MomentConvergence m;
  m.tau = tau;
  std::sort(windows.begin(), windows.end());
  m.windows = windows;
  auto g = [tau](double v) { return std::exp(-tau * log_cosh(v)); };
  auto wg = [tau](double v) { return v * std::exp(-tau * log_cosh(v)); };
  for (double V : windows) {
    const std::size_t panels = static_cast<std::size_t>(std::ceil(V));
    m.total.push_back(2.0 * quad::composite_gauss_legendre(g, 0.0, V, panels, 16));
    m.first.push_back(quad::composite_gauss_legendre(wg, 0.0, V, panels, 16));
  }
  const std::size_t n = windows.size();
  if (n >= 2) {
    m.last_increment = std::max(std::abs(m.total[n - 1] - m.total[n - 2]), std::abs(m.first[n - 1] - m.first[n - 2]));
    m.converged = m.last_increment < tol;
  }
  return m;
}

}  // namespace catenoid
