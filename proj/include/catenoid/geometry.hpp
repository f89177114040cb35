#pragma once

// Catenoids, their normal graphs and unit normals, in R^3 and R^{n+1}.

#include <Eigen/Dense>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

#include "grid.hpp"
#include "profile.hpp"

namespace catenoid {

using Vec3 = Eigen::Vector3d;
using VecX = Eigen::VectorXd;

struct CatenoidSpec {
  double neck = 1.0;
  int dim_n = 2;

  CatenoidSpec() = default;
  CatenoidSpec(double c, int n = 2) : neck(c), dim_n(n) { validate(); }
  void validate() const {
    if (!(neck > 0.0) || !std::isfinite(neck))
      throw std::invalid_argument("CatenoidSpec: neck must be positive");
    if (dim_n < 2) throw std::invalid_argument("CatenoidSpec: dim_n must be >= 2");
  }
};

/// Rescaling Jacobi field 1 - v tanh v.
inline double psi0(double v) { return 1.0 - v * std::tanh(v); }

/// Point with the overflow flag: when cosh v is not representable the
/// horizontal radius is carried as log_radius and x holds infinities.
struct GraphPoint {
  Vec3 x;
  double log_radius = 0.0;  // log of the horizontal radius c cosh v + Omega sech v
  bool representable = true;
};

namespace detail {
// Shared evaluation path: Omega = 0 reproduces the catenoid bit for bit.
// Kept out of line so sin/cos fusion cannot differ between call sites.
[[gnu::noinline]] inline GraphPoint graph_point(double c, double omega, double u, double v) {
  GraphPoint p;
  const double av = std::abs(v);
  if (av > 30.0) {
    const double lc = std::log(c) + log_cosh(v);
    const double corr = omega * sech(v) / c * std::exp(-log_cosh(v));
    p.log_radius = lc + std::log1p(corr);
    p.representable = p.log_radius < 700.0;
  }
  const double ch = std::cosh(v), sh = std::tanh(v);
  const double R = c * ch + omega / ch;
  const double Z = c * v - sh * omega;
  if (av <= 30.0) p.log_radius = std::log(std::abs(R));
  if (!p.representable) {
    p.x = Vec3(std::copysign(INFINITY, std::cos(u)), std::copysign(INFINITY, std::sin(u)), Z);
    return p;
  }
  p.x = Vec3(R * std::cos(u), R * std::sin(u), Z);
  return p;
}
}  // namespace detail

inline GraphPoint catenoid_point_checked(const CatenoidSpec& spec, double u, double v) {
  return detail::graph_point(spec.neck, 0.0, u, v);
}

inline Vec3 catenoid_point(const CatenoidSpec& spec, double u, double v) {
  if (spec.dim_n != 2) throw std::invalid_argument("catenoid_point: requires dim_n = 2");
  return detail::graph_point(spec.neck, 0.0, u, v).x;
}

inline Vec3 unit_normal_flat(const CatenoidSpec& spec, double u, double v) {
  (void)spec;
  const double s = sech(v);
  return Vec3(s * std::cos(u), s * std::sin(u), -std::tanh(v));
}

/// Normal graph F_c + Omega n at a raw value of Omega (no graph check).
inline Vec3 normal_graph_point(const CatenoidSpec& spec, double omega, double u, double v) {
  return detail::graph_point(spec.neck, omega, u, v).x;
}

struct GraphCondition {
  bool ok = true;
  double norm = 0.0;
  double bound = 0.0;
  double u = 0.0, v = 0.0;
  std::string message;
};

/// Graph condition ||Omega||_{C^2_b} <= c/3 on the discrete field.
inline GraphCondition check_graph_condition(const CatenoidSpec& spec, const PerturbationField& f) {
  GraphCondition g;
  g.norm = f.c2b_norm();
  g.bound = spec.neck / 3.0;
  g.ok = g.norm <= g.bound;
  const auto where = f.c2b_argmax();
  g.u = where.u;
  g.v = where.v;
  if (!g.ok) {
    std::ostringstream os;
    os << "graph condition violated: ||Omega||_C2b = " << g.norm << " > c/3 = " << g.bound
       << "; largest pointwise C2 sum " << where.value << " at (u, v) = (" << where.u << ", "
       << where.v << ")";
    g.message = os.str();
  }
  return g;
}

/// Normal graph at grid node (k, i) of a checked field.
inline Vec3 normal_graph_point(const CatenoidSpec& spec, const PerturbationField& f, std::size_t k,
                               std::size_t i) {
  const auto g = check_graph_condition(spec, f);
  if (!g.ok) throw std::domain_error(g.message);
  return normal_graph_point(spec, f.value(k, i), f.grid().u(k), f.grid().v(i));
}

namespace detail {
inline void check_unit(const VecX& theta, int n) {
  if (theta.size() != n) throw std::invalid_argument("theta must have n components");
  if (std::abs(theta.norm() - 1.0) > 1e-12)
    throw std::invalid_argument("theta must be a unit vector (tolerance 1e-12)");
}
}  // namespace detail

/// c(phi(s) theta, psi(s)) in R^{n+1}.
inline VecX catenoid_point_nd(const CatenoidSpec& spec, const VecX& theta, double s) {
  detail::check_unit(theta, spec.dim_n);
  const ProfilePair p = profile(spec.dim_n, s);
  VecX x(spec.dim_n + 1);
  x.head(spec.dim_n) = spec.neck * p.phi * theta;
  x(spec.dim_n) = spec.neck * p.psi;
  return x;
}

inline VecX catenoid_point_nd(const CatenoidSpec& spec, const ProfileTable& table,
                              const VecX& theta, double s) {
  detail::check_unit(theta, spec.dim_n);
  const ProfilePair p = table.pair(s);
  VecX x(spec.dim_n + 1);
  x.head(spec.dim_n) = spec.neck * p.phi * theta;
  x(spec.dim_n) = spec.neck * p.psi;
  return x;
}

/// phi^{-1}(phi^{2-n} theta, -phi') = (sech(x) theta, -tanh(x)), x = (n-1)s.
inline VecX unit_normal_flat_nd(const CatenoidSpec& spec, const VecX& theta, double s) {
  detail::check_unit(theta, spec.dim_n);
  const double x = (spec.dim_n - 1) * s;
  VecX nrm(spec.dim_n + 1);
  nrm.head(spec.dim_n) = sech(x) * theta;
  nrm(spec.dim_n) = -std::tanh(x);
  return nrm;
}

/// Radial profile curve (R, Z) of the normal graph F_c + Omega n with its
/// first two s-derivatives.
struct ProfileCurve {
  double R = 0, dR = 0, ddR = 0;
  double Z = 0, dZ = 0, ddZ = 0;
};

inline ProfileCurve normal_graph_profile(const CatenoidSpec& spec, const ProfileJet& p, double w,
                                         double dw, double ddw) {
  const double c = spec.neck;
  const double k = spec.dim_n - 1;
  const double th = p.tanh_x, sh = p.sech_x;
  ProfileCurve g;
  // sech x and tanh x with their s-derivatives
  const double s1 = -k * sh * th, s2 = k * k * (sh * th * th - sh * sh * sh);
  const double t1 = k * sh * sh, t2 = -2.0 * k * k * sh * sh * th;
  g.R = c * p.phi + w * sh;
  g.dR = c * p.dphi + dw * sh + w * s1;
  g.ddR = c * p.ddphi + ddw * sh + 2.0 * dw * s1 + w * s2;
  g.Z = c * p.psi - w * th;
  g.dZ = c * p.dpsi - dw * th - w * t1;
  g.ddZ = c * p.ddpsi - ddw * th - 2.0 * dw * t1 - w * t2;
  return g;
}

}  // namespace catenoid
