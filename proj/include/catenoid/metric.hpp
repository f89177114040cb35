#pragma once

// Asymptotically Schwarzschildean metrics g = f^{4/(n-1)} delta + e on the
// exterior of B_{r0} in R^{n+1}, f = 1 + m / (2 |x|^{n-1}), with closed-form
// first and second derivatives.

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace catenoid {

template <int D>
struct TensorJet {
  using Mat = Eigen::Matrix<double, D, D>;
  Mat e = Mat::Zero();
  std::array<Mat, D> de{};                  // de[k] = d_k e
  std::array<std::array<Mat, D>, D> dde{};  // dde[k][l] = d_k d_l e

  TensorJet() {
    for (auto& m : de) m.setZero();
    for (auto& row : dde)
      for (auto& m : row) m.setZero();
  }
};

/// Scalar radial profile with two derivatives.
struct RadialJet {
  double h = 0.0, dh = 0.0, ddh = 0.0;
};
using RadialProfile = std::function<RadialJet(double r)>;

/// Natural cubic spline through (r_i, h_i); derivatives are those of the
/// spline itself so value and derivatives stay consistent. Beyond the last
/// node the profile continues as h_N (r_N / r)^tail_power.
class RadialSpline {
 public:
  RadialSpline(std::vector<double> r, std::vector<double> h, double tail_power)
      : r_(std::move(r)), h_(std::move(h)), tail_(tail_power) {
    const std::size_t n = r_.size();
    if (n < 3 || h_.size() != n) throw std::invalid_argument("RadialSpline: need >= 3 matching nodes");
    for (std::size_t i = 1; i < n; ++i)
      if (!(r_[i] > r_[i - 1])) throw std::invalid_argument("RadialSpline: radii must increase");
    // second derivatives M_i, natural ends
    M_.assign(n, 0.0);
    std::vector<double> a(n, 0.0), b(n, 1.0), c(n, 0.0), d(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double h0 = r_[i] - r_[i - 1], h1 = r_[i + 1] - r_[i];
      a[i] = h0 / 6.0;
      b[i] = (h0 + h1) / 3.0;
      c[i] = h1 / 6.0;
      d[i] = (h_[i + 1] - h_[i]) / h1 - (h_[i] - h_[i - 1]) / h0;
    }
    for (std::size_t i = 1; i < n; ++i) {
      const double w = a[i] / b[i - 1];
      b[i] -= w * c[i - 1];
      d[i] -= w * d[i - 1];
    }
    M_[n - 1] = d[n - 1] / b[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) M_[i] = (d[i] - c[i] * M_[i + 1]) / b[i];
  }

  RadialJet operator()(double r) const {
    const std::size_t n = r_.size();
    if (r < r_.front()) throw std::domain_error("RadialSpline: radius below table");
    if (r > r_.back()) {
      const double ratio = r_.back() / r;
      const double v = h_.back() * std::pow(ratio, tail_);
      return {v, -tail_ * v / r, tail_ * (tail_ + 1.0) * v / (r * r)};
    }
    std::size_t i = 0, hi = n - 1;
    while (hi - i > 1) {
      const std::size_t mid = (i + hi) / 2;
      if (r_[mid] <= r) i = mid; else hi = mid;
    }
    const double H = r_[i + 1] - r_[i];
    const double A = (r_[i + 1] - r) / H, B = (r - r_[i]) / H;
    RadialJet j;
    j.h = A * h_[i] + B * h_[i + 1] + ((A * A * A - A) * M_[i] + (B * B * B - B) * M_[i + 1]) * H * H / 6.0;
    j.dh = (h_[i + 1] - h_[i]) / H - (3.0 * A * A - 1.0) / 6.0 * H * M_[i] +
           (3.0 * B * B - 1.0) / 6.0 * H * M_[i + 1];
    j.ddh = A * M_[i] + B * M_[i + 1];
    return j;
  }

 private:
  std::vector<double> r_, h_, M_;
  double tail_;
};

template <int D>
class AmbientMetric {
 public:
  using Vec = Eigen::Matrix<double, D, 1>;
  using Mat = Eigen::Matrix<double, D, D>;
  using TensorFn = std::function<TensorJet<D>(const Vec&)>;

  struct Derivs {
    Mat g = Mat::Zero();
    std::array<Mat, D> dg{};
    std::array<std::array<Mat, D>, D> ddg{};
  };

  AmbientMetric() = default;
  AmbientMetric(double mass, double r0) : mass_(mass), r0_(r0) { validate(); }

  static constexpr int dim_n() { return D - 1; }
  double mass() const { return mass_; }
  double r0() const { return r0_; }
  const std::string& perturbation_kind() const { return kind_; }
  bool has_perturbation() const { return static_cast<bool>(tensor_); }

  /// e = h(r) delta.
  AmbientMetric& with_radial(RadialProfile h, std::string kind = "radial") {
    tensor_ = [h = std::move(h)](const Vec& x) {
      TensorJet<D> t;
      const double r = x.norm();
      const RadialJet j = h(r);
      const Vec xh = x / r;
      const Mat I = Mat::Identity();
      t.e = j.h * I;
      for (int k = 0; k < D; ++k) t.de[k] = j.dh * xh(k) * I;
      for (int k = 0; k < D; ++k)
        for (int l = 0; l < D; ++l) {
          const double dkl = (k == l) ? 1.0 : 0.0;
          t.dde[k][l] = (j.ddh * xh(k) * xh(l) + j.dh / r * (dkl - xh(k) * xh(l))) * I;
        }
      return t;
    };
    kind_ = std::move(kind);
    return *this;
  }

  /// e = a r^{-p} delta.
  AmbientMetric& with_radial_power(double a, double p) {
    return with_radial(
        [a, p](double r) {
          const double v = a * std::pow(r, -p);
          return RadialJet{v, -p * v / r, p * (p + 1.0) * v / (r * r)};
        },
        "radial_power");
  }

  /// e_ij = a x_i x_j r^{-p-2} (anisotropic, |e| ~ a r^{-p}).
  AmbientMetric& with_anisotropic(double a, double p) {
    tensor_ = [a, p](const Vec& x) {
      TensorJet<D> t;
      const double r2 = x.squaredNorm(), r = std::sqrt(r2);
      const double q = p + 2.0;
      const double w = a * std::pow(r, -q);           // a r^{-q}
      const double w1 = -q * w / r2;                  // coefficient of x_k in d_k w
      const double w2 = q * (q + 2.0) * w / (r2 * r2);  // coefficient of x_k x_l in d_k d_l w
      auto d = [](int i, int j) { return i == j ? 1.0 : 0.0; };
      for (int i = 0; i < D; ++i)
        for (int j = 0; j < D; ++j) {
          t.e(i, j) = w * x(i) * x(j);
          for (int k = 0; k < D; ++k) {
            const double dxx = d(i, k) * x(j) + x(i) * d(j, k);
            t.de[k](i, j) = w * dxx + w1 * x(k) * x(i) * x(j);
            for (int l = 0; l < D; ++l) {
              const double dlxx = d(i, l) * x(j) + x(i) * d(j, l);
              const double ddxx = d(i, k) * d(j, l) + d(i, l) * d(j, k);
              const double dw_l = w1 * x(l), dw_k = w1 * x(k);
              const double ddw = w2 * x(k) * x(l) + w1 * d(k, l);
              t.dde[k][l](i, j) = ddw * x(i) * x(j) + dw_k * dlxx + dw_l * dxx + w * ddxx;
            }
          }
        }
      return t;
    };
    kind_ = "anisotropic";
    return *this;
  }

  AmbientMetric& with_tensor(TensorFn fn, std::string kind = "tensor") {
    tensor_ = std::move(fn);
    kind_ = std::move(kind);
    return *this;
  }

  /// Conformal factor f = 1 + m / (2 r^{n-1}).
  double f(const Vec& x) const { return 1.0 + mass_ / (2.0 * std::pow(x.norm(), D - 2)); }
  /// Gradient of f.
  Vec grad_f(const Vec& x) const {
    const double r = x.norm();
    return -(D - 2) * mass_ / (2.0 * std::pow(r, D)) * x;
  }
  /// Gradient of log f.
  Vec grad_log_f(const Vec& x) const { return grad_f(x) / f(x); }

  Mat eval(const Vec& x) const {
    check_domain(x);
    Mat g = std::pow(f(x), exponent()) * Mat::Identity();
    if (tensor_) g += tensor_(x).e;
    return g;
  }

  Derivs derivs(const Vec& x) const {
    check_domain(x);
    Derivs out;
    const double r = x.norm();
    const double n1 = D - 2;  // n - 1
    const double P = exponent();
    const double fv = f(x);
    const double k0 = -n1 * mass_ / 2.0;
    Vec df = k0 * std::pow(r, -(D)) * x;
    const double F = std::pow(fv, P);
    const double F1 = P * std::pow(fv, P - 1.0);
    const double F2 = P * (P - 1.0) * std::pow(fv, P - 2.0);
    const Mat I = Mat::Identity();
    out.g = F * I;
    for (int k = 0; k < D; ++k) out.dg[k] = F1 * df(k) * I;
    for (int k = 0; k < D; ++k)
      for (int l = 0; l < D; ++l) {
        const double dkl = k == l ? 1.0 : 0.0;
        const double ddf = k0 * (dkl * std::pow(r, -D) - D * x(k) * x(l) * std::pow(r, -D - 2));
        out.ddg[k][l] = (F2 * df(k) * df(l) + F1 * ddf) * I;
      }
    if (tensor_) {
      const TensorJet<D> t = tensor_(x);
      out.g += t.e;
      for (int k = 0; k < D; ++k) out.dg[k] += t.de[k];
      for (int k = 0; k < D; ++k)
        for (int l = 0; l < D; ++l) out.ddg[k][l] += t.dde[k][l];
    }
    return out;
  }

  TensorJet<D> perturbation(const Vec& x) const {
    check_domain(x);
    return tensor_ ? tensor_(x) : TensorJet<D>{};
  }

  bool positive_definite(const Vec& x) const {
    Eigen::SelfAdjointEigenSolver<Mat> es(eval(x));
    return es.eigenvalues().minCoeff() > 0.0;
  }

  double exponent() const { return 4.0 / (D - 2); }

 private:
  void validate() const {
    if (!(mass_ >= 0.0)) throw std::invalid_argument("AmbientMetric: mass must be nonnegative");
    if (!(r0_ > 0.0)) throw std::invalid_argument("AmbientMetric: r0 must be positive");
  }
  void check_domain(const Vec& x) const {
    if (!(x.norm() >= r0_)) throw std::domain_error("AmbientMetric: |x| < r0");
  }

  double mass_ = 0.0;
  double r0_ = 1.0;
  TensorFn tensor_;
  std::string kind_ = "none";
};

struct DecayReport {
  std::array<double, 3> K{};         // sup r^{n+a} |d^a e| over samples
  std::array<double, 3> K_inner{};   // same over the inner half of the radii
  std::array<double, 3> K_outer{};   // same over the outer half
  bool bounded = true;
};

/// Discrete membership check for |d^a e| <= K |x|^{-n-a}, a = 0, 1, 2:
/// log-spaced radii from r0 to r0 * span along fixed directions; bounded
/// means the weighted sup does not grow from the inner to the outer half.
template <int D>
DecayReport check_decay(const AmbientMetric<D>& g, double span = 1e4, int n_radii = 60) {
  using Vec = typename AmbientMetric<D>::Vec;
  DecayReport rep;
  const int n = D - 1;
  std::vector<Vec> dirs;
  for (int k = 0; k < D; ++k) dirs.push_back(Vec::Unit(k));
  dirs.push_back(Vec::Ones().normalized());
  for (int i = 0; i < n_radii; ++i) {
    const double r = g.r0() * std::pow(span, static_cast<double>(i) / (n_radii - 1));
    for (const Vec& d : dirs) {
      const auto t = g.perturbation(r * d);
      double a0 = t.e.cwiseAbs().maxCoeff(), a1 = 0.0, a2 = 0.0;
      for (int k = 0; k < D; ++k) {
        a1 = std::max(a1, t.de[k].cwiseAbs().maxCoeff());
        for (int l = 0; l < D; ++l) a2 = std::max(a2, t.dde[k][l].cwiseAbs().maxCoeff());
      }
      const double w[3] = {a0 * std::pow(r, n), a1 * std::pow(r, n + 1), a2 * std::pow(r, n + 2)};
      for (int a = 0; a < 3; ++a) {
        rep.K[a] = std::max(rep.K[a], w[a]);
        auto& half = (2 * i < n_radii) ? rep.K_inner : rep.K_outer;
        half[a] = std::max(half[a], w[a]);
      }
    }
  }
  for (int a = 0; a < 3; ++a)
    if (rep.K_outer[a] > 2.0 * rep.K_inner[a] + 1e-300) rep.bounded = false;
  return rep;
}

}  // namespace catenoid
