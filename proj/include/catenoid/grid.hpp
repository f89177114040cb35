#pragma once

// Truncated uniform discretization of S^1 x [-V, V] and sampled perturbation
// fields with stencil (or closed-form) derivative access.

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <istream>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "stencil.hpp"

namespace catenoid {

struct CylinderGrid {
  double v_max = 10.0;
  std::size_t n_v = 401;
  std::size_t n_u = 1;
  int stencil_order = 4;

  CylinderGrid() = default;
  CylinderGrid(double vmax, std::size_t nv, std::size_t nu = 1, int order = 4)
      : v_max(vmax), n_v(nv), n_u(nu), stencil_order(order) {
    validate();
  }

  void validate() const {
    if (!(v_max > 0.0) || !std::isfinite(v_max))
      throw std::invalid_argument("CylinderGrid: v_max must be positive and finite");
    if (n_v < 5) throw std::invalid_argument("CylinderGrid: n_v must be at least 5");
    if (n_u < 1) throw std::invalid_argument("CylinderGrid: n_u must be at least 1");
    if (n_u > 1 && n_u < 3)
      throw std::invalid_argument("CylinderGrid: angular direction needs n_u = 1 or n_u >= 3");
    if (stencil_order != 2 && stencil_order != 4)
      throw std::invalid_argument("CylinderGrid: stencil_order must be 2 or 4");
  }

  double h_v() const { return 2.0 * v_max / static_cast<double>(n_v - 1); }
  double h_u() const { return 2.0 * std::numbers::pi / static_cast<double>(n_u); }
  double v(std::size_t i) const { return -v_max + h_v() * static_cast<double>(i); }
  double u(std::size_t k) const { return h_u() * static_cast<double>(k); }
  std::size_t size() const { return n_u * n_v; }
  std::size_t index(std::size_t k, std::size_t i) const { return k * n_v + i; }
  bool radial() const { return n_u == 1; }
  bool in_band(std::size_t i) const { return fd::in_boundary_band(i, n_v); }
  /// Index of the sample closest to v = 0.
  std::size_t center() const { return (n_v - 1) / 2; }

  std::vector<double> v_nodes() const {
    std::vector<double> out(n_v);
    for (std::size_t i = 0; i < n_v; ++i) out[i] = v(i);
    return out;
  }
};

/// Value and derivatives up to order two at one point.
struct FieldJet {
  double value = 0.0, du = 0.0, dv = 0.0, duu = 0.0, duv = 0.0, dvv = 0.0;

  FieldJet scaled(double t) const { return {t * value, t * du, t * dv, t * duu, t * duv, t * dvv}; }
  /// Pointwise C^2 magnitude: sum over multi-indices of |d^alpha f|.
  double c2_sum() const {
    return std::abs(value) + std::abs(du) + std::abs(dv) + std::abs(duu) + std::abs(duv) +
           std::abs(dvv);
  }
};

using JetFunction = std::function<FieldJet(double u, double v)>;

struct NormLocation {
  double value = 0.0;
  double u = 0.0;
  double v = 0.0;
};

class PerturbationField {
 public:
  PerturbationField() = default;

  PerturbationField(CylinderGrid grid, std::vector<double> values)
      : grid_(grid), values_(std::move(values)) {
    grid_.validate();
    if (values_.size() != grid_.size())
      throw std::invalid_argument("PerturbationField: value count does not match grid");
    for (double x : values_)
      if (!std::isfinite(x)) throw std::invalid_argument("PerturbationField: non-finite value");
    build_stencil_derivatives();
  }

  /// Field with a closed-form jet; grid values are samples of it.
  PerturbationField(CylinderGrid grid, JetFunction analytic) : grid_(grid), analytic_(std::move(analytic)) {
    grid_.validate();
    values_.resize(grid_.size());
    jets_.resize(grid_.size());
    for (std::size_t k = 0; k < grid_.n_u; ++k)
      for (std::size_t i = 0; i < grid_.n_v; ++i) {
        const FieldJet j = (*analytic_)(grid_.u(k), grid_.v(i));
        if (!std::isfinite(j.value) || !std::isfinite(j.dvv) || !std::isfinite(j.duu))
          throw std::invalid_argument("PerturbationField: non-finite analytic jet");
        values_[grid_.index(k, i)] = j.value;
        jets_[grid_.index(k, i)] = j;
      }
    compute_norm();
  }

  static PerturbationField sample(CylinderGrid grid, const std::function<double(double, double)>& fn) {
    std::vector<double> vals(grid.size());
    for (std::size_t k = 0; k < grid.n_u; ++k)
      for (std::size_t i = 0; i < grid.n_v; ++i) vals[grid.index(k, i)] = fn(grid.u(k), grid.v(i));
    return PerturbationField(grid, std::move(vals));
  }

  static PerturbationField zero(CylinderGrid grid) {
    return PerturbationField(grid, std::vector<double>(grid.size(), 0.0));
  }

  const CylinderGrid& grid() const { return grid_; }
  const std::vector<double>& values() const { return values_; }
  bool has_analytic() const { return analytic_.has_value(); }
  const JetFunction* analytic() const { return analytic_ ? &*analytic_ : nullptr; }

  double value(std::size_t k, std::size_t i) const { return values_[grid_.index(k, i)]; }
  const FieldJet& jet(std::size_t k, std::size_t i) const { return jets_[grid_.index(k, i)]; }
  /// Jet anywhere: closed form when available, otherwise requires a grid point.
  FieldJet jet_at(double u, double v) const {
    if (!analytic_) throw std::logic_error("PerturbationField::jet_at: no analytic form");
    return (*analytic_)(u, v);
  }

  /// Discrete C^2_b norm (sum over multi-indices of sup norms) and the point
  /// where the pointwise sum is largest.
  double c2b_norm() const { return c2b_norm_; }
  NormLocation c2b_argmax() const { return argmax_; }

  void write_csv(std::ostream& os) const {
    os << "u,v,value\n" << std::setprecision(17);
    for (std::size_t k = 0; k < grid_.n_u; ++k)
      for (std::size_t i = 0; i < grid_.n_v; ++i)
        os << grid_.u(k) << ',' << grid_.v(i) << ',' << value(k, i) << '\n';
  }

  /// Reads the `u,v,value` layout; the grid is inferred and must be uniform.
  static PerturbationField read_csv(std::istream& is, int stencil_order = 4) {
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("read_csv: empty input");
    struct Row {
      double u, v, value;
    };
    std::vector<Row> rows;
    std::vector<double> us, vs;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
      ++lineno;
      if (line.empty()) continue;
      std::replace(line.begin(), line.end(), ',', ' ');
      std::istringstream ss(line);
      Row r{};
      if (!(ss >> r.u >> r.v >> r.value))
        throw std::runtime_error("read_csv: malformed row at line " + std::to_string(lineno));
      rows.push_back(r);
      us.push_back(r.u);
      vs.push_back(r.v);
    }
    auto uniq = [](std::vector<double> x) {
      std::sort(x.begin(), x.end());
      std::vector<double> out;
      for (double a : x)
        if (out.empty() || std::abs(a - out.back()) > 1e-12 * (1.0 + std::abs(a))) out.push_back(a);
      return out;
    };
    const auto U = uniq(us), V = uniq(vs);
    if (V.size() < 5) throw std::runtime_error("read_csv: need at least 5 distinct v values");
    const double vmax = V.back();
    if (std::abs(V.front() + vmax) > 1e-9 * (1.0 + vmax))
      throw std::runtime_error("read_csv: v range must be symmetric");
    CylinderGrid g(vmax, V.size(), U.size(), stencil_order);
    for (std::size_t i = 0; i < V.size(); ++i)
      if (std::abs(V[i] - g.v(i)) > 1e-9 * (1.0 + vmax))
        throw std::runtime_error("read_csv: non-uniform v spacing rejected");
    for (std::size_t k = 0; k < U.size(); ++k)
      if (std::abs(U[k] - g.u(k)) > 1e-9)
        throw std::runtime_error("read_csv: angular samples must be uniform starting at 0");
    if (rows.size() != g.size()) throw std::runtime_error("read_csv: incomplete or duplicated grid");
    std::vector<double> vals(g.size(), 0.0);
    std::vector<char> seen(g.size(), 0);
    for (const Row& r : rows) {
      const auto k = static_cast<std::size_t>(std::lround(r.u / g.h_u()));
      const auto i = static_cast<std::size_t>(std::lround((r.v + vmax) / g.h_v()));
      if (k >= g.n_u || i >= g.n_v || seen[g.index(k, i)])
        throw std::runtime_error("read_csv: duplicated or misplaced sample");
      seen[g.index(k, i)] = 1;
      vals[g.index(k, i)] = r.value;
    }
    return PerturbationField(g, std::move(vals));
  }

 private:
  void build_stencil_derivatives() {
    const std::size_t nu = grid_.n_u, nv = grid_.n_v;
    const double hu = grid_.h_u(), hv = grid_.h_v();
    const int ord = grid_.stencil_order;
    const int uord = nu >= 5 ? ord : 2;
    jets_.assign(grid_.size(), FieldJet{});
    std::vector<double> du(grid_.size(), 0.0), duu(grid_.size(), 0.0);
    std::vector<double> row(nu);
    for (std::size_t i = 0; i < nv; ++i) {
      if (nu == 1) break;
      for (std::size_t k = 0; k < nu; ++k) row[k] = values_[grid_.index(k, i)];
      for (std::size_t k = 0; k < nu; ++k) {
        du[grid_.index(k, i)] = fd::d1_periodic(row, k, hu, uord);
        duu[grid_.index(k, i)] = fd::d2_periodic(row, k, hu, uord);
      }
    }
    for (std::size_t k = 0; k < nu; ++k) {
      std::span<const double> col(values_.data() + grid_.index(k, 0), nv);
      std::span<const double> dcol(du.data() + grid_.index(k, 0), nv);
      for (std::size_t i = 0; i < nv; ++i) {
        FieldJet& j = jets_[grid_.index(k, i)];
        j.value = col[i];
        j.dv = fd::d1_at(col, i, hv, ord);
        j.dvv = fd::d2_at(col, i, hv, ord);
        j.du = du[grid_.index(k, i)];
        j.duu = duu[grid_.index(k, i)];
        j.duv = nu == 1 ? 0.0 : fd::d1_at(dcol, i, hv, ord);
      }
    }
    compute_norm();
  }

  void compute_norm() {
    double s[6] = {0, 0, 0, 0, 0, 0};
    double best = -1.0;
    for (std::size_t k = 0; k < grid_.n_u; ++k)
      for (std::size_t i = 0; i < grid_.n_v; ++i) {
        const FieldJet& j = jets_[grid_.index(k, i)];
        const double a[6] = {j.value, j.du, j.dv, j.duu, j.duv, j.dvv};
        for (int t = 0; t < 6; ++t) s[t] = std::max(s[t], std::abs(a[t]));
        if (j.c2_sum() > best) {
          best = j.c2_sum();
          argmax_ = {best, grid_.u(k), grid_.v(i)};
        }
      }
    c2b_norm_ = s[0] + s[1] + s[2] + s[3] + s[4] + s[5];
  }

  CylinderGrid grid_;
  std::vector<double> values_;
  std::vector<FieldJet> jets_;
  std::optional<JetFunction> analytic_;
  double c2b_norm_ = 0.0;
  NormLocation argmax_;
};

}  // namespace catenoid
