#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "catenoid/geometry.hpp"
#include "catenoid/metric.hpp"

using namespace catenoid;

TEST(CatenoidPoint, NeckCircleAndRotation) {
  const Vec3 a = catenoid_point(CatenoidSpec(1.0), 0.0, 0.0);
  EXPECT_EQ(a, Vec3(1, 0, 0));
  const Vec3 b = catenoid_point(CatenoidSpec(2.0), std::numbers::pi / 2, 0.0);
  EXPECT_NEAR(b(0), 0.0, 1e-15);
  EXPECT_NEAR(b(1), 2.0, 1e-15);
  EXPECT_EQ(b(2), 0.0);
}

TEST(CatenoidPoint, DirectEvaluationAtVOne) {
  const Vec3 p = catenoid_point(CatenoidSpec(1.0), 0.0, 1.0);
  EXPECT_NEAR(p(0), std::cosh(1.0), 1e-15);
  EXPECT_EQ(p(1), 0.0);
  EXPECT_NEAR(p(2), 1.0, 1e-15);
  EXPECT_NEAR(p.squaredNorm(), std::cosh(1.0) * std::cosh(1.0) + 1.0, 1e-14);
}

TEST(CatenoidPoint, SquaredNormIdentityRandom) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(0, 2 * std::numbers::pi), V(-20, 20), C(0.1, 10);
  for (int t = 0; t < 500; ++t) {
    const double c = C(rng), u = U(rng), v = V(rng);
    const Vec3 p = catenoid_point(CatenoidSpec(c), u, v);
    const double ch = std::cosh(v);
    EXPECT_NEAR(p.squaredNorm() / (c * c * (ch * ch + v * v)), 1.0, 1e-12);
  }
}

TEST(CatenoidPoint, OverflowFlagged) {
  const auto p = catenoid_point_checked(CatenoidSpec(1.0), 0.3, 800.0);
  EXPECT_FALSE(p.representable);
  EXPECT_NEAR(p.log_radius, 800.0 - std::log(2.0), 1e-9);
  const auto q = catenoid_point_checked(CatenoidSpec(1.0), 0.3, 50.0);
  EXPECT_TRUE(q.representable);
  EXPECT_NEAR(q.log_radius, std::log(std::cosh(50.0)), 1e-12);
}

TEST(NormalGraph, ZeroOmegaBitIdentical) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0, 6.28), V(-25, 25);
  const CatenoidSpec s(1.7);
  for (int t = 0; t < 200; ++t) {
    const double u = U(rng), v = V(rng);
    const Vec3 a = catenoid_point(s, u, v), b = normal_graph_point(s, 0.0, u, v);
    EXPECT_EQ(a(0), b(0));
    EXPECT_EQ(a(1), b(1));
    EXPECT_EQ(a(2), b(2));
  }
}

TEST(NormalGraph, ConstantOmegaAtNeck) {
  const double eps = 0.05;
  const Vec3 p = normal_graph_point(CatenoidSpec(1.0), eps, 0.0, 0.0);
  EXPECT_NEAR(p(0), 1.0 + eps, 1e-15);
  EXPECT_EQ(p(1), 0.0);
  EXPECT_EQ(p(2), 0.0);
}

TEST(NormalGraph, SquaredNormExpansionIdentity) {
  // |F^Omega|^2 = |F|^2 + 2 c psi0 Omega + Omega^2 for any Omega
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(0, 6.28), V(-6, 6), W(-0.3, 0.3);
  for (int t = 0; t < 300; ++t) {
    const double c = 2.0, u = U(rng), v = V(rng), w = W(rng) * std::sin(3 * u) / std::cosh(v);
    const Vec3 F = catenoid_point(CatenoidSpec(c), u, v);
    const Vec3 G = normal_graph_point(CatenoidSpec(c), w, u, v);
    const double F2 = F.squaredNorm();
    const double rhs = F2 * (1.0 + 2.0 * c * psi0(v) * w / F2 + w * w / F2);
    EXPECT_NEAR(G.squaredNorm() / rhs, 1.0, 1e-10);
  }
}

TEST(NormalGraph, GraphConditionDiagnostic) {
  const CylinderGrid g(5.0, 101, 16);
  const auto big = PerturbationField::sample(g, [](double, double v) { return 2.0 / std::cosh(v); });
  const auto chk = check_graph_condition(CatenoidSpec(1.0), big);
  EXPECT_FALSE(chk.ok);
  EXPECT_NE(chk.message.find("c/3"), std::string::npos);
  EXPECT_NEAR(chk.v, 0.0, 0.2);
  EXPECT_THROW(normal_graph_point(CatenoidSpec(1.0), big, 0, 50), std::domain_error);
  const auto small = PerturbationField::sample(g, [](double, double v) { return 0.01 / std::cosh(v); });
  EXPECT_TRUE(check_graph_condition(CatenoidSpec(1.0), small).ok);
}

TEST(UnitNormal, ValuesAndOrthogonality) {
  const CatenoidSpec s(1.0);
  EXPECT_EQ(unit_normal_flat(s, 0, 0), Vec3(1, 0, 0));
  const Vec3 n1 = unit_normal_flat(s, 0, 1);
  const Vec3 ref = Vec3(1, 0, -std::sinh(1.0)) / std::cosh(1.0);
  EXPECT_NEAR((n1 - ref).norm(), 0.0, 1e-15);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0, 6.28), V(-4, 4);
  const double h = 1e-4;
  for (int t = 0; t < 100; ++t) {
    const double u = U(rng), v = V(rng);
    const Vec3 n = unit_normal_flat(CatenoidSpec(2.5), u, v);
    EXPECT_NEAR(n.norm(), 1.0, 1e-12);
    auto F = [&](double a, double b) { return catenoid_point(CatenoidSpec(2.5), a, b); };
    const Vec3 tu = (F(u + h, v) - F(u - h, v)) / (2 * h);
    const Vec3 tv = (F(u, v + h) - F(u, v - h)) / (2 * h);
    EXPECT_LT(std::abs(n.dot(tu)) / tu.norm(), 1e-8);
    EXPECT_LT(std::abs(n.dot(tv)) / tv.norm(), 1e-8);
  }
}

TEST(Profile, TrivialCases) {
  const auto p = profile(2, 0.0);
  EXPECT_EQ(p.phi, 1.0);
  EXPECT_EQ(p.psi, 0.0);
  EXPECT_EQ(profile(2, 1.37).psi, 1.37);
  EXPECT_NEAR(profile(2, 1.37).phi, std::cosh(1.37), 1e-14);
}

TEST(Profile, PsiN3AgainstFixedRuleOracle) {
  // high-order Gauss-Kronrod (Boost) on int_0^1 cosh(2 s)^{-1/2}
  auto f = [](double s) { return 1.0 / std::sqrt(std::cosh(2 * s)); };
  const double ref = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, 1.0, 0, 0);
  EXPECT_NEAR(profile(3, 1.0).psi, ref, 1e-10);
  // value cross-checked with mpmath at 30 digits
  EXPECT_NEAR(ref, 0.791714375645342, 1e-14);
  const ProfileTable tab(3);
  EXPECT_NEAR(tab.psi(1.0), ref, 1e-13);
}

TEST(Profile, ParityAndTableAgreement) {
  for (int n : {2, 3, 4, 5}) {
    const ProfileTable tab(n);
    for (double s : {0.1, 0.77, 2.0, 2.999, 3.5, 7.0}) {
      const auto a = profile(n, s), b = profile(n, -s);
      EXPECT_NEAR(a.phi, b.phi, 1e-12 * a.phi);
      EXPECT_NEAR(a.psi, -b.psi, 1e-12);
      EXPECT_GE(a.phi, 1.0);
      EXPECT_NEAR(tab.psi(s), a.psi, 2e-12) << "n=" << n << " s=" << s;
      EXPECT_NEAR(tab.psi(-s), -a.psi, 2e-12);
    }
  }
}

TEST(Profile, OmegaTailAndTotal) {
  // T for n = 3 (mpmath reference), and omega = T - psi with relative accuracy
  const ProfileTable t3(3);
  EXPECT_NEAR(t3.T(), 1.31102877714606, 1e-13);
  for (int n : {3, 4, 5}) {
    const ProfileTable t(n);
    for (double s : {4.0, 10.0, 30.0}) {
      auto f = [n](double x) { return std::exp(-(n - 2.0) / (n - 1.0) * log_cosh((n - 1) * x)); };
      const double ref = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
          f, s, std::numeric_limits<double>::infinity(), 15, 1e-15);
      EXPECT_NEAR(t.omega(s) / ref, 1.0, 1e-11) << n << " " << s;
    }
    EXPECT_NEAR(t.omega(2.0) + t.psi(2.0), t.T(), 1e-14);
    EXPECT_NEAR(t.omega(-1.0), t.T() + t.psi(1.0), 1e-14);
  }
}

TEST(CatenoidND, PointsAndNormals) {
  VecX e1 = VecX::Zero(3);
  e1(0) = 1.0;
  const CatenoidSpec s3(1.0, 3);
  const VecX p = catenoid_point_nd(s3, e1, 0.0);
  EXPECT_NEAR((p - (VecX(4) << 1, 0, 0, 0).finished()).norm(), 0.0, 1e-15);
  VecX th = VecX::Ones(3).normalized();
  EXPECT_NEAR(catenoid_point_nd(CatenoidSpec(2.0, 3), th, 0.0).norm(), 2.0, 1e-14);
  const VecX q = catenoid_point_nd(s3, e1, 1.0);
  const auto pr = profile(3, 1.0);
  EXPECT_NEAR(q(0), pr.phi, 1e-14);
  EXPECT_NEAR(q(3), pr.psi, 1e-14);
  EXPECT_NEAR((unit_normal_flat_nd(s3, e1, 0.0) - p).norm(), 0.0, 1e-15);
  VecX bad = VecX::Ones(3);
  EXPECT_THROW(catenoid_point_nd(s3, bad, 0.3), std::invalid_argument);
  // normal matches the stated formula and is orthogonal to the s-tangent
  const double s = 0.6, h = 1e-5;
  const VecX n = unit_normal_flat_nd(s3, th, s);
  const auto P = profile(3, s);
  VecX ref(4);
  ref.head(3) = std::pow(P.phi, -1.0) * std::pow(P.phi, -1.0) * th;
  ref(3) = -P.dphi / P.phi;
  EXPECT_NEAR((n - ref).norm(), 0.0, 1e-14);
  const VecX ts = (catenoid_point_nd(s3, th, s + h) - catenoid_point_nd(s3, th, s - h)) / (2 * h);
  EXPECT_LT(std::abs(n.dot(ts)), 1e-9);
}

TEST(Grid, Validation) {
  EXPECT_THROW(CylinderGrid(0.0, 11, 1), std::invalid_argument);
  EXPECT_THROW(CylinderGrid(1.0, 4, 1), std::invalid_argument);
  EXPECT_THROW(CylinderGrid(1.0, 11, 2), std::invalid_argument);
  const CylinderGrid g(2.0, 5, 4);
  EXPECT_DOUBLE_EQ(g.v(0), -2.0);
  EXPECT_DOUBLE_EQ(g.v(4), 2.0);
  EXPECT_DOUBLE_EQ(g.u(1), std::numbers::pi / 2);
}

TEST(Grid, CsvRoundTripAndNonUniformRejected) {
  const CylinderGrid g(3.0, 31, 8);
  const auto f = PerturbationField::sample(g, [](double u, double v) { return std::cos(u) * std::exp(-v * v); });
  std::stringstream ss;
  f.write_csv(ss);
  const auto back = PerturbationField::read_csv(ss);
  ASSERT_EQ(back.grid().n_v, 31u);
  ASSERT_EQ(back.grid().n_u, 8u);
  for (std::size_t k = 0; k < 8; ++k)
    for (std::size_t i = 0; i < 31; ++i) EXPECT_DOUBLE_EQ(back.value(k, i), f.value(k, i));
  std::stringstream bad("u,v,value\n0,-1,0\n0,-0.2,0\n0,0,0\n0,0.5,0\n0,1,0\n");
  EXPECT_THROW(PerturbationField::read_csv(bad), std::runtime_error);
}

TEST(Grid, StencilDerivativesOfField) {
  const CylinderGrid g(4.0, 401, 32);
  const auto f = PerturbationField::sample(g, [](double u, double v) { return std::sin(2 * u) * std::tanh(v); });
  const auto& j = f.jet(5, 230);
  const double u = g.u(5), v = g.v(230);
  const double sh = 1 / std::cosh(v);
  EXPECT_NEAR(j.dv, std::sin(2 * u) * sh * sh, 1e-7);
  EXPECT_NEAR(j.dvv, -2 * std::sin(2 * u) * sh * sh * std::tanh(v), 1e-7);
  EXPECT_NEAR(j.du, 2 * std::cos(2 * u) * std::tanh(v), 1e-3);
  EXPECT_NEAR(j.duv, 2 * std::cos(2 * u) * sh * sh, 1e-3);
}

TEST(Metric, FlatAndSchwarzschildValues) {
  const AmbientMetric<3> flat(0.0, 0.5);
  EXPECT_EQ(flat.eval(Eigen::Vector3d(1, 2, 3)), Eigen::Matrix3d::Identity());
  const AmbientMetric<3> g(1.0, 0.1);
  // f = 1 + 1/2 at |x| = 1, g = f^4 delta
  EXPECT_NEAR(g.eval(Eigen::Vector3d(0, 0, 1))(0, 0), std::pow(1.5, 4), 1e-14);
  EXPECT_THROW(g.eval(Eigen::Vector3d(0.01, 0, 0)), std::domain_error);
  const AmbientMetric<4> g4(1.0, 0.1);
  EXPECT_NEAR(g4.eval(Eigen::Vector4d(1, 0, 0, 0))(2, 2), std::pow(1.5, 2), 1e-14);
}

template <int D>
void check_metric_derivs(const AmbientMetric<D>& g, const Eigen::Matrix<double, D, 1>& x) {
  const double h = 1e-5;
  const auto d = g.derivs(x);
  EXPECT_NEAR((d.g - g.eval(x)).norm(), 0.0, 1e-14);
  for (int k = 0; k < D; ++k) {
    Eigen::Matrix<double, D, 1> e = Eigen::Matrix<double, D, 1>::Unit(k) * h;
    const Eigen::Matrix<double, D, D> fd = (g.eval(x + e) - g.eval(x - e)) / (2 * h);
    EXPECT_NEAR((fd - d.dg[k]).norm(), 0.0, 1e-8) << "k=" << k;
    const auto dp = g.derivs(x + e), dm = g.derivs(x - e);
    for (int l = 0; l < D; ++l)
      EXPECT_NEAR(((dp.dg[l] - dm.dg[l]) / (2 * h) - d.ddg[k][l]).norm(), 0.0, 1e-7);
  }
}

TEST(Metric, ClosedFormDerivativesMatchDifferences) {
  AmbientMetric<3> a(0.7, 0.2);
  check_metric_derivs(a, Eigen::Vector3d(0.9, -0.4, 1.3));
  AmbientMetric<3> b(0.7, 0.2);
  b.with_anisotropic(0.3, 2.0);
  check_metric_derivs(b, Eigen::Vector3d(0.9, -0.4, 1.3));
  AmbientMetric<3> c(0.0, 0.2);
  c.with_radial_power(0.2, 2.5);
  check_metric_derivs(c, Eigen::Vector3d(0.5, 0.6, -0.7));
  AmbientMetric<4> d(0.4, 0.2);
  d.with_anisotropic(0.1, 3.0);
  check_metric_derivs(d, Eigen::Vector4d(0.5, 0.6, -0.7, 0.2));
}

TEST(Metric, DecayMembership) {
  AmbientMetric<3> ok(1.0, 0.5);
  ok.with_anisotropic(0.2, 2.0);
  EXPECT_TRUE(check_decay(ok).bounded);
  AmbientMetric<3> slow(1.0, 0.5);
  slow.with_radial_power(0.2, 1.0);  // decays one power too slowly
  EXPECT_FALSE(check_decay(slow).bounded);
}

TEST(Metric, RadialSplineReproducesCubicAndTail) {
  std::vector<double> r, h;
  for (int i = 0; i <= 40; ++i) {
    r.push_back(1.0 + 0.1 * i);
    h.push_back(std::pow(r.back(), -2.0));
  }
  const RadialSpline s(r, h, 2.0);
  const auto j = s(2.33);
  EXPECT_NEAR(j.h, std::pow(2.33, -2.0), 1e-6);
  EXPECT_NEAR(j.dh, -2.0 * std::pow(2.33, -3.0), 1e-4);
  const auto t = s(10.0);
  EXPECT_NEAR(t.h, std::pow(10.0, -2.0), 1e-14);
  EXPECT_THROW(s(0.5), std::domain_error);
}
