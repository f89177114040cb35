#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>
#include <vector>

#include "catenoid/quadrature.hpp"
#include "catenoid/stencil.hpp"

using namespace catenoid;

TEST(GaussLegendre, WeightsSumToTwoAndMatchBoost) {
  const auto r = quad::gauss_legendre(20);
  double sum = 0.0;
  for (double w : r.weights) sum += w;
  EXPECT_NEAR(sum, 2.0, 1e-14);
  // Boost stores the non-negative half of the symmetric rule
  const auto& bx = boost::math::quadrature::gauss<double, 20>::abscissa();
  const auto& bw = boost::math::quadrature::gauss<double, 20>::weights();
  for (std::size_t i = 0; i < bx.size(); ++i) {
    EXPECT_NEAR(r.nodes[10 + i], bx[i], 1e-14);
    EXPECT_NEAR(r.weights[10 + i], bw[i], 1e-14);
  }
}

TEST(GaussLegendre, OddRuleHasCentreNode) {
  const auto r = quad::gauss_legendre(7);
  EXPECT_EQ(r.nodes[3], 0.0);
  // exact for degree 13
  double s = 0.0;
  for (std::size_t i = 0; i < 7; ++i) s += r.weights[i] * std::pow(r.nodes[i], 12);
  EXPECT_NEAR(s, 2.0 / 13.0, 1e-14);
}

TEST(Adaptive, SimpsonAndKronrodAgreeWithBoost) {
  auto f = [](double x) { return std::exp(-x) * std::cos(3 * x) / (1 + x * x); };
  const double ref =
      boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, 5.0, 15, 1e-15);
  EXPECT_NEAR(quad::adaptive_simpson(f, 0.0, 5.0, 1e-13).value, ref, 1e-11);
  EXPECT_NEAR(quad::adaptive_gauss_kronrod(f, 0.0, 5.0, 1e-14).value, ref, 1e-13);
}

TEST(Adaptive, ComposeGaussMatchesClosedForm) {
  auto f = [](double x) { return 1.0 / std::cosh(x); };
  // int_0^a sech = 2 atan(tanh(a/2))
  EXPECT_NEAR(quad::composite_gauss_legendre(f, 0.0, 3.0, 8, 16), 2 * std::atan(std::tanh(1.5)),
              1e-14);
}

TEST(Cumulative, FourthOrderConvergence) {
  auto run = [](std::size_t n) {
    const double a = -2.0, b = 3.0, h = (b - a) / (n - 1);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = std::sin(a + h * i);
    const std::size_t anchor = n / 3;
    const auto c = quad::cumulative_integral(y, h, anchor);
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double exact = -std::cos(a + h * i) + std::cos(a + h * anchor);
      err = std::max(err, std::abs(c[i] - exact));
    }
    return err;
  };
  const double e1 = run(101), e2 = run(201);
  EXPECT_LT(e2, 5e-8);
  EXPECT_GT(e1 / e2, 12.0);  // ~16 for fourth order
}

TEST(Stencil, OrdersOnPolynomialsAndSine) {
  std::vector<double> y(21);
  const double h = 0.1;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double x = h * i;
    y[i] = x * x * x;
  }
  // centered order 4 is exact on cubics
  EXPECT_NEAR(fd::d1_at(y, 10, h, 4), 3.0, 1e-11);
  EXPECT_NEAR(fd::d2_at(y, 10, h, 4), 6.0, 1e-9);
  // one-sided end formulas are exact on quadratics
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = (h * i) * (h * i);
  EXPECT_NEAR(fd::d1_at(y, 0, h), 0.0, 1e-12);
  EXPECT_NEAR(fd::d2_at(y, 20, h), 2.0, 1e-9);
  EXPECT_EQ(fd::effective_order(1, 21, 4), 2);
  EXPECT_EQ(fd::effective_order(2, 21, 4), 4);
}

TEST(Stencil, PeriodicDerivative) {
  const std::size_t n = 64;
  const double h = 2 * std::numbers::pi / n;
  std::vector<double> y(n);
  for (std::size_t k = 0; k < n; ++k) y[k] = std::sin(2.0 * h * k);
  EXPECT_NEAR(fd::d1_periodic(y, 0, h), 2.0, 1e-4);
  EXPECT_NEAR(fd::d2_periodic(y, 8, h), -4.0, 1e-3);
}
