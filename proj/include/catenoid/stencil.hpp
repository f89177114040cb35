#pragma once

// Finite-difference stencils on uniform samples. Centered order 2/4, plus
// second-order one-sided formulas for the first and last samples.

#include <cstddef>
#include <span>
#include <stdexcept>

namespace catenoid::fd {

inline double d1_centered(double fm2, double fm1, double fp1, double fp2, double h, int order) {
  if (order >= 4) return (-fp2 + 8.0 * fp1 - 8.0 * fm1 + fm2) / (12.0 * h);
  return (fp1 - fm1) / (2.0 * h);
}

inline double d2_centered(double fm2, double fm1, double f0, double fp1, double fp2, double h,
                          int order) {
  if (order >= 4) return (-fp2 + 16.0 * fp1 - 30.0 * f0 + 16.0 * fm1 - fm2) / (12.0 * h * h);
  return (fp1 - 2.0 * f0 + fm1) / (h * h);
}

/// Point-local first derivative of a callable.
template <class F>
double d1(F&& f, double x, double h, int order = 4) {
  if (order >= 4) return d1_centered(f(x - 2 * h), f(x - h), f(x + h), f(x + 2 * h), h, 4);
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

/// Point-local second derivative of a callable.
template <class F>
double d2(F&& f, double x, double h, int order = 4) {
  if (order >= 4)
    return d2_centered(f(x - 2 * h), f(x - h), f(x), f(x + h), f(x + 2 * h), h, 4);
  return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
}

/// Order of the stencil actually used at index i of n samples: the
/// requested order in the interior, 2 inside the two-sample boundary band.
inline int effective_order(std::size_t i, std::size_t n, int order) {
  if (order >= 4 && i >= 2 && i + 2 < n) return 4;
  return 2;
}

inline bool in_boundary_band(std::size_t i, std::size_t n, std::size_t width = 2) {
  return i < width || i + width >= n;
}

/// First derivative of uniformly sampled (non-periodic) data at index i.
inline double d1_at(std::span<const double> y, std::size_t i, double h, int order = 4) {
  const std::size_t n = y.size();
  if (n < 4) throw std::invalid_argument("d1_at: need at least 4 samples");
  if (i == 0) return (-3.0 * y[0] + 4.0 * y[1] - y[2]) / (2.0 * h);
  if (i + 1 == n) return (3.0 * y[n - 1] - 4.0 * y[n - 2] + y[n - 3]) / (2.0 * h);
  if (effective_order(i, n, order) == 4)
    return d1_centered(y[i - 2], y[i - 1], y[i + 1], y[i + 2], h, 4);
  return (y[i + 1] - y[i - 1]) / (2.0 * h);
}

/// Second derivative of uniformly sampled (non-periodic) data at index i.
inline double d2_at(std::span<const double> y, std::size_t i, double h, int order = 4) {
  const std::size_t n = y.size();
  if (n < 4) throw std::invalid_argument("d2_at: need at least 4 samples");
  if (i == 0) return (2.0 * y[0] - 5.0 * y[1] + 4.0 * y[2] - y[3]) / (h * h);
  if (i + 1 == n) return (2.0 * y[n - 1] - 5.0 * y[n - 2] + 4.0 * y[n - 3] - y[n - 4]) / (h * h);
  if (effective_order(i, n, order) == 4)
    return d2_centered(y[i - 2], y[i - 1], y[i], y[i + 1], y[i + 2], h, 4);
  return (y[i + 1] - 2.0 * y[i] + y[i - 1]) / (h * h);
}

/// Periodic first/second derivatives (always centered).
inline double d1_periodic(std::span<const double> y, std::size_t i, double h, int order = 4) {
  const std::size_t n = y.size();
  auto at = [&](long k) { return y[static_cast<std::size_t>((k % static_cast<long>(n) + static_cast<long>(n)) % static_cast<long>(n))]; };
  const long j = static_cast<long>(i);
  return d1_centered(at(j - 2), at(j - 1), at(j + 1), at(j + 2), h, order);
}

inline double d2_periodic(std::span<const double> y, std::size_t i, double h, int order = 4) {
  const std::size_t n = y.size();
  auto at = [&](long k) { return y[static_cast<std::size_t>((k % static_cast<long>(n) + static_cast<long>(n)) % static_cast<long>(n))]; };
  const long j = static_cast<long>(i);
  return d2_centered(at(j - 2), at(j - 1), at(j), at(j + 1), at(j + 2), h, order);
}

}  // namespace catenoid::fd
