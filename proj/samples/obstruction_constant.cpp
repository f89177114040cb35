// Prints the obstruction constant from both quadrature schemes, then the
// balance ratio residual/m for a few masses at neck 10.

#include <cstdio>

#include "catenoid/obstruction.hpp"

int main() {
  using namespace catenoid;
  const auto a = obstruction_constant();
  std::printf("A = %.16f\n  scheme 1 (adaptive Gauss-Kronrod) %.16f\n  scheme 2 (graded Gauss-Legendre)  %.16f\n",
              a.value, a.scheme1, a.scheme2);
  std::printf("  relative agreement %.2e\n\n", a.relative_agreement);

  const CatenoidSpec spec(10.0);
  std::printf("%10s %14s %12s %s\n", "m", "main term", "ratio", "verdict");
  for (double m : {1e-2, 1e-3, 1e-4}) {
    const auto r = balance_decomposition(spec, nullptr, m, nullptr, {}, a.value);
    std::printf("%10.0e %14.6e %12.6f %s\n", m, r.main_term, 0.25 * std::abs(r.balance) / m, to_string(r.verdict));
  }
}
