// Builds the minimal catenoid in 4-dimensional Schwarzschild (n = 3) and
// writes the profile and the Newton history next to the binary.

#include <cstdio>
#include <fstream>

#include "catenoid/constructor.hpp"

int main() {
  using namespace catenoid;
  const double m = 2e-3, r0 = 2.0, c = 4.0;
  const auto g = schwarzschild_radial_metric(m, 3, r0);
  const auto r = newton_construct(3, g, c);
  std::printf("%s\n", r.message.c_str());
  std::printf("metric norm %.4f, sup|H| %.3e, floor %.3e, decay rate %.6f\n", r.metric_norm, r.residual_H,
              r.discretization_floor, r.decay_rate);
  for (std::size_t k = 0; k < r.newton_history.size(); ++k)
    std::printf("  iteration %zu: sup|H| = %.3e\n", k, r.newton_history[k]);
  std::ofstream profile("construct_n3_omega.csv"), history("construct_n3_history.csv");
  r.write_csv(profile);
  r.write_history_csv(history);
  return r.converged ? 0 : 1;
}
