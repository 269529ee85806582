#include "oracles.hpp"

#include <cmath>

namespace consflux::test {

double burgers_characteristics(double x, double t, double alpha, double beta) {
  // Valid for t below the breaking time 1/beta.
  double u = alpha + beta * std::sin(x);
  for (int it = 0; it < 100; ++it) {
    const double xi = x - u * t;
    const double g = u - alpha - beta * std::sin(xi);
    const double dg = 1.0 + t * beta * std::cos(xi);
    const double step = g / dg;
    u -= step;
    if (std::abs(step) < 1e-14) break;
  }
  return u;
}

StateField burgers_exact_field(const Grid1D& grid, double t, double alpha, double beta) {
  Matrix values(1, grid.n_cells);
  for (int j = 0; j < grid.n_cells; ++j)
    values(0, j) = burgers_characteristics(grid.center(j), t, alpha, beta);
  return StateField(grid, std::move(values), t);
}

}  // namespace consflux::test
