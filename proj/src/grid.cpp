#include "mlab/grid.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "mlab/errors.hpp"

namespace mlab {

namespace {

bool power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

Grid make_grid(int nx, int np, double x_min, double x_max, double p_min, double p_max,
               Boundary boundary) {
  if (!power_of_two(nx) || !power_of_two(np))
    throw config_error("grid dimensions must be powers of two, got nx=" + std::to_string(nx) +
                       " np=" + std::to_string(np));
  if (!(x_max > x_min) || !(p_max > p_min))
    throw config_error("grid extents must be positive: require x_max > x_min and p_max > p_min");
  if (!std::isfinite(x_min) || !std::isfinite(x_max) || !std::isfinite(p_min) ||
      !std::isfinite(p_max))
    throw config_error("grid extents must be finite");

  Grid g;
  g.nx = nx;
  g.np = np;
  g.x_min = x_min;
  g.x_max = x_max;
  g.p_min = p_min;
  g.p_max = p_max;
  g.boundary = boundary;
  g.dx = (x_max - x_min) / nx;
  g.dp = (p_max - p_min) / np;

  if (boundary == Boundary::periodic_x) {
    const double span = x_max - x_min;
    const double two_pi = 2.0 * std::numbers::pi;
    if (std::abs(span - two_pi) > 1e-12 * two_pi)
      throw config_error("periodic_x grid must span exactly 2*pi, got " + std::to_string(span));
  }
  return g;
}

bool weyl_commensurate(const Grid& g, double hbar, double rel_tol) {
  if (!(hbar > 0)) return false;
  const double ratio = g.np * g.dp * g.dx / (std::numbers::pi * hbar);
  const double j = std::round(ratio);
  if (j < 1 || std::abs(ratio - j) > rel_tol * ratio) return false;
  // Distinct slots: J*d mod np must be injective over |d| <= nx/2 - 1.
  return j * (g.nx - 2) < g.np;
}

}  // namespace mlab
