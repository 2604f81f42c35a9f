#pragma once

#include <cstddef>

namespace mlab {

enum class Boundary { box, periodic_x };

// Uniform rectangular phase-space lattice. Nodes sit at
//   x_i = x_min + i*dx,  p_l = p_min + l*dp,  dx = (x_max-x_min)/nx,
// so x_max itself is not a node; each node owns the cell centered on it and
// quadrature is the midpoint rule with weight dx*dp. For periodic_x the
// position axis is the circle [x_min, x_max). The momentum axis is always a
// box; whatever leaks toward its edges is monitored during evolution, not
// wrapped.
struct Grid {
  int nx = 0;
  int np = 0;
  double x_min = 0, x_max = 0;
  double p_min = 0, p_max = 0;
  Boundary boundary = Boundary::box;
  double dx = 0;
  double dp = 0;

  double x(int i) const { return x_min + i * dx; }
  double p(int l) const { return p_min + l * dp; }
  std::size_t size() const { return static_cast<std::size_t>(nx) * np; }
  double cell() const { return dx * dp; }

  bool operator==(const Grid&) const = default;
};

// Validates and builds a grid. nx and np must be powers of two (the
// propagator and the Weyl transform are FFT based), extents must be positive,
// and a periodic grid must span exactly 2*pi (relative tolerance 1e-12).
Grid make_grid(int nx, int np, double x_min, double x_max, double p_min, double p_max,
               Boundary boundary);

// True when the lattice supports an exactly invertible Weyl transform at this
// hbar: np*dp*dx == pi*hbar*J for a positive integer J, so the phase
// e^{i p_l u / hbar} at displacement u = 2*d*dx is the np-point DFT kernel at
// slot J*d, and J*(nx-2) < np so distinct diagonals land in distinct slots.
// rel_tol guards the integrality test.
bool weyl_commensurate(const Grid& g, double hbar, double rel_tol = 1e-9);

}  // namespace mlab
