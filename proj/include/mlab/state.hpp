#pragma once

#include <string>
#include <vector>

#include "mlab/grid.hpp"

namespace mlab {

// A classical state is a Liouville/Fokker-Planck density (nonnegative up to
// numerics); a wigner state is a Wigner quasidistribution and may go negative.
// Both are real fields on the same kind of lattice and share every operation
// that does not involve hbar.
enum class StateKind { classical, wigner };

// Real-valued phase-space field sampled on a Grid, stored x-major:
// f[i*np + l] = f(x_i, p_l). hbar is required for wigner states and may be
// set on classical states too, where it names the quantum scale used by Weyl
// diagnostics of the classical density (0 means unset).
struct State {
  Grid grid;
  StateKind kind = StateKind::classical;
  double hbar = 0;
  double t = 0;
  std::vector<double> f;

  double& at(int i, int l) { return f[static_cast<std::size_t>(i) * grid.np + l]; }
  double at(int i, int l) const { return f[static_cast<std::size_t>(i) * grid.np + l]; }
};

// Normalized Gaussian centered at (x0, p0) with standard deviations
// (sigma_x, sigma_p). On a periodic grid the position factor is the wrapped
// (image-summed) Gaussian, so the state is smooth across the seam and its
// norm is 1 up to quadrature roundoff even for wide sigmas. For
// kind == wigner, hbar > 0 is required and sigma_x*sigma_p >= hbar/2 is
// enforced (narrower is not a Wigner function of any quantum state).
State gaussian_state(const Grid& grid, double x0, double p0, double sigma_x, double sigma_p,
                     StateKind kind, double hbar = 0);

// Midpoint-rule integral of f over phase space.
double norm(const State& s);

// integral of f^2 dx dp. Conserved exactly by unitary/Liouville flow, decays
// under diffusion. Grid-level Parseval makes the spectral propagator conserve
// it to roundoff.
double l2_mass(const State& s);

// 2*pi*hbar * l2_mass: equals Tr(rho^2) of the Weyl-associated operator.
// Requires hbar > 0 on the state.
double purity(const State& s);

// integral of (|f| - f) dx dp: total negative mass times two, zero for any
// classical density. The nonclassicality measure recorded as "gamma".
double neg_volume(const State& s);

struct MomentResult {
  double value = 0;
  // Set when the requested moment is meaningless on this grid (odd x-moment
  // on a periodic axis). The value is still the literal lattice sum.
  bool ill_defined = false;
};

// <x^a p^b> under f/norm(f). Odd a on a periodic grid flags ill_defined.
MomentResult moment(const State& s, int a, int b);

// Marginals: integral over the other axis, length nx resp. np.
std::vector<double> marginal_x(const State& s);
std::vector<double> marginal_p(const State& s);

// Fraction of integral |f| living in the outer two cells of each box edge.
// Periodic x contributes no edges. Used by the runaway monitor.
double boundary_mass_fraction(const State& s);

// Binary snapshot round trip, format documented in io.cpp (magic "MLAB").
void save_state(const State& s, const std::string& path);
State load_state(const std::string& path);

}  // namespace mlab
