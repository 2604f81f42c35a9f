#pragma once

#include <complex>
#include <vector>

#include "mlab/state.hpp"

namespace mlab {

// Whether a density matrix came from a Wigner function (a genuine quantum
// state) or is the Weyl transform of a classical distribution (the object
// whose negative eigenvalues classify the dynamics).
enum class MatrixSource { quantum, weyl_of_classical };

// Position-representation operator kernel rho(x_a, x_b), row-major, with
// basis points x_a = x_min + a*basis_dx spaced basis_dx apart. The Weyl pair
// uses the even sublattice of the state's x axis (basis_dx = 2*dx, n = nx/2)
// so every midpoint (x_a + x_b)/2 is itself a grid row and no interpolation
// enters. Operator normalization: Tr = sum_a rho(a,a) * basis_dx, and
// eigenvalues reported by spectrum() carry the basis_dx weight so they sum
// to the trace.
struct DensityMatrix {
  int n = 0;
  Grid grid;  // phase-space grid of the originating state
  double basis_dx = 0;
  double hbar = 0;
  double t = 0;
  MatrixSource source = MatrixSource::quantum;
  std::vector<std::complex<double>> rho;
  // max |rho - rho^dagger| entry observed before symmetrization; the stored
  // matrix is exactly Hermitian.
  double herm_defect = 0;

  std::complex<double>& at(int a, int b) { return rho[static_cast<std::size_t>(a) * n + b]; }
  std::complex<double> at(int a, int b) const { return rho[static_cast<std::size_t>(a) * n + b]; }
  std::complex<double> trace() const;
};

// Discrete Weyl transform pair on the even x-sublattice. Requires
// weyl_commensurate(grid, hbar), which makes the p-transform land exactly on
// the displacement lattice u = 2*d*dx: anti-diagonal d of rho is the p-FFT
// of f's midpoint row a+b read at slot J*d, with no interpolation anywhere
// in the forward direction. from_density_matrix is the exact right inverse:
// to(from(rho)) = rho up to FFT roundoff for any Hermitian rho, with no
// smoothness assumption. In the other order, from(to(f)) keeps only what the
// matrix can encode: a kernel sampled at u-step 2*dx determines f modulo
// p-period np*dp/J, so on J = 1 grids contained smooth states come back to
// spectral accuracy while J >= 2 reconstructions carry 1/J-weight aliases.
// The hbar used for a classical state is s.hbar (set it when constructing
// the state).
DensityMatrix to_density_matrix(const State& s);
State from_density_matrix(const DensityMatrix& dm);

struct SpectrumReport {
  std::vector<double> eigenvalues;  // descending
  double negative_mass = 0;         // nu = -sum of negative eigenvalues
  double purity = 0;                // sum of squared eigenvalues
  double trace = 0;
  MatrixSource source = MatrixSource::quantum;
  double t = 0;
};

SpectrumReport spectrum(const DensityMatrix& dm);

// nu of a state in one shot (to_density_matrix + spectrum).
double nu_of_state(const State& s);

// Classification by the classical-side spectrum: Type I when the negative
// mass stays below nu_type_i, Type II when it reaches nu_type_ii, otherwise
// indeterminate. Feeding a quantum-source spectrum is a misuse (its nu is
// zero by construction and classifies nothing).
enum class StateClass { type_i, type_ii, indeterminate };

StateClass classify(const SpectrumReport& rep, double nu_type_ii = 0.05,
                    double nu_type_i = 0.005);

}  // namespace mlab
