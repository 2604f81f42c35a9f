#include "mlab/weyl.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mlab/errors.hpp"
#include "mlab/fft.hpp"

namespace mlab {

namespace {

using fft::cplx;

// The pair below is a discrete Weyl transform on the even x-sublattice:
// basis points x_a = x_min + 2a*dx, so every midpoint (x_a + x_b)/2 lies on
// grid row a+b and every displacement x_a - x_b = 2d*dx turns the phase
// e^{i p_l u / hbar} into the np-point DFT kernel at slot J*d, with
// J = np*dp*dx / (pi*hbar) integer by the commensurability check. Nothing is
// interpolated in the forward direction: anti-diagonal d of rho is read
// straight off one comb of the p-spectrum of f. Distinct diagonals occupy
// distinct slots, so from_density_matrix can invert the read exactly, and
// to(from(rho)) = rho holds to FFT roundoff for arbitrary Hermitian input.

void check_grid(const Grid& g, double hbar, const char* who) {
  if (!(hbar > 0))
    throw misuse_error(std::string(who) +
                       ": no hbar; set it when constructing classical states");
  if (!weyl_commensurate(g, hbar))
    throw config_error(std::string(who) +
                       ": grid is not commensurate: need np*dp*dx = pi*hbar*J for a positive "
                       "integer J with J*(nx-2) < np");
}

int weyl_ratio(const Grid& g, double hbar) {
  return static_cast<int>(std::lround(g.np * g.dp * g.dx / (std::numbers::pi * hbar)));
}

int slot_of(int d, int np) { return ((d % np) + np) % np; }

// Trigonometric upsample of an n x n Hermitian kernel to the 2n x 2n
// half-step lattice. Fourier zero-padding with the Nyquist bin split evenly
// between +n/2 and -n/2 on each axis: the interpolant is Hermitian and
// passes through the original data at even nodes exactly, which is what
// keeps the round trip exact even for rough input.
fft::Buffer upsample2(const std::vector<cplx>& rho, int n) {
  fft::Buffer R(static_cast<std::size_t>(n) * n);
  std::copy(rho.begin(), rho.end(), R.data());
  fft::cols_plan(R.data(), n, n, FFTW_FORWARD).execute();
  fft::rows_plan(R.data(), n, n, FFTW_FORWARD).execute();

  const int m = 2 * n;
  fft::Buffer R2(static_cast<std::size_t>(m) * m);
  R2.zero();
  // Rows (and then columns) a mode kappa may land on after padding: the
  // interior mode keeps its wrapped frequency, the Nyquist mode splits.
  const auto targets = [n, m](int kap, int idx[2], double w[2]) {
    const int wrap = kap < n / 2 ? kap : kap - n;
    if (wrap == -n / 2) {
      idx[0] = n / 2;
      idx[1] = m - n / 2;
      w[0] = w[1] = 0.5;
      return 2;
    }
    idx[0] = wrap >= 0 ? wrap : wrap + m;
    w[0] = 1.0;
    return 1;
  };
  for (int ka = 0; ka < n; ++ka) {
    int ra[2];
    double wa[2];
    const int na = targets(ka, ra, wa);
    for (int kb = 0; kb < n; ++kb) {
      int rb[2];
      double wb[2];
      const int nb = targets(kb, rb, wb);
      const cplx v = R[static_cast<std::size_t>(ka) * n + kb];
      for (int i = 0; i < na; ++i)
        for (int j = 0; j < nb; ++j)
          R2[static_cast<std::size_t>(ra[i]) * m + rb[j]] += wa[i] * wb[j] * v;
    }
  }
  fft::cols_plan(R2.data(), m, m, FFTW_BACKWARD).execute();
  fft::rows_plan(R2.data(), m, m, FFTW_BACKWARD).execute();
  const double inv = 1.0 / (static_cast<double>(n) * n);
  for (std::size_t i = 0; i < R2.size(); ++i) R2[i] *= inv;
  return R2;
}

}  // namespace

std::complex<double> DensityMatrix::trace() const {
  cplx acc = 0;
  for (int a = 0; a < n; ++a) acc += at(a, a);
  return acc * basis_dx;
}

DensityMatrix to_density_matrix(const State& s) {
  check_grid(s.grid, s.hbar, "to_density_matrix");
  const int nx = s.grid.nx, np = s.grid.np;
  const int n = nx / 2;
  const int J = weyl_ratio(s.grid, s.hbar);
  const double dp = s.grid.dp, dx = s.grid.dx;

  // p-spectrum of f, row by row; slot J*d of row a+b is the coherence at
  // displacement 2*(a-b)*dx.
  fft::Buffer G(s.grid.size());
  for (std::size_t i = 0; i < G.size(); ++i) G[i] = cplx(s.f[i], 0.0);
  fft::rows_plan(G.data(), nx, np, FFTW_BACKWARD).execute();

  DensityMatrix dm;
  dm.n = n;
  dm.grid = s.grid;
  dm.basis_dx = 2.0 * dx;
  dm.hbar = s.hbar;
  dm.t = s.t;
  dm.source = s.kind == StateKind::wigner ? MatrixSource::quantum : MatrixSource::weyl_of_classical;
  dm.rho.resize(static_cast<std::size_t>(n) * n);

  const double theta0 = 2.0 * s.grid.p_min * dx / s.hbar;
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      const int d = a - b;
      const cplx g = G[static_cast<std::size_t>(a + b) * np + slot_of(J * d, np)];
      dm.rho[static_cast<std::size_t>(a) * n + b] = dp * std::polar(1.0, theta0 * d) * g;
    }
  }

  // Hermiticity holds by construction for real f; record the defect, then
  // make it exact so eigensolvers see a clean input.
  double defect = 0;
  for (int a = 0; a < n; ++a) {
    for (int b = a; b < n; ++b) {
      const cplx u = dm.at(a, b), v = std::conj(dm.at(b, a));
      defect = std::max(defect, std::abs(u - v));
      const cplx mid = 0.5 * (u + v);
      dm.at(a, b) = mid;
      dm.at(b, a) = std::conj(mid);
    }
  }
  dm.herm_defect = defect;
  return dm;
}

State from_density_matrix(const DensityMatrix& dm) {
  if (dm.n != dm.grid.nx / 2 || dm.rho.size() != static_cast<std::size_t>(dm.n) * dm.n)
    throw misuse_error("from_density_matrix: matrix inconsistent with its grid");
  if (std::abs(dm.basis_dx - 2.0 * dm.grid.dx) > 1e-12 * dm.grid.dx)
    throw misuse_error("from_density_matrix: basis spacing is not the even sublattice");
  check_grid(dm.grid, dm.hbar, "from_density_matrix");

  const int nx = dm.grid.nx, np = dm.grid.np;
  const int n = dm.n;
  const int J = weyl_ratio(dm.grid, dm.hbar);
  const double dp = dm.grid.dp, dx = dm.grid.dx;
  const double theta0 = 2.0 * dm.grid.p_min * dx / dm.hbar;

  // Slot cells carrying basis-pair data fill half the comb (d and the row
  // a+b share parity). The complementary cells hold the kernel at the odd
  // half-lattice; filling them from the trigonometric interpolant keeps the
  // reconstruction free of the half-window ghost a zero fill would inject,
  // while leaving the even-node data, and hence the round trip, untouched.
  fft::Buffer rho2 = upsample2(dm.rho, n);

  fft::Buffer G(static_cast<std::size_t>(nx) * np);
  G.zero();
  const int m2 = 2 * n;
  for (int a2 = 0; a2 < m2; ++a2) {
    for (int b2 = a2 % 2; b2 < m2; b2 += 2) {
      const int m = (a2 + b2) / 2;
      const int d = (a2 - b2) / 2;
      const cplx v = rho2[static_cast<std::size_t>(a2) * m2 + b2];
      G[static_cast<std::size_t>(m) * np + slot_of(J * d, np)] =
          v * std::polar(1.0 / dp, -theta0 * d);
    }
  }
  fft::rows_plan(G.data(), nx, np, FFTW_FORWARD).execute();

  State s;
  s.grid = dm.grid;
  s.kind = dm.source == MatrixSource::quantum ? StateKind::wigner : StateKind::classical;
  s.hbar = dm.hbar;
  s.t = dm.t;
  s.f.resize(dm.grid.size());
  const double inv_np = 1.0 / np;
  for (std::size_t i = 0; i < s.f.size(); ++i) s.f[i] = G[i].real() * inv_np;
  return s;
}

SpectrumReport spectrum(const DensityMatrix& dm) {
  const int n = dm.n;
  if (dm.rho.size() != static_cast<std::size_t>(n) * n)
    throw misuse_error("spectrum: density matrix size mismatch");

  // Row-major Hermitian data mapped as column-major is the transpose, i.e.
  // the conjugate; the (real) eigenvalues are the same.
  Eigen::Map<const Eigen::MatrixXcd> m(dm.rho.data(), n, n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(m, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw numeric_error("spectrum: eigensolver failed to converge");

  SpectrumReport rep;
  rep.source = dm.source;
  rep.t = dm.t;
  rep.eigenvalues.resize(n);
  // Operator eigenvalues carry the quadrature weight so they sum to Tr.
  for (int i = 0; i < n; ++i) rep.eigenvalues[i] = solver.eigenvalues()[n - 1 - i] * dm.basis_dx;
  for (double lam : rep.eigenvalues) {
    rep.trace += lam;
    rep.purity += lam * lam;
    if (lam < 0) rep.negative_mass -= lam;
  }
  return rep;
}

double nu_of_state(const State& s) { return spectrum(to_density_matrix(s)).negative_mass; }

StateClass classify(const SpectrumReport& rep, double nu_type_ii, double nu_type_i) {
  if (rep.source == MatrixSource::quantum)
    throw misuse_error("classify: classification reads the Weyl transform of the classical "
                       "density, not a quantum state");
  if (!(nu_type_i > 0) || !(nu_type_ii > nu_type_i))
    throw misuse_error("classify: thresholds must satisfy 0 < type_i < type_ii");
  if (rep.negative_mass >= nu_type_ii) return StateClass::type_ii;
  if (rep.negative_mass <= nu_type_i) return StateClass::type_i;
  return StateClass::indeterminate;
}

}  // namespace mlab
