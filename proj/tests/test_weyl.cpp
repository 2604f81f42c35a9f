#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "doctest.h"
#include "mlab/errors.hpp"
#include "mlab/state.hpp"
#include "mlab/weyl.hpp"
#include "support/oracles.hpp"

using namespace mlab;
using cplx = std::complex<double>;

namespace {

const double kTwoPi = 2.0 * std::numbers::pi;

// Box grid with np*dp*dx = pi*hbar at hbar = 0.5 (J = 1): the density-matrix
// basis lattice resolves the full momentum window, so from_density_matrix
// reconstructs smooth kernels pointwise.
Grid cat_grid() {
  const int nx = 128, np = 256;
  const double dx = 16.0 / nx;  // [-8, 8]
  const double dp = std::numbers::pi * 0.5 / (np * dx);
  return make_grid(nx, np, -8, 8, -0.5 * np * dp, 0.5 * np * dp, Boundary::box);
}

// Ring grid at hbar = 5 with selectable J = np*dp*dx/(pi*hbar).
Grid rotor_grid(int nx, int np, int j) {
  const double dx = kTwoPi / nx;
  const double dp = j * std::numbers::pi * 5.0 / (np * dx);
  return make_grid(nx, np, 0, kTwoPi, -0.5 * np * dp, 0.5 * np * dp, Boundary::periodic_x);
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double max_abs(const State& s) {
  double m = 0;
  for (double v : s.f) m = std::max(m, std::abs(v));
  return m;
}

double max_abs_diff(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Random Hermitian PSD matrix with unit trace in the operator normalization
// (sum of diagonal * basis_dx = 1), on the even sublattice of g.
DensityMatrix random_density(const Grid& g, double hbar, MatrixSource source, unsigned seed) {
  const int n = g.nx / 2;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<cplx> a(static_cast<std::size_t>(n) * n);
  for (auto& v : a) v = cplx(nd(rng), nd(rng));
  DensityMatrix dm;
  dm.n = n;
  dm.grid = g;
  dm.basis_dx = 2.0 * g.dx;
  dm.hbar = hbar;
  dm.source = source;
  dm.rho.assign(static_cast<std::size_t>(n) * n, 0.0);
  // rho = A A^dagger, then normalize the trace.
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      cplx acc = 0;
      for (int k = 0; k < n; ++k)
        acc += a[static_cast<std::size_t>(i) * n + k] *
               std::conj(a[static_cast<std::size_t>(j) * n + k]);
      dm.rho[static_cast<std::size_t>(i) * n + j] = acc;
    }
  const cplx tr = dm.trace();
  for (auto& v : dm.rho) v /= tr.real();
  return dm;
}

}  // namespace

TEST_CASE("weyl transform preconditions") {
  const Grid g = cat_grid();
  State s = gaussian_state(g, 0, 0, 0.7, 0.5 / (2 * 0.7), StateKind::classical);  // hbar unset
  CHECK_THROWS_AS(to_density_matrix(s), misuse_error);
  s.hbar = 0.3;  // np*dp*dx / (pi*hbar) lands between integers
  CHECK_THROWS_AS(to_density_matrix(s), config_error);
}

TEST_CASE("pure gaussian: trace, hermiticity, spectrum, round trip") {
  const Grid g = cat_grid();
  const double hbar = 0.5, sx = 0.7, sp = hbar / (2 * sx);
  const State s = gaussian_state(g, 0.5, 0.3, sx, sp, StateKind::wigner, hbar);
  const DensityMatrix dm = to_density_matrix(s);

  CHECK(dm.n == g.nx / 2);
  CHECK(dm.trace().real() == doctest::Approx(norm(s)).epsilon(1e-12));
  CHECK(std::abs(dm.trace().imag()) < 1e-13);
  CHECK(dm.herm_defect < 1e-12);
  CHECK(dm.source == MatrixSource::quantum);

  const SpectrumReport rep = spectrum(dm);
  CHECK(rep.eigenvalues.front() == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(rep.negative_mass < 1e-9);
  CHECK(rep.purity == doctest::Approx(1.0).epsilon(1e-7));
  // Parseval: operator purity equals 2 pi hbar integral(f^2) for a state
  // whose coherences fit the displacement window.
  CHECK(rep.purity == doctest::Approx(purity(s)).epsilon(1e-9));

  const State back = from_density_matrix(dm);
  CHECK(back.kind == StateKind::wigner);
  CHECK(max_abs_diff(back.f, s.f) < 1e-12);
}

TEST_CASE("round trip is exact for arbitrary hermitian matrices") {
  // No smoothness assumption: the forward read is onto (distinct diagonals
  // sit in distinct slots), so from followed by to recovers every entry of
  // a random matrix to FFT roundoff. Checked on a J = 1 box lattice and a
  // J = 2 ring lattice.
  struct Case {
    Grid g;
    double hbar;
  };
  const Case cases[] = {{cat_grid(), 0.5}, {rotor_grid(64, 512, 2), 5.0}};
  for (const auto& [g, hbar] : cases) {
    for (unsigned seed : {7u, 8u, 9u}) {
      const DensityMatrix dm = random_density(g, hbar, MatrixSource::quantum, seed);
      const State f = from_density_matrix(dm);
      const DensityMatrix dm2 = to_density_matrix(f);
      CHECK(max_abs_diff(dm2.rho, dm.rho) < 1e-12);
      CHECK(std::abs(dm2.trace().real() - dm.trace().real()) < 1e-12);
      CHECK(dm2.herm_defect < 1e-12);
    }
  }
}

TEST_CASE("contained mixtures round trip in both directions") {
  // Arbitrary real mixtures (weights of either sign) of packets whose
  // kernels are smooth on the basis lattice and keep well away from the
  // box edges: f -> rho -> f holds to interpolation accuracy and
  // rho -> f -> rho to rounding. On the ring the matrix corners sit at the
  // x wrap point, so "away from the edge" means away from x = 0 as well.
  for (bool rotor : {false, true}) {
    const Grid g = rotor ? rotor_grid(128, 512, 1) : cat_grid();
    const double hbar = rotor ? 5.0 : 0.5;
    std::mt19937_64 rng(rotor ? 11u : 7u);
    std::uniform_real_distribution<double> uc(-1.0, 1.0);
    State f;
    f.grid = g;
    f.kind = StateKind::wigner;
    f.hbar = hbar;
    f.f.assign(g.size(), 0.0);
    for (int kpk = 0; kpk < 5; ++kpk) {
      const double x0 = rotor ? std::numbers::pi + 0.5 * uc(rng) : 2.0 * uc(rng);
      const double p0 = rotor ? 4.0 * uc(rng) : 1.2 * uc(rng);
      const double sx = rotor ? 0.3 : 0.7;
      const double sp = hbar / (2 * sx) * (1.25 + 0.2 * uc(rng));
      const State pk = gaussian_state(g, x0, p0, sx, sp, StateKind::wigner, hbar);
      const double w = uc(rng);
      for (std::size_t i = 0; i < f.f.size(); ++i) f.f[i] += w * pk.f[i];
    }

    const DensityMatrix dm = to_density_matrix(f);
    const State back = from_density_matrix(dm);
    CHECK(max_abs_diff(back.f, f.f) < 1e-11 * max_abs(f));
    const DensityMatrix dm2 = to_density_matrix(back);
    CHECK(max_abs_diff(dm2.rho, dm.rho) < 1e-12);
  }
}

TEST_CASE("cat state: lattice transform matches the analytic wigner function") {
  const Grid g = cat_grid();
  const int n = g.nx / 2;
  const double hbar = 0.5, sigma = 0.7, c = 2.0;
  const double bdx = 2.0 * g.dx;

  // psi = N(phi_+ + phi_-), phi displaced gaussians sampled on the basis
  // lattice; rho built directly as the outer product, trace-normalized.
  std::vector<double> psi(n);
  for (int a = 0; a < n; ++a) {
    const double x = g.x_min + a * bdx;
    psi[a] = std::exp(-(x - c) * (x - c) / (4 * sigma * sigma)) +
             std::exp(-(x + c) * (x + c) / (4 * sigma * sigma));
  }
  double nrm = 0;
  for (double v : psi) nrm += v * v;
  nrm *= bdx;
  DensityMatrix dm;
  dm.n = n;
  dm.grid = g;
  dm.basis_dx = bdx;
  dm.hbar = hbar;
  dm.t = 0;
  dm.source = MatrixSource::quantum;
  dm.rho.resize(static_cast<std::size_t>(n) * n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      dm.rho[static_cast<std::size_t>(a) * n + b] = psi[a] * psi[b] / nrm;

  const State f = from_density_matrix(dm);

  // Closed-form Wigner function of the same superposition: two displaced
  // gaussian lobes plus the interference fringe at the midpoint, overall
  // 1/(2(1+s)) with overlap s = exp(-c^2/(2 sigma^2)).
  const double s_ovl = std::exp(-c * c / (2 * sigma * sigma));
  const double pref = 1.0 / (std::numbers::pi * hbar);
  const double wnorm = 1.0 / (2.0 * (1.0 + s_ovl));
  double worst = 0;
  for (int i = 0; i < g.nx; ++i) {
    for (int l = 0; l < g.np; ++l) {
      const double x = g.x(i), p = g.p(l);
      const double env = std::exp(-2 * sigma * sigma * p * p / (hbar * hbar));
      const double lobes = std::exp(-(x - c) * (x - c) / (2 * sigma * sigma)) +
                           std::exp(-(x + c) * (x + c) / (2 * sigma * sigma));
      const double fringe =
          2.0 * std::exp(-x * x / (2 * sigma * sigma)) * std::cos(2 * c * p / hbar);
      const double analytic = wnorm * pref * env * (lobes + fringe);
      worst = std::max(worst, std::abs(analytic - f.at(i, l)));
    }
  }
  CHECK(worst < 1e-8);

  // The cat is heavily nonclassical pointwise yet exactly positive as an
  // operator: Gamma is order one, nu is roundoff.
  CHECK(neg_volume(f) > 0.3);
  const SpectrumReport rep = spectrum(to_density_matrix(f));
  CHECK(rep.negative_mass < 1e-9);
  CHECK(rep.eigenvalues.front() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("wrapped gaussian on the rotor grid transforms to a positive operator") {
  const Grid g = rotor_grid(64, 512, 2);
  const State s = gaussian_state(g, 0, 0, 2.5, 1.0, StateKind::wigner, 5.0);
  const DensityMatrix dm = to_density_matrix(s);
  CHECK(dm.herm_defect < 1e-12);
  CHECK(dm.trace().real() == doctest::Approx(norm(s)).epsilon(1e-12));
  const SpectrumReport rep = spectrum(dm);
  // Folding a positive-width gaussian around the circle keeps the operator
  // positive semidefinite.
  CHECK(rep.negative_mass < 1e-9);
  CHECK(rep.trace == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(rep.purity <= purity(s) + 1e-9);
}

TEST_CASE("classify reads the classical-side spectrum") {
  SpectrumReport rep;
  rep.source = MatrixSource::weyl_of_classical;
  rep.negative_mass = 0.2;
  CHECK(classify(rep) == StateClass::type_ii);
  rep.negative_mass = 1e-4;
  CHECK(classify(rep) == StateClass::type_i);
  rep.negative_mass = 0.01;
  CHECK(classify(rep) == StateClass::indeterminate);
  rep.source = MatrixSource::quantum;
  CHECK_THROWS_AS(classify(rep), misuse_error);
  rep.source = MatrixSource::weyl_of_classical;
  CHECK_THROWS_AS(classify(rep, 0.001, 0.05), misuse_error);
}

TEST_CASE("from_density_matrix validates shape and lattice") {
  const Grid g = cat_grid();
  DensityMatrix dm = random_density(g, 0.5, MatrixSource::quantum, 3u);
  dm.n = g.nx;
  CHECK_THROWS_AS(from_density_matrix(dm), misuse_error);
  DensityMatrix dm2 = random_density(g, 0.5, MatrixSource::quantum, 4u);
  dm2.hbar = 0.3;
  CHECK_THROWS_AS(from_density_matrix(dm2), config_error);
  DensityMatrix dm3 = random_density(g, 0.5, MatrixSource::quantum, 5u);
  dm3.basis_dx = g.dx;
  CHECK_THROWS_AS(from_density_matrix(dm3), misuse_error);
}
