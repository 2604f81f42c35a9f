#include "mlab/state.hpp"

#include <cmath>
#include <numbers>

#include "mlab/errors.hpp"

namespace mlab {

namespace {

// Gaussian pdf value, image-summed over the period when wrapped. For
// sigma up to ~the period this converges to machine precision within a
// handful of images; the loop bound is generous.
double wrapped_gauss(double u, double sigma, bool wrapped, double period) {
  const double inv = 1.0 / (std::sqrt(2.0 * std::numbers::pi) * sigma);
  if (!wrapped) return inv * std::exp(-0.5 * (u / sigma) * (u / sigma));
  double acc = 0;
  const int n_img = 4 + static_cast<int>(6.0 * sigma / period);
  for (int n = -n_img; n <= n_img; ++n) {
    const double v = (u + n * period) / sigma;
    acc += std::exp(-0.5 * v * v);
  }
  return inv * acc;
}

}  // namespace

State gaussian_state(const Grid& grid, double x0, double p0, double sigma_x, double sigma_p,
                     StateKind kind, double hbar) {
  if (!(sigma_x > 0) || !(sigma_p > 0))
    throw config_error("gaussian_state: widths must be positive");
  if (kind == StateKind::wigner) {
    if (!(hbar > 0)) throw config_error("gaussian_state: wigner kind requires hbar > 0");
    // Narrower than minimum uncertainty is not the Wigner function of any
    // state. Allow a whisker of roundoff on exactly-minimal inputs.
    if (sigma_x * sigma_p < 0.5 * hbar * (1.0 - 1e-12))
      throw config_error("gaussian_state: sigma_x*sigma_p < hbar/2 is not a valid Wigner state");
  }
  if (hbar < 0) throw config_error("gaussian_state: hbar must be nonnegative");

  State s;
  s.grid = grid;
  s.kind = kind;
  s.hbar = hbar;
  s.t = 0;
  s.f.resize(grid.size());

  const bool wrapped = grid.boundary == Boundary::periodic_x;
  const double period = grid.x_max - grid.x_min;
  std::vector<double> gx(grid.nx), gp(grid.np);
  for (int i = 0; i < grid.nx; ++i) gx[i] = wrapped_gauss(grid.x(i) - x0, sigma_x, wrapped, period);
  for (int l = 0; l < grid.np; ++l) gp[l] = wrapped_gauss(grid.p(l) - p0, sigma_p, false, 0);
  for (int i = 0; i < grid.nx; ++i)
    for (int l = 0; l < grid.np; ++l) s.f[static_cast<std::size_t>(i) * grid.np + l] = gx[i] * gp[l];
  return s;
}

double norm(const State& s) {
  double acc = 0;
  for (double v : s.f) acc += v;
  return acc * s.grid.cell();
}

double l2_mass(const State& s) {
  double acc = 0;
  for (double v : s.f) acc += v * v;
  return acc * s.grid.cell();
}

double purity(const State& s) {
  if (!(s.hbar > 0)) throw misuse_error("purity: state has no hbar set");
  return 2.0 * std::numbers::pi * s.hbar * l2_mass(s);
}

double neg_volume(const State& s) {
  double acc = 0;
  for (double v : s.f) acc += std::abs(v) - v;
  return acc * s.grid.cell();
}

MomentResult moment(const State& s, int a, int b) {
  if (a < 0 || b < 0) throw misuse_error("moment: orders must be nonnegative");
  MomentResult r;
  // An odd-power x-moment on the circle depends on where the seam was cut,
  // so it is reported but flagged.
  if (s.grid.boundary == Boundary::periodic_x && a % 2 == 1) r.ill_defined = true;
  double acc = 0, mass = 0;
  for (int i = 0; i < s.grid.nx; ++i) {
    const double xa = a == 0 ? 1.0 : std::pow(s.grid.x(i), a);
    const double* row = s.f.data() + static_cast<std::size_t>(i) * s.grid.np;
    for (int l = 0; l < s.grid.np; ++l) {
      const double pb = b == 0 ? 1.0 : std::pow(s.grid.p(l), b);
      acc += xa * pb * row[l];
      mass += row[l];
    }
  }
  if (mass == 0) throw numeric_error("moment: state has zero mass");
  r.value = acc / mass;
  return r;
}

std::vector<double> marginal_x(const State& s) {
  std::vector<double> m(s.grid.nx, 0.0);
  for (int i = 0; i < s.grid.nx; ++i) {
    const double* row = s.f.data() + static_cast<std::size_t>(i) * s.grid.np;
    double acc = 0;
    for (int l = 0; l < s.grid.np; ++l) acc += row[l];
    m[i] = acc * s.grid.dp;
  }
  return m;
}

std::vector<double> marginal_p(const State& s) {
  std::vector<double> m(s.grid.np, 0.0);
  for (int i = 0; i < s.grid.nx; ++i) {
    const double* row = s.f.data() + static_cast<std::size_t>(i) * s.grid.np;
    for (int l = 0; l < s.grid.np; ++l) m[l] += row[l];
  }
  for (double& v : m) v *= s.grid.dx;
  return m;
}

double boundary_mass_fraction(const State& s) {
  const int nx = s.grid.nx, np = s.grid.np;
  double total = 0;
  for (double v : s.f) total += std::abs(v);
  if (total == 0) return 0;
  double edge = 0;
  auto absf = [&](int i, int l) { return std::abs(s.f[static_cast<std::size_t>(i) * np + l]); };
  // p edges always count; x edges only for a box.
  for (int i = 0; i < nx; ++i)
    edge += absf(i, 0) + absf(i, 1) + absf(i, np - 2) + absf(i, np - 1);
  if (s.grid.boundary == Boundary::box) {
    for (int l = 0; l < np; ++l)
      edge += absf(0, l) + absf(1, l) + absf(nx - 2, l) + absf(nx - 1, l);
  }
  return edge / total;
}

}  // namespace mlab
