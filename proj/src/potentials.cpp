#include "mlab/potentials.hpp"

#include <algorithm>
#include <cmath>

#include "mlab/errors.hpp"

namespace mlab {

double Potential::static_eval(double x, int order) const {
  switch (family) {
    case Family::free_particle:
    case Family::kicked_rotor:
      return 0.0;
    case Family::harmonic: {
      const double k = mass * omega0 * omega0;
      if (order == 0) return 0.5 * k * x * x;
      if (order == 1) return k * x;
      if (order == 2) return k;
      return 0.0;
    }
    case Family::duffing: {
      switch (order) {
        case 0: return B * x * x * x * x - A * x * x;
        case 1: return 4.0 * B * x * x * x - 2.0 * A * x;
        case 2: return 12.0 * B * x * x - 2.0 * A;
        case 3: return 24.0 * B * x;
        case 4: return 24.0 * B;
        default: return 0.0;
      }
    }
  }
  return 0.0;
}

double Potential::drive_coeff(double t) const {
  if (family == Family::duffing && lambda != 0.0) return lambda * std::cos(omega * t);
  return 0.0;
}

double Potential::eval(double x, double t, int order) const {
  double v = static_eval(x, order);
  if (order == 0) v += drive_coeff(t) * x;
  if (order == 1) v += drive_coeff(t);
  return v;
}

double Potential::force(double x, double t, int order) const {
  if (family == Family::kicked_rotor) {
    // Impulse profile kappa*sin(x); with unit kick period this is also the
    // mean force, which is what the localization diagnostic wants.
    switch (order % 4) {
      case 0: return kappa * std::sin(x);
      case 1: return kappa * std::cos(x);
      case 2: return -kappa * std::sin(x);
      default: return -kappa * std::cos(x);
    }
  }
  return -eval(x, t, order + 1);
}

int Potential::max_order() const {
  switch (family) {
    case Family::duffing: return 4;
    case Family::harmonic: return 2;
    default: return 0;
  }
}

std::string Potential::name() const {
  switch (family) {
    case Family::free_particle: return "free_particle";
    case Family::harmonic: return "harmonic";
    case Family::duffing: return "duffing";
    case Family::kicked_rotor: return "kicked_rotor";
  }
  return "?";
}

Potential free_particle(double mass) {
  if (!(mass > 0)) throw config_error("free_particle: mass must be positive");
  Potential v;
  v.family = Potential::Family::free_particle;
  v.mass = mass;
  return v;
}

Potential harmonic(double mass, double omega0) {
  if (!(mass > 0)) throw config_error("harmonic: mass must be positive");
  if (!(omega0 > 0)) throw config_error("harmonic: omega0 must be positive");
  Potential v;
  v.family = Potential::Family::harmonic;
  v.mass = mass;
  v.omega0 = omega0;
  return v;
}

Potential duffing(double mass, double A, double B, double lambda, double omega) {
  if (!(mass > 0)) throw config_error("duffing: mass must be positive");
  if (!(B > 0)) throw config_error("duffing: quartic coefficient B must be positive");
  if (lambda != 0.0 && !(omega > 0))
    throw config_error("duffing: driven potential requires omega > 0");
  Potential v;
  v.family = Potential::Family::duffing;
  v.mass = mass;
  v.A = A;
  v.B = B;
  v.lambda = lambda;
  v.omega = omega;
  return v;
}

Potential kicked_rotor(double kappa) {
  if (!(kappa > 0)) throw config_error("kicked_rotor: kappa must be positive");
  Potential v;
  v.family = Potential::Family::kicked_rotor;
  v.mass = 1.0;
  v.kappa = kappa;
  return v;
}

namespace {

// Position of a CDF level under the piecewise-linear CDF whose knots are the
// cell edges x_min + (i+1/2)*dx, anchored at zero on the left edge of the
// first cell. Negative lobes of a Wigner marginal are clipped to zero for
// the purpose of picking positions.
double percentile_position(const Grid& g, const std::vector<double>& marginal, double level) {
  std::vector<double> mass(g.nx);
  double total = 0;
  for (int i = 0; i < g.nx; ++i) {
    mass[i] = std::max(marginal[i], 0.0) * g.dx;
    total += mass[i];
  }
  if (total <= 0) throw numeric_error("force_stats: x-marginal has no positive mass");
  const double want = level * total;
  double cum = 0;
  for (int i = 0; i < g.nx; ++i) {
    if (cum + mass[i] >= want) {
      const double frac = mass[i] > 0 ? (want - cum) / mass[i] : 0.0;
      // Cell i spans [x_i - dx/2, x_i + dx/2); walk frac of the way through.
      return g.x_min + (i - 0.5 + frac) * g.dx;
    }
    cum += mass[i];
  }
  return g.x_min + (g.nx - 0.5) * g.dx;
}

}  // namespace

ForceStats force_stats(const Potential& v, const State& s, double t) {
  ForceStats fs;
  const auto marg = marginal_x(s);
  const Grid& g = s.grid;

  // Degeneracy scale: the largest |F| seen on the grid.
  double fmax = 0;
  for (int i = 0; i < g.nx; ++i) fmax = std::max(fmax, std::abs(v.force(g.x(i), t, 0)));
  const double eps = 1e-9 * std::max(fmax, 1e-300);

  const double levels[3] = {0.25, 0.50, 0.75};
  int n_degenerate = 0;
  for (int q = 0; q < 3; ++q) {
    const double xq = percentile_position(g, marg, levels[q]);
    fs.position[q] = xq;
    fs.level[q] = levels[q];
    fs.F[q] = v.force(xq, t, 0);
    fs.dF[q] = v.force(xq, t, 1);
    fs.d2F[q] = v.force(xq, t, 2);
    fs.degenerate[q] = std::abs(fs.F[q]) < eps;
    if (fs.degenerate[q]) ++n_degenerate;
  }
  if (n_degenerate == 3)
    throw numeric_error("force_stats: force vanishes at all percentile points");
  return fs;
}

}  // namespace mlab
