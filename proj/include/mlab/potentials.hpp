#pragma once

#include <string>

#include "mlab/state.hpp"

namespace mlab {

// Potential families used by the propagators. Every family separates as
// V(x,t) = V_static(x) + drive_coeff(t)*x, which the split-step propagator
// exploits: the static part becomes a precomputed phase table, the drive a
// per-step phase vector. The kicked rotor has no smooth potential at all; its
// impulses are applied by kick_step.
struct Potential {
  enum class Family { free_particle, harmonic, duffing, kicked_rotor };

  Family family = Family::free_particle;
  double mass = 1;
  double omega0 = 0;                           // harmonic
  double A = 0, B = 0, lambda = 0, omega = 0;  // duffing: B x^4 - A x^2 + lambda x cos(omega t)
  double kappa = 0;                            // kicked rotor impulse amplitude

  // order-th x-derivative of the static part at x (order 0 is the value).
  double static_eval(double x, int order) const;
  // c(t) in V = V_static + c(t)*x. Zero except for the driven Duffing family.
  double drive_coeff(double t) const;
  // Full smooth potential derivative, drive included.
  double eval(double x, double t, int order) const;
  // order-th x-derivative of the force. Smooth families: -V^(order+1).
  // The rotor reports the per-kick impulse profile kappa*sin(x) (kick period
  // is 1, so it is also the time-averaged force).
  double force(double x, double t, int order) const;
  bool has_kicks() const { return family == Family::kicked_rotor; }
  // Highest order with a nonzero static derivative (4 for duffing, 2 for
  // harmonic, 0 otherwise). Lets the truncated propagator skip dead terms.
  int max_order() const;
  std::string name() const;
};

Potential free_particle(double mass = 1);
Potential harmonic(double mass, double omega0);
Potential duffing(double mass, double A, double B, double lambda, double omega);
Potential kicked_rotor(double kappa);

// Force and its first two derivatives at the 25/50/75 percentile positions of
// the state's x-marginal (linearly interpolated CDF over cell edges). Points
// where |F| < 1e-9 * max|F| on the grid are flagged degenerate. The
// percentile choice is the "typical points" convention used by the
// localization diagnostic; positions are continuum values, derivatives are
// closed form.
struct ForceStats {
  double position[3] = {0, 0, 0};
  double level[3] = {0.25, 0.50, 0.75};
  double F[3] = {0, 0, 0};
  double dF[3] = {0, 0, 0};
  double d2F[3] = {0, 0, 0};
  bool degenerate[3] = {false, false, false};
};

ForceStats force_stats(const Potential& v, const State& s, double t);

}  // namespace mlab
