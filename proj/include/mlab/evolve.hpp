#pragma once

#include "mlab/observables.hpp"
#include "mlab/potentials.hpp"
#include "mlab/state.hpp"

namespace mlab {

// The four transport laws. The classical pair advects f along the flow of
// H = p^2/2m + V (plus momentum diffusion D for fokker_planck); the quantum
// pair evolves the Wigner function with the full potential kernel
// V(x + hbar s/2) - V(x - hbar s/2) in the position/displacement
// representation (plus the same diffusion for quantum_master). Classical
// evolution is literally the lambda=1 truncation of the quantum kernel, so
// the two share one code path.
enum class Mode { classical_liouville, classical_fokker_planck, quantum_liouville, quantum_master };

struct MoyalOptions {
  bool truncated = false;  // default: exact two-point kernel
  int lambda_max = 0;      // odd >= 1 when truncated
};

struct EvolveOptions {
  Mode mode = Mode::classical_liouville;
  double dt = 0;
  double D = 0;
  MoyalOptions moyal;
  // Record every N steps. 0 means record only at t0, kicks, and t_final.
  int record_every = 0;
  bool record_gamma = false;
  bool record_purity = false;
  bool record_l2 = false;
  bool record_nu = false;  // density-matrix negative mass; needs a Weyl-commensurate grid
  bool check_norm_each_step = false;
  double boundary_leak_limit = 1e-4;
  double norm_drift_limit = 1e-6;
};

// Advances s in place to t_final, applying rotor kicks at integer times, and
// returns the logged record. dt must tile both the interval and (for kicked
// potentials) the unit kick period. Throws numeric_error on blowup, mass
// reaching the box edge, or norm drift; the state then holds the last
// consistent step.
TrajectoryRecord evolve_to(State& s, const Potential& v, const EvolveOptions& opt,
                           double t_final);

// Single Strang substeps, exposed for composition tests. Each leaves a
// consistent state but does not touch s.t bookkeeping beyond its own action.
//
// Free streaming for duration dt/2 (the Strang half).
void kinetic_half_step(State& s, const Potential& v, double dt);
// Potential phase (mode kernel, drive at time t_mid) plus diffusion, duration dt.
void potential_step(State& s, const Potential& v, const EvolveOptions& opt, double dt,
                    double t_mid);
// One rotor impulse. Requires a kicked potential, a periodic grid, and the
// state to sit at an integer time (tolerance 1e-9).
void kick_step(State& s, const Potential& v, const EvolveOptions& opt);

// Checks the mode/state/options contract without running: kind matches mode,
// hbar present for quantum modes, D consistent with the mode, truncation
// options legal. evolve_to calls this itself.
void validate_evolve(const State& s, const Potential& v, const EvolveOptions& opt);

}  // namespace mlab
