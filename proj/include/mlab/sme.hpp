#pragma once

#include <cstdint>
#include <vector>

#include "mlab/fft.hpp"
#include "mlab/observables.hpp"
#include "mlab/potentials.hpp"
#include "mlab/weyl.hpp"

namespace mlab {

// Stochastic master equation for continuous position measurement,
//   d rho = -(i/hbar)[H, rho] dt - k [X,[X, rho]] dt
//           + sqrt(2 eta k) ([X, rho]_+ - 2<X> rho) dW,
// integrated trajectory by trajectory on a conditioned density matrix. The
// deterministic part reproduces the momentum-diffusion master equation with
// D = hbar^2 k; eta is the fraction of the measurement record retained, and
// at eta = 1 the flow preserves purity.
//
// The conditioned matrix lives in the position basis on the full x-lattice
// of a phase-space grid: n = nx, basis_dx = dx. That is twice the resolution
// of the Weyl-transform basis (n = nx/2), so these matrices are not valid
// input for from_density_matrix; they are a propagation representation, not
// a Wigner-pair one. X is the diagonal coordinate operator, which on a
// periodic grid means the angle read in [x_min, x_max) with a seam at the
// wrap point, the same convention the measurement-record column uses.

enum class SmeScheme {
  // Exact unitary substep for H, Euler-Maruyama for the measurement terms,
  // then trace renormalization. Both non-Hamiltonian terms are entrywise
  // multipliers in the position basis and traceless, so the renormalization
  // only mops up roundoff.
  euler_maruyama_normalized,
};

struct SmeConfig {
  double k = 0;    // measurement strength, D = hbar^2 k
  double eta = 0;  // efficiency in [0, 1]
  double dt = 0;
  int n_traj = 1;
  std::uint64_t seed = 0;
  SmeScheme scheme = SmeScheme::euler_maruyama_normalized;
};

// Throws config_error unless k >= 0, eta in [0,1], dt > 0, n_traj >= 1.
// k = 0 is the degenerate unitary limit: legal, no measurement terms.
void validate_sme(const SmeConfig& c);

// Detector output r(t) = <X> + xi with xi = dW / (sqrt(8 eta k) dt), one
// sample per step, sampled at the step end with the <X> that entered the
// step's stochastic term, plus a leading t0 row holding the noiseless <X>
// so the axis matches the trajectory log. eta k = 0 carries no information,
// so the record degenerates to plain <X>; entries are finite either way.
struct MeasurementRecord {
  std::vector<double> times;
  std::vector<double> record;
};

// Precomputed unitary substep U(dt) = K(dt/2) V(dt) K(dt/2) for one step
// size on one x-lattice, applied to rho by conjugation. Mirrors the split
// the Wigner propagator uses, including the rotor kick at integer times,
// so the eta = 0 flow and the master-equation run share one Hamiltonian.
// Holds FFT plans and scratch, hence not copyable.
class HamiltonianStep {
 public:
  // Grid supplies the x-lattice; hbar and dt are fixed at construction.
  HamiltonianStep(const Grid& grid, double hbar, const Potential& v, double dt);

  // rho <- U rho U^dagger, advancing rho.t by dt. Fires the kick when the
  // step lands on an integer time >= 1 (kicked potentials only).
  void apply(DensityMatrix& rho);

  // <P> and <P^2> via the plans this step already owns; same readout as the
  // standalone dm_p_moments.
  void p_moments(const DensityMatrix& rho, double& p_mean, double& p2);

  double dt() const { return dt_; }
  const Potential& potential() const { return v_; }

 private:
  void kinetic_conj(DensityMatrix& rho);
  void diagonal_conj(DensityMatrix& rho, const std::vector<std::complex<double>>& u);

  Grid g_;
  double hbar_ = 0;
  Potential v_;
  double dt_ = 0;
  bool smooth_ = false;  // any non-kick potential term present
  // e^{-i p_j^2 dur / (2 m hbar)}, dur = dt/2 around a smooth potential,
  // dt when the kinetic term is the whole smooth part.
  std::vector<std::complex<double>> kin_fac_;
  std::vector<std::complex<double>> pot_static_;  // e^{-i V_static(x_a) dt / hbar}
  std::vector<std::complex<double>> kick_diag_;   // e^{-i kappa cos(x_a) / hbar}
  std::vector<std::complex<double>> drive_scratch_;
  fft::Buffer buf_;
  fft::Plan rows_fwd_, rows_bwd_, cols_fwd_, cols_bwd_;
};

// One Euler-Maruyama step of the equation above: h.apply, then the entrywise
// measurement update with increment dW, then renormalization. The multiplier
// is real and symmetric, so hermiticity survives exactly; trace drift before
// renormalization beyond 1e-3 means the step size is too large for this k
// and throws numeric_error. Returns the <X> used in the stochastic term.
double sme_step(DensityMatrix& rho, HamiltonianStep& h, const SmeConfig& c, double dW);

struct SmeRun {
  DensityMatrix rho_final;
  MeasurementRecord record;
  TrajectoryRecord log;  // t, x_mean, p_mean, p2, purity, record
};

// Integrates one conditioned trajectory from rho0 (trace 1, n = nx on
// rho0.grid) to t_final. dW draws come from a counter-based stream keyed by
// (seed, traj, step_offset + local step), so runs are bit-reproducible and
// trajectories are independent of scheduling order. traj selects the
// sub-stream and is recorded in the log metadata. step_offset is the stream
// position: a run split at step K continues with step_offset = K and
// reproduces the unsplit run exactly, which is what checkpoint resume
// stores. Throws numeric_error on blowup, with the step and time in the
// message.
SmeRun run_trajectory(const DensityMatrix& rho0, const Potential& v, const SmeConfig& c,
                      double t_final, int traj = 0, std::uint64_t step_offset = 0);

// Mean and standard-error series across trajectory logs produced by
// run_trajectory under one config: for every logged column c the result
// carries c (mean) and c_se (sample SE, ddof 1). Requires identical time
// axes, identical run metadata apart from the trajectory index, and distinct
// trajectory indices; mismatches throw misuse_error. A single trajectory is
// passed through with NaN SE columns and meta se_defined = "false".
TrajectoryRecord ensemble_average(const std::vector<TrajectoryRecord>& logs);

// Localization-condition ratio r = 8 eta k / ((|F''|/|F|) sqrt(|F'|/2m))
// evaluated at the three force_stats percentile points of the state's
// x-marginal; magnitudes keep r real regardless of the force sign. r >> 1 is
// the classical-trajectory regime, r <~ 1 its violation, and eta = 0 gives
// exactly 0. A degenerate point (vanishing F, F' or F'', e.g. any harmonic
// force, whose F'' is identically zero) throws config_error.
struct LocalizationReport {
  double r_min = 0;
  double r_median = 0;
  double r_max = 0;
};

LocalizationReport localization_ratio(const Potential& v, const State& s, double k,
                                      double eta);

// Pure-state density matrix of a Gaussian wave packet on the grid's full
// x-lattice: psi(x) ~ exp(-(x-x0)^2/(4 sigma_x^2) + i p0 (x-x0)/hbar),
// image-summed over the period on a periodic grid, normalized so the trace
// is exactly 1. The Wigner function of this state is gaussian_state with
// sigma_p = hbar / (2 sigma_x).
DensityMatrix pure_gaussian_density(const Grid& grid, double hbar, double x0, double p0,
                                    double sigma_x);

// Position observables of an SME-representation matrix (n = nx): <X>,
// Tr(rho^2), and the momentum pair <P>, <P^2> read from the FFT momentum
// lattice of the x-axis (spacing 2 pi hbar / (nx dx), wrapped). On a
// periodic grid that lattice is the physical angular-momentum spectrum.
double dm_x_mean(const DensityMatrix& dm);
double dm_purity(const DensityMatrix& dm);
void dm_p_moments(const DensityMatrix& dm, double& p_mean, double& p2);

}  // namespace mlab
