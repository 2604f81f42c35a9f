#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mlab/evolve.hpp"
#include "mlab/grid.hpp"
#include "mlab/potentials.hpp"
#include "mlab/sme.hpp"
#include "mlab/state.hpp"

namespace mlab {

// Experiment configuration: flat "key = value" text, '#' comments, dotted
// sections. A file describes one experiment of one or more legs. Keys
// without a "leg." prefix form the base; "leg.<name>.<key>" overrides <key>
// for that leg only. A file with no leg keys is a single leg named "main".
// Every failure is a config_error naming the offending key (or line).
//
// Key schema (legal <key> values):
//   potential.family   kicked_rotor | duffing | harmonic | free
//   potential.mass     double > 0, default 1
//   potential.kappa    rotor kick strength
//   potential.A potential.B potential.lambda potential.omega   duffing
//   potential.omega0   harmonic frequency
//   grid.nx grid.np    powers of two >= 8
//   grid.x_min grid.x_max grid.p_min grid.p_max
//   grid.boundary      periodic | box
//   state.kind         classical | wigner (evolve legs; sme legs ignore it)
//   state.x0 state.p0 state.sigma_x state.sigma_p state.hbar
//   evolve.mode        classical_liouville | classical_fokker_planck |
//                      quantum_liouville | quantum_master | sme
//   evolve.dt evolve.t_final
//   evolve.D           diffusion, diffusive modes only
//   evolve.record_every       int >= 0 (steps; 0 = t0/kicks/final only)
//   evolve.record_gamma evolve.record_purity evolve.record_l2
//   evolve.record_nu          true | false
//   evolve.truncated evolve.lambda_max   Moyal truncation
//   sme.k sme.eta sme.n_traj  conditioned-evolution parameters
//   run.seed           uint64 RNG seed, default 0
//   output.dir         required; each leg writes to <dir>/<leg> (multi-leg)
//                      or <dir> itself (single leg)
//   output.spectrum    true | false: eigenvalue CSV of the final state
//   output.snapshot_every     int >= 0 (steps; evolve legs only)
//   output.checkpoint_every   int >= 0 (steps; 0 disables checkpointing)

enum class RunMode {
  classical_liouville,
  classical_fokker_planck,
  quantum_liouville,
  quantum_master,
  sme,
};

struct LegConfig {
  std::string name;
  Potential potential;
  Grid grid;
  StateKind state_kind = StateKind::classical;
  double x0 = 0, p0 = 0, sigma_x = 0, sigma_p = 0, hbar = 0;
  RunMode mode = RunMode::classical_liouville;
  double dt = 0, t_final = 0, D = 0;
  MoyalOptions moyal;
  int record_every = 0;
  bool rec_gamma = false, rec_purity = false, rec_l2 = false, rec_nu = false;
  SmeConfig sme;  // k, eta, n_traj, seed; sme.dt mirrors evolve.dt
  bool spectrum_at_end = false;
  int snapshot_every = 0;
  int checkpoint_every = 0;
  std::string out_dir;

  // Canonical rendering of every semantic field except t_final and the
  // output directory: two runs may be stitched together by checkpoint
  // resume iff these bytes match.
  std::string compat;
};

struct ExperimentConfig {
  std::string out_dir;
  std::uint64_t seed = 0;
  std::vector<LegConfig> legs;  // in first-appearance order
};

// Lexer level: ordered key/value pairs exactly as written. Throws on
// malformed lines and duplicate keys.
std::vector<std::pair<std::string, std::string>> parse_kv_text(const std::string& text);

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);

}  // namespace mlab
