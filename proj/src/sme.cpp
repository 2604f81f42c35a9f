#include "mlab/sme.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <set>
#include <string>

#include "mlab/errors.hpp"

namespace mlab {

namespace {

using cplx = std::complex<double>;

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// One standard normal per (seed, traj, counter): Box-Muller on two hashed
// uniforms. The stream is stateless, so trajectories are independent of
// scheduling order and a run can resume from any step index exactly.
double normal_draw(std::uint64_t seed, std::uint64_t traj, std::uint64_t ctr) {
  const std::uint64_t base = mix64(mix64(seed) ^ (traj + 0x632be59bd9b4e019ULL));
  const std::uint64_t h1 = mix64(base ^ (2 * ctr + 0x9e3779b97f4a7c15ULL));
  const std::uint64_t h2 = mix64(base ^ (2 * ctr + 1 + 0x9e3779b97f4a7c15ULL));
  const double u1 = (h1 >> 11) * 0x1.0p-53 + 0x1.0p-54;  // (0, 1), never 0
  const double u2 = (h2 >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void check_sme_dm(const DensityMatrix& dm, const char* who) {
  if (dm.n <= 0 || dm.rho.size() != static_cast<std::size_t>(dm.n) * dm.n)
    throw misuse_error(std::string(who) + ": empty or inconsistent density matrix");
  if (dm.n != dm.grid.nx)
    throw misuse_error(std::string(who) +
                       ": conditioned matrices live on the full x-lattice (n = nx); a "
                       "Weyl-pair matrix (n = nx/2) is a different representation");
  if (!(dm.grid.dx > 0) || std::abs(dm.basis_dx - dm.grid.dx) > 1e-12 * dm.grid.dx)
    throw misuse_error(std::string(who) + ": basis_dx must equal the grid dx");
  if (!(dm.hbar > 0)) throw misuse_error(std::string(who) + ": hbar must be set");
}

double trace_of(const DensityMatrix& dm) {
  double tr = 0;
  for (int a = 0; a < dm.n; ++a) tr += dm.at(a, a).real();
  return tr * dm.basis_dx;
}

// Shared readout for the momentum moments: buf holds F rho F^dagger
// unnormalized; populations are its diagonal up to a common positive factor
// that cancels in the ratios.
void p_moments_from(const fft::cplx* buf, int n, double hbar, double dx, double& p_mean,
                    double& p2) {
  double w = 0, m1 = 0, m2 = 0;
  for (int j = 0; j < n; ++j) {
    const double pj = hbar * fft::frequency(j, n, dx);
    const double pop = buf[static_cast<std::size_t>(j) * n + j].real();
    w += pop;
    m1 += pj * pop;
    m2 += pj * pj * pop;
  }
  if (!(w > 0) || !std::isfinite(w))
    throw numeric_error("p_moments: momentum populations lost positivity (blowup)");
  p_mean = m1 / w;
  p2 = m2 / w;
}

}  // namespace

void validate_sme(const SmeConfig& c) {
  if (!(c.k >= 0) || !std::isfinite(c.k))
    throw config_error("sme: k must be finite and non-negative");
  if (!(c.eta >= 0 && c.eta <= 1)) throw config_error("sme: eta must lie in [0, 1]");
  if (!(c.dt > 0)) throw config_error("sme: dt must be positive");
  if (c.n_traj < 1) throw config_error("sme: n_traj must be at least 1");
  if (c.scheme != SmeScheme::euler_maruyama_normalized)
    throw config_error("sme: unknown scheme");
}

HamiltonianStep::HamiltonianStep(const Grid& grid, double hbar, const Potential& v,
                                 double dt)
    : g_(grid),
      hbar_(hbar),
      v_(v),
      dt_(dt),
      buf_(static_cast<std::size_t>(grid.nx) * grid.nx) {
  if (!(hbar_ > 0)) throw misuse_error("HamiltonianStep: hbar must be positive");
  if (!(dt_ > 0)) throw config_error("HamiltonianStep: dt must be positive");
  if (g_.nx < 2 || !(g_.dx > 0)) throw misuse_error("HamiltonianStep: invalid grid");
  if (v_.has_kicks() && g_.boundary != Boundary::periodic_x)
    throw config_error("HamiltonianStep: kicked_rotor requires a periodic_x grid");
  if (!v_.has_kicks() && g_.boundary == Boundary::periodic_x &&
      v_.family != Potential::Family::free_particle)
    throw config_error(
        "HamiltonianStep: periodic grids support free_particle and kicked_rotor only");

  const int n = g_.nx;
  smooth_ = v_.max_order() > 0;
  const double dur = smooth_ ? 0.5 * dt_ : dt_;
  kin_fac_.resize(n);
  for (int j = 0; j < n; ++j) {
    const double p = hbar_ * fft::frequency(j, n, g_.dx);
    kin_fac_[j] = std::polar(1.0, -p * p * dur / (2.0 * v_.mass * hbar_));
  }
  if (smooth_) {
    pot_static_.resize(n);
    for (int a = 0; a < n; ++a)
      pot_static_[a] = std::polar(1.0, -v_.static_eval(g_.x(a), 0) * dt_ / hbar_);
    drive_scratch_.resize(n);
  }
  if (v_.has_kicks()) {
    kick_diag_.resize(n);
    for (int a = 0; a < n; ++a)
      kick_diag_[a] = std::polar(1.0, -v_.kappa * std::cos(g_.x(a)) / hbar_);
  }
  rows_fwd_ = fft::rows_plan(buf_.data(), n, n, FFTW_FORWARD);
  rows_bwd_ = fft::rows_plan(buf_.data(), n, n, FFTW_BACKWARD);
  cols_fwd_ = fft::cols_plan(buf_.data(), n, n, FFTW_FORWARD);
  cols_bwd_ = fft::cols_plan(buf_.data(), n, n, FFTW_BACKWARD);
}

void HamiltonianStep::kinetic_conj(DensityMatrix& rho) {
  const int n = g_.nx;
  std::copy(rho.rho.begin(), rho.rho.end(), buf_.data());
  cols_fwd_.execute();  // bra index a -> j_a, kernel e^{-i}
  rows_bwd_.execute();  // ket index b -> j_b, conjugate kernel
  for (int ja = 0; ja < n; ++ja) {
    cplx* row = buf_.data() + static_cast<std::size_t>(ja) * n;
    const cplx fa = kin_fac_[ja];
    for (int jb = 0; jb < n; ++jb) row[jb] *= fa * std::conj(kin_fac_[jb]);
  }
  cols_bwd_.execute();
  rows_fwd_.execute();
  const double s = 1.0 / (static_cast<double>(n) * n);
  for (std::size_t i = 0; i < rho.rho.size(); ++i) rho.rho[i] = buf_[i] * s;
}

void HamiltonianStep::diagonal_conj(DensityMatrix& rho, const std::vector<cplx>& u) {
  const int n = g_.nx;
  for (int a = 0; a < n; ++a) {
    cplx* row = rho.rho.data() + static_cast<std::size_t>(a) * n;
    const cplx ua = u[a];
    for (int b = 0; b < n; ++b) row[b] *= ua * std::conj(u[b]);
  }
}

void HamiltonianStep::apply(DensityMatrix& rho) {
  check_sme_dm(rho, "HamiltonianStep::apply");
  if (rho.grid.nx != g_.nx || std::abs(rho.grid.dx - g_.dx) > 1e-12 * g_.dx ||
      std::abs(rho.grid.x_min - g_.x_min) > 1e-12 * std::max(1.0, std::abs(g_.x_min)) ||
      std::abs(rho.hbar - hbar_) > 1e-12 * hbar_)
    throw misuse_error("HamiltonianStep::apply: state does not match the prepared tables");
  kinetic_conj(rho);
  if (smooth_) {
    const double c = v_.drive_coeff(rho.t + 0.5 * dt_);
    if (c != 0.0) {
      for (int a = 0; a < g_.nx; ++a)
        drive_scratch_[a] = pot_static_[a] * std::polar(1.0, -c * g_.x(a) * dt_ / hbar_);
      diagonal_conj(rho, drive_scratch_);
    } else {
      diagonal_conj(rho, pot_static_);
    }
    kinetic_conj(rho);
  }
  const double t_new = rho.t + dt_;
  rho.t = t_new;
  if (v_.has_kicks() && std::abs(t_new - std::round(t_new)) <= 1e-9 &&
      std::round(t_new) >= 1.0)
    diagonal_conj(rho, kick_diag_);
}

void HamiltonianStep::p_moments(const DensityMatrix& rho, double& p_mean, double& p2) {
  check_sme_dm(rho, "HamiltonianStep::p_moments");
  std::copy(rho.rho.begin(), rho.rho.end(), buf_.data());
  cols_fwd_.execute();
  rows_bwd_.execute();
  p_moments_from(buf_.data(), g_.nx, hbar_, g_.dx, p_mean, p2);
}

double sme_step(DensityMatrix& rho, HamiltonianStep& h, const SmeConfig& c, double dW) {
  validate_sme(c);
  check_sme_dm(rho, "sme_step");
  if (std::abs(h.dt() - c.dt) > 1e-12 * c.dt)
    throw misuse_error("sme_step: HamiltonianStep was prepared for a different dt");

  h.apply(rho);

  const Grid& g = rho.grid;
  const int n = rho.n;
  double tr0 = 0, xw = 0;
  for (int a = 0; a < n; ++a) {
    const double d = rho.at(a, a).real();
    tr0 += d;
    xw += g.x(a) * d;
  }
  tr0 *= g.dx;
  xw *= g.dx;
  if (!std::isfinite(tr0) || tr0 <= 0)
    throw numeric_error("sme_step: trace lost positivity, state blew up at t=" +
                        fmt17(rho.t));
  const double xm = xw / tr0;

  // Both measurement terms are entrywise in this basis:
  // [X,[X,rho]](a,b) = (x_a-x_b)^2 rho(a,b), [X,rho]_+(a,b) = (x_a+x_b) rho(a,b).
  // The combined multiplier is real and symmetric, so hermiticity is exact,
  // and both terms are traceless, so tr1 below differs from tr0 by roundoff.
  const double s = std::sqrt(2.0 * c.eta * c.k) * dW;
  const double kdt = c.k * c.dt;
  for (int a = 0; a < n; ++a) {
    cplx* row = rho.rho.data() + static_cast<std::size_t>(a) * n;
    const double xa = g.x(a);
    for (int b = 0; b < n; ++b) {
      const double xb = g.x(b);
      const double d = xa - xb;
      row[b] *= 1.0 - kdt * d * d + s * (xa + xb - 2.0 * xm);
    }
  }

  double tr1 = 0;
  for (int a = 0; a < n; ++a) tr1 += rho.at(a, a).real();
  tr1 *= g.dx;
  if (!std::isfinite(tr1) || tr1 <= 0)
    throw numeric_error("sme_step: trace became non-positive, state blew up at t=" +
                        fmt17(rho.t));
  if (std::abs(tr1 - tr0) > 1e-3 * std::max(1.0, std::abs(tr0)))
    throw numeric_error("sme_step: trace drifted by " + fmt17(tr1 - tr0) +
                        " in one step at t=" + fmt17(rho.t) + "; reduce dt");

  // Renormalize to exactly unit trace and re-symmetrize; the defect is FFT
  // roundoff unless something upstream went wrong.
  const double inv = 1.0 / tr1;
  double defect = 0;
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b) {
      const cplx u = rho.at(a, b) * inv;
      const cplx v = rho.at(b, a) * inv;
      defect = std::max(defect, std::abs(u - std::conj(v)));
      const cplx m = 0.5 * (u + std::conj(v));
      rho.at(a, b) = m;
      rho.at(b, a) = std::conj(m);
    }
  rho.herm_defect = defect;
  if (defect > 1e-10)
    throw numeric_error("sme_step: hermiticity defect " + fmt17(defect) +
                        " exceeds 1e-10 at t=" + fmt17(rho.t));
  return xm;
}

SmeRun run_trajectory(const DensityMatrix& rho0, const Potential& v, const SmeConfig& c,
                      double t_final, int traj, std::uint64_t step_offset) {
  validate_sme(c);
  check_sme_dm(rho0, "run_trajectory");
  if (traj < 0) throw misuse_error("run_trajectory: traj must be >= 0");
  const double tr = trace_of(rho0);
  if (std::abs(tr - 1.0) > 1e-9)
    throw misuse_error("run_trajectory: rho0 must have unit trace, got " + fmt17(tr));
  const double t0 = rho0.t;
  const double span = t_final - t0;
  if (!(span > 0)) throw config_error("run_trajectory: t_final must exceed rho0.t");
  const long steps = std::lround(span / c.dt);
  if (steps < 1 || std::abs(steps * c.dt - span) > 1e-9 * std::max(1.0, span))
    throw config_error("run_trajectory: dt must tile [t0, t_final]");
  if (v.has_kicks()) {
    const long per = std::lround(1.0 / c.dt);
    if (per < 1 || std::abs(per * c.dt - 1.0) > 1e-9)
      throw config_error("run_trajectory: dt must divide the unit kick period");
  }

  DensityMatrix rho = rho0;
  HamiltonianStep h(rho.grid, rho.hbar, v, c.dt);

  SmeRun out;
  TrajectoryRecord& log = out.log;
  const int ix = static_cast<int>(log.names.size());
  log.add_series("x_mean");
  log.add_series("p_mean");
  log.add_series("p2");
  log.add_series("purity");
  log.add_series("record");
  log.meta["kind"] = "sme_trajectory";
  log.meta["potential"] = v.name();
  log.meta["hbar"] = fmt17(rho.hbar);
  log.meta["k"] = fmt17(c.k);
  log.meta["eta"] = fmt17(c.eta);
  log.meta["dt"] = fmt17(c.dt);
  log.meta["t0"] = fmt17(t0);
  log.meta["t_final"] = fmt17(t_final);
  log.meta["seed"] = std::to_string(c.seed);
  log.meta["n_traj"] = std::to_string(c.n_traj);
  log.meta["scheme"] = "euler_maruyama_normalized";
  log.meta["traj"] = std::to_string(traj);
  log.meta["step_offset"] = std::to_string(step_offset);
  log.meta["nx"] = std::to_string(rho.grid.nx);
  log.meta["x_min"] = fmt17(rho.grid.x_min);
  log.meta["x_max"] = fmt17(rho.grid.x_max);
  log.meta["boundary"] =
      rho.grid.boundary == Boundary::periodic_x ? "periodic_x" : "box";

  auto log_row = [&](double t, double record_val) {
    log.times.push_back(t);
    log.series[ix + 0].push_back(dm_x_mean(rho));
    double pm = 0, p2 = 0;
    h.p_moments(rho, pm, p2);
    log.series[ix + 1].push_back(pm);
    log.series[ix + 2].push_back(p2);
    log.series[ix + 3].push_back(dm_purity(rho));
    log.series[ix + 4].push_back(record_val);
  };
  // Row at t0 predates any measurement; its record cell is the noiseless <X>.
  out.record.times.push_back(t0);
  out.record.record.push_back(dm_x_mean(rho));
  log_row(t0, out.record.record.back());

  const double noise_scale =
      c.eta > 0 && c.k > 0 ? 1.0 / (std::sqrt(8.0 * c.eta * c.k) * c.dt) : 0.0;
  const double sqrt_dt = std::sqrt(c.dt);
  for (long k = 1; k <= steps; ++k) {
    const double dW = sqrt_dt * normal_draw(c.seed, static_cast<std::uint64_t>(traj),
                                            step_offset + static_cast<std::uint64_t>(k - 1));
    double xm = 0;
    try {
      xm = sme_step(rho, h, c, dW);
    } catch (const numeric_error& e) {
      throw numeric_error("run_trajectory: aborted at step " + std::to_string(k) + " of " +
                          std::to_string(steps) + " (traj " + std::to_string(traj) +
                          "): " + e.what());
    }
    rho.t = t0 + static_cast<double>(k) * c.dt;  // no accumulation drift
    const double sample = xm + noise_scale * dW;
    out.record.times.push_back(rho.t);
    out.record.record.push_back(sample);
    log_row(rho.t, sample);
  }
  out.rho_final = std::move(rho);
  return out;
}

TrajectoryRecord ensemble_average(const std::vector<TrajectoryRecord>& logs) {
  if (logs.empty()) throw misuse_error("ensemble_average: no trajectories given");
  const TrajectoryRecord& base = logs.front();
  std::set<std::string> trajs;
  for (const TrajectoryRecord& l : logs) {
    if (l.times != base.times)
      throw misuse_error("ensemble_average: trajectory time axes differ");
    if (l.names != base.names)
      throw misuse_error("ensemble_average: trajectory columns differ");
    auto a = l.meta;
    auto b = base.meta;
    a.erase("traj");
    b.erase("traj");
    if (a != b) throw misuse_error("ensemble_average: trajectory configs differ");
    const auto it = l.meta.find("traj");
    if (!trajs.insert(it == l.meta.end() ? std::string() : it->second).second)
      throw misuse_error("ensemble_average: trajectories share a sub-stream index");
  }

  const std::size_t nt = logs.size();
  const std::size_t npts = base.times.size();
  TrajectoryRecord out;
  out.times = base.times;
  out.meta = base.meta;
  out.meta.erase("traj");
  out.meta["kind"] = "sme_ensemble";
  out.meta["n_traj_averaged"] = std::to_string(nt);
  out.meta["se_defined"] = nt >= 2 ? "true" : "false";
  for (std::size_t j = 0; j < base.names.size(); ++j) {
    out.add_series(base.names[j]);
    out.add_series(base.names[j] + "_se");
  }
  for (std::size_t j = 0; j < base.names.size(); ++j) {
    std::vector<double>& mean = out.series[2 * j];
    std::vector<double>& se = out.series[2 * j + 1];
    mean.resize(npts);
    se.resize(npts);
    for (std::size_t i = 0; i < npts; ++i) {
      double m = 0;
      for (const TrajectoryRecord& l : logs) m += l.series[j][i];
      m /= static_cast<double>(nt);
      mean[i] = m;
      if (nt >= 2) {
        double ss = 0;
        for (const TrajectoryRecord& l : logs) {
          const double d = l.series[j][i] - m;
          ss += d * d;
        }
        se[i] = std::sqrt(ss / static_cast<double>(nt - 1)) /
                std::sqrt(static_cast<double>(nt));
      } else {
        se[i] = std::numeric_limits<double>::quiet_NaN();
      }
    }
  }
  return out;
}

LocalizationReport localization_ratio(const Potential& v, const State& s, double k,
                                      double eta) {
  if (!(k > 0)) throw config_error("localization_ratio: k must be positive");
  if (!(eta >= 0 && eta <= 1))
    throw config_error("localization_ratio: eta must lie in [0, 1]");
  const ForceStats fs = force_stats(v, s, s.t);
  double r[3];
  for (int i = 0; i < 3; ++i) {
    if (fs.degenerate[i])
      throw config_error("localization_ratio: force vanishes at the " +
                         std::to_string(static_cast<int>(fs.level[i] * 100)) +
                         "% point x=" + fmt17(fs.position[i]));
    if (fs.d2F[i] == 0.0)
      throw config_error(
          "localization_ratio: force curvature is zero at x=" + fmt17(fs.position[i]) +
          " (a harmonic force has none anywhere); the ratio is undefined");
    if (fs.dF[i] == 0.0)
      throw config_error("localization_ratio: force gradient is zero at x=" +
                         fmt17(fs.position[i]) + "; the ratio is undefined");
    const double denom =
        (std::abs(fs.d2F[i]) / std::abs(fs.F[i])) * std::sqrt(std::abs(fs.dF[i]) / (2.0 * v.mass));
    r[i] = 8.0 * eta * k / denom;
  }
  std::sort(r, r + 3);
  return LocalizationReport{r[0], r[1], r[2]};
}

DensityMatrix pure_gaussian_density(const Grid& grid, double hbar, double x0, double p0,
                                    double sigma_x) {
  if (!(hbar > 0)) throw misuse_error("pure_gaussian_density: hbar must be positive");
  if (!(sigma_x > 0)) throw misuse_error("pure_gaussian_density: sigma_x must be positive");
  if (grid.nx < 2 || !(grid.dx > 0))
    throw misuse_error("pure_gaussian_density: invalid grid");
  const int n = grid.nx;
  const double L = grid.x_max - grid.x_min;
  const int wraps = grid.boundary == Boundary::periodic_x ? 8 : 0;
  std::vector<cplx> psi(n);
  double nrm = 0;
  for (int a = 0; a < n; ++a) {
    cplx amp = 0;
    for (int w = -wraps; w <= wraps; ++w) {
      const double xi = grid.x(a) - x0 + w * L;
      amp += std::polar(std::exp(-xi * xi / (4.0 * sigma_x * sigma_x)), p0 * xi / hbar);
    }
    psi[a] = amp;
    nrm += std::norm(amp);
  }
  nrm *= grid.dx;
  if (!(nrm > 0)) throw numeric_error("pure_gaussian_density: packet vanished on the grid");
  const double scale = 1.0 / std::sqrt(nrm);
  for (cplx& c : psi) c *= scale;

  DensityMatrix dm;
  dm.n = n;
  dm.grid = grid;
  dm.basis_dx = grid.dx;
  dm.hbar = hbar;
  dm.t = 0;
  dm.source = MatrixSource::quantum;
  dm.rho.resize(static_cast<std::size_t>(n) * n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) dm.rho[static_cast<std::size_t>(a) * n + b] = psi[a] * std::conj(psi[b]);
  return dm;
}

double dm_x_mean(const DensityMatrix& dm) {
  check_sme_dm(dm, "dm_x_mean");
  double tr = 0, xw = 0;
  for (int a = 0; a < dm.n; ++a) {
    const double d = dm.at(a, a).real();
    tr += d;
    xw += dm.grid.x(a) * d;
  }
  if (tr == 0) throw numeric_error("dm_x_mean: zero trace");
  return xw / tr;
}

double dm_purity(const DensityMatrix& dm) {
  check_sme_dm(dm, "dm_purity");
  double s = 0;
  for (const cplx& c : dm.rho) s += std::norm(c);
  return s * dm.basis_dx * dm.basis_dx;
}

void dm_p_moments(const DensityMatrix& dm, double& p_mean, double& p2) {
  check_sme_dm(dm, "dm_p_moments");
  const int n = dm.n;
  fft::Buffer buf(static_cast<std::size_t>(n) * n);
  std::copy(dm.rho.begin(), dm.rho.end(), buf.data());
  const fft::Plan cf = fft::cols_plan(buf.data(), n, n, FFTW_FORWARD);
  const fft::Plan rb = fft::rows_plan(buf.data(), n, n, FFTW_BACKWARD);
  cf.execute();
  rb.execute();
  p_moments_from(buf.data(), n, dm.hbar, dm.grid.dx, p_mean, p2);
}

}  // namespace mlab
