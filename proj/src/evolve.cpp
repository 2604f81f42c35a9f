#include "mlab/evolve.hpp"

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "mlab/errors.hpp"
#include "mlab/fft.hpp"
#include "mlab/weyl.hpp"

namespace mlab {

namespace {

using fft::cplx;

bool near_integer(double t, double tol = 1e-9) { return std::abs(t - std::round(t)) <= tol; }

// Phase increment per unit time contributed by the static potential at
// (x, s): the two-point kernel [V(x + hbar s/2) - V(x - hbar s/2)]/hbar when
// lambda_max <= 0, else the series of odd terms
// V^(j)(x) (hbar/2)^(j-1) s^j / j!. The classical propagator is exactly the
// lambda_max = 1 call with the hbar factors dead.
double static_phase(const Potential& v, double x, double s, double hbar, int lambda_max) {
  if (lambda_max <= 0) {
    const double a = 0.5 * hbar * s;
    return (v.static_eval(x + a, 0) - v.static_eval(x - a, 0)) / hbar;
  }
  double acc = 0;
  double sj = s;        // s^j
  double hh = 1;        // (hbar/2)^(j-1)
  double fact = 1;      // j!
  const int top = std::min(lambda_max, v.max_order());
  for (int j = 1; j <= top; j += 2) {
    acc += v.static_eval(x, j) * hh * sj / fact;
    sj *= s * s;
    hh *= 0.25 * hbar * hbar;
    fact *= (j + 1) * (j + 2);
  }
  return acc;
}

// Same for the rotor impulse profile kappa*cos(x); derivative cycle
// -sin, -cos, +sin, +cos gives alternating odd terms.
double kick_phase(double kappa, double x, double s, double hbar, int lambda_max) {
  if (lambda_max <= 0) {
    const double a = 0.5 * hbar * s;
    return kappa * (std::cos(x + a) - std::cos(x - a)) / hbar;
  }
  double acc = 0;
  double sj = s, hh = 1, fact = 1;
  double coeff = -kappa;  // V^(1) = -kappa sin; V^(3) = +kappa sin; ...
  for (int j = 1; j <= lambda_max; j += 2) {
    acc += coeff * std::sin(x) * hh * sj / fact;
    coeff = -coeff;
    sj *= s * s;
    hh *= 0.25 * hbar * hbar;
    fact *= (j + 1) * (j + 2);
  }
  return acc;
}

int effective_lambda(Mode mode, const MoyalOptions& m) {
  if (mode == Mode::classical_liouville || mode == Mode::classical_fokker_planck) return 1;
  return m.truncated ? m.lambda_max : 0;
}

// Workspace: one complex copy of f plus the in-place plans and the phase
// tables. Tables fold in the 1/n of their round trip so no separate
// normalization pass runs. Nyquist slots get zero phase: the sign of that
// frequency is aliasing-ambiguous, and a real multiplier there is what keeps
// real states exactly real.
struct Prop {
  Grid g;
  const Potential* v;
  EvolveOptions opt;
  double hbar;  // 1 for classical modes, never enters their lambda=1 phase
  int lambda;

  fft::Buffer c;
  fft::Plan p_fwd, p_bwd, x_fwd, x_bwd;
  std::vector<double> s_freq, k_freq, p_val;
  std::vector<cplx> kin_half, kin_full, pot_static, kick_tab;
  std::vector<cplx> drive_row;
  bool has_drive;

  Prop(const State& s, const Potential& pot, const EvolveOptions& o)
      : g(s.grid),
        v(&pot),
        opt(o),
        c(g.size()),
        p_fwd(fft::rows_plan(c.data(), g.nx, g.np, FFTW_FORWARD)),
        p_bwd(fft::rows_plan(c.data(), g.nx, g.np, FFTW_BACKWARD)),
        x_fwd(fft::cols_plan(c.data(), g.nx, g.np, FFTW_FORWARD)),
        x_bwd(fft::cols_plan(c.data(), g.nx, g.np, FFTW_BACKWARD)) {
    const bool quantum = opt.mode == Mode::quantum_liouville || opt.mode == Mode::quantum_master;
    hbar = quantum ? s.hbar : 1.0;
    lambda = effective_lambda(opt.mode, opt.moyal);

    s_freq.resize(g.np);
    for (int k = 0; k < g.np; ++k) s_freq[k] = fft::frequency(k, g.np, g.dp);
    k_freq.resize(g.nx);
    for (int j = 0; j < g.nx; ++j) k_freq[j] = fft::frequency(j, g.nx, g.dx);
    p_val.resize(g.np);
    for (int l = 0; l < g.np; ++l) p_val[l] = g.p(l);

    build_kinetic(kin_half, 0.5 * opt.dt);
    build_kinetic(kin_full, opt.dt);
    build_potential_table();
    if (v->has_kicks()) build_kick_table();
    has_drive = v->family == Potential::Family::duffing && v->lambda != 0.0;
    if (has_drive) drive_row.resize(g.np);
  }

  void build_kinetic(std::vector<cplx>& tab, double dur) {
    tab.resize(g.size());
    const double scale = 1.0 / g.nx;
    for (int j = 0; j < g.nx; ++j) {
      const double kj = j == g.nx / 2 ? 0.0 : k_freq[j];
      for (int l = 0; l < g.np; ++l) {
        const double ph = -kj * (p_val[l] / v->mass) * dur;
        tab[static_cast<std::size_t>(j) * g.np + l] = std::polar(scale, ph);
      }
    }
  }

  void build_potential_table() {
    pot_static.resize(g.size());
    const double scale = 1.0 / g.np;
    for (int i = 0; i < g.nx; ++i) {
      const double x = g.x(i);
      for (int k = 0; k < g.np; ++k) {
        const double s = s_freq[k];
        const double damp = std::exp(-opt.D * s * s * opt.dt);
        const double ph =
            k == g.np / 2 ? 0.0 : opt.dt * static_phase(*v, x, s, hbar, lambda);
        pot_static[static_cast<std::size_t>(i) * g.np + k] = std::polar(scale * damp, ph);
      }
    }
  }

  void build_kick_table() {
    kick_tab.resize(g.size());
    const double scale = 1.0 / g.np;
    for (int i = 0; i < g.nx; ++i) {
      const double x = g.x(i);
      for (int k = 0; k < g.np; ++k) {
        const double ph =
            k == g.np / 2 ? 0.0 : kick_phase(v->kappa, x, s_freq[k], hbar, lambda);
        kick_tab[static_cast<std::size_t>(i) * g.np + k] = std::polar(scale, ph);
      }
    }
  }

  void load(const State& s) {
    for (std::size_t i = 0; i < s.f.size(); ++i) c[i] = cplx(s.f[i], 0.0);
  }

  void store(State& s, double t) const {
    for (std::size_t i = 0; i < s.f.size(); ++i) s.f[i] = c[i].real();
    s.t = t;
  }

  void kinetic(bool full) {
    x_fwd.execute();
    const std::vector<cplx>& tab = full ? kin_full : kin_half;
    cplx* d = c.data();
    for (std::size_t i = 0; i < tab.size(); ++i) d[i] *= tab[i];
    x_bwd.execute();
  }

  void potential(double t_mid) {
    p_fwd.execute();
    cplx* d = c.data();
    if (has_drive) {
      const double cdrv = v->drive_coeff(t_mid) * opt.dt;
      for (int k = 0; k < g.np; ++k)
        drive_row[k] = std::polar(1.0, k == g.np / 2 ? 0.0 : cdrv * s_freq[k]);
      for (int i = 0; i < g.nx; ++i) {
        const cplx* tab = pot_static.data() + static_cast<std::size_t>(i) * g.np;
        cplx* row = d + static_cast<std::size_t>(i) * g.np;
        for (int k = 0; k < g.np; ++k) row[k] *= tab[k] * drive_row[k];
      }
    } else {
      for (std::size_t i = 0; i < pot_static.size(); ++i) d[i] *= pot_static[i];
    }
    p_bwd.execute();
  }

  void kick() {
    p_fwd.execute();
    cplx* d = c.data();
    for (std::size_t i = 0; i < kick_tab.size(); ++i) d[i] *= kick_tab[i];
    p_bwd.execute();
  }

  double mean_mass() const {
    double acc = 0;
    const cplx* d = c.data();
    for (std::size_t i = 0; i < c.size(); ++i) acc += d[i].real();
    return acc * g.cell();
  }
};

}  // namespace

void validate_evolve(const State& s, const Potential& v, const EvolveOptions& opt) {
  if (!(opt.dt > 0) || !std::isfinite(opt.dt))
    throw config_error("evolve: dt must be positive and finite");
  if (opt.D < 0 || !std::isfinite(opt.D)) throw config_error("evolve: D must be nonnegative");

  const bool classical_mode =
      opt.mode == Mode::classical_liouville || opt.mode == Mode::classical_fokker_planck;
  switch (opt.mode) {
    case Mode::classical_liouville:
      if (opt.D != 0)
        throw config_error("evolve: classical_liouville has no diffusion; use "
                           "classical_fokker_planck for D > 0");
      break;
    case Mode::classical_fokker_planck:
      if (!(opt.D > 0))
        throw config_error("evolve: classical_fokker_planck requires D > 0");
      break;
    case Mode::quantum_liouville:
      if (opt.D != 0)
        throw config_error("evolve: quantum_liouville has no diffusion; use quantum_master "
                           "for D > 0");
      break;
    case Mode::quantum_master:
      if (!(opt.D > 0)) throw config_error("evolve: quantum_master requires D > 0");
      break;
  }

  if (classical_mode && s.kind != StateKind::classical)
    throw config_error("evolve: classical modes act on classical states");
  if (!classical_mode && s.kind != StateKind::wigner)
    throw config_error("evolve: quantum modes act on wigner states");
  if (!classical_mode && !(s.hbar > 0))
    throw config_error("evolve: quantum modes require hbar > 0 on the state");

  if (opt.moyal.truncated) {
    if (classical_mode)
      throw config_error("evolve: truncation applies to quantum modes; the classical kernel "
                         "is already the lambda=1 series");
    if (opt.moyal.lambda_max < 1 || opt.moyal.lambda_max % 2 == 0)
      throw config_error("evolve: moyal lambda_max must be odd and >= 1");
  }

  if (v.has_kicks() && s.grid.boundary != Boundary::periodic_x)
    throw config_error("evolve: kicked_rotor requires a periodic_x grid");
  if (!v.has_kicks() && v.family != Potential::Family::free_particle &&
      s.grid.boundary == Boundary::periodic_x)
    throw config_error("evolve: periodic grids support free_particle and kicked_rotor only");

  if (opt.record_purity && !(s.hbar > 0))
    throw config_error("evolve: record_purity requires hbar > 0 on the state");
  if (opt.record_nu && !weyl_commensurate(s.grid, s.hbar))
    throw config_error("evolve: record_nu requires a Weyl-commensurate grid "
                       "(np*dp*dx = 2*pi*hbar, np >= 2*nx)");
}

TrajectoryRecord evolve_to(State& s, const Potential& v, const EvolveOptions& opt,
                           double t_final) {
  validate_evolve(s, v, opt);
  if (t_final < s.t - 1e-12) throw config_error("evolve_to: t_final lies before the state time");

  const double t0 = s.t;
  const double span = t_final - t0;
  const double n_real = span / opt.dt;
  const long n_steps = std::lround(n_real);
  if (std::abs(n_real - n_steps) > 1e-9 * std::max(1.0, std::abs(n_real)))
    throw config_error("evolve_to: dt must divide t_final - t exactly");
  if (v.has_kicks()) {
    const double per = 1.0 / opt.dt;
    if (std::abs(per - std::lround(per)) > 1e-9 * per)
      throw config_error("evolve_to: dt must divide the unit kick period");
  }

  Prop prop(s, v, opt);
  prop.load(s);

  TrajectoryRecord rec;
  rec.meta["mode"] = [&] {
    switch (opt.mode) {
      case Mode::classical_liouville: return "classical_liouville";
      case Mode::classical_fokker_planck: return "classical_fokker_planck";
      case Mode::quantum_liouville: return "quantum_liouville";
      default: return "quantum_master";
    }
  }();
  rec.meta["potential"] = v.name();
  {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%dx%d [%.17g,%.17g]x[%.17g,%.17g]", s.grid.nx, s.grid.np,
                  s.grid.x_min, s.grid.x_max, s.grid.p_min, s.grid.p_max);
    rec.meta["grid"] = buf;
    std::snprintf(buf, sizeof buf, "%.17g", opt.dt);
    rec.meta["dt"] = buf;
    std::snprintf(buf, sizeof buf, "%.17g", opt.D);
    rec.meta["D"] = buf;
  }
  rec.add_series("x_mean");
  rec.add_series("p_mean");
  rec.add_series("p2");
  rec.add_series("norm");
  if (opt.record_gamma) rec.add_series("gamma");
  if (opt.record_purity) rec.add_series("purity");
  if (opt.record_l2) rec.add_series("l2");
  if (opt.record_nu) rec.add_series("nu");
  const int ix = rec.find("x_mean"), ip = rec.find("p_mean"), ip2 = rec.find("p2"),
            inorm = rec.find("norm"), igamma = rec.find("gamma"),
            ipurity = rec.find("purity"), il2 = rec.find("l2"), inu = rec.find("nu");

  const double norm0 = prop.mean_mass();

  auto do_record = [&](double t_now) {
    prop.store(s, t_now);
    const double n = norm(s);
    if (!std::isfinite(n))
      throw numeric_error("evolve: state blew up (non-finite norm) at t=" + std::to_string(t_now));
    if (std::abs(n - norm0) > opt.norm_drift_limit * std::max(1.0, std::abs(norm0)))
      throw numeric_error("evolve: norm drifted beyond limit at t=" + std::to_string(t_now));
    const double leak = boundary_mass_fraction(s);
    if (leak > opt.boundary_leak_limit)
      throw numeric_error("evolve: " + std::to_string(leak) +
                          " of |f| reached the grid edge at t=" + std::to_string(t_now) +
                          "; enlarge the momentum box");
    rec.times.push_back(t_now);
    rec.series[ix].push_back(moment(s, 1, 0).value);
    rec.series[ip].push_back(moment(s, 0, 1).value);
    rec.series[ip2].push_back(moment(s, 0, 2).value);
    rec.series[inorm].push_back(n);
    if (igamma >= 0) rec.series[igamma].push_back(neg_volume(s));
    if (ipurity >= 0) rec.series[ipurity].push_back(purity(s));
    if (il2 >= 0) rec.series[il2].push_back(l2_mass(s));
    if (inu >= 0) rec.series[inu].push_back(nu_of_state(s));
  };

  do_record(t0);

  bool open = false;
  for (long k = 1; k <= n_steps; ++k) {
    prop.kinetic(open);
    prop.potential(t0 + (k - 0.5) * opt.dt);
    const double t_now = t0 + k * opt.dt;
    const bool kick_now = v.has_kicks() && near_integer(t_now) && std::round(t_now) >= 1.0;
    const bool rec_now =
        (opt.record_every > 0 && k % opt.record_every == 0) || k == n_steps || kick_now;
    if (rec_now) {
      prop.kinetic(false);  // close the Strang step
      open = false;
    } else {
      open = true;
    }
    if (kick_now) prop.kick();
    if (rec_now) {
      do_record(t_now);
    } else if (opt.check_norm_each_step) {
      const double n = prop.mean_mass();
      if (!std::isfinite(n) ||
          std::abs(n - norm0) > opt.norm_drift_limit * std::max(1.0, std::abs(norm0)))
        throw numeric_error("evolve: norm check failed at step " + std::to_string(k));
    }
  }
  return rec;
}

void kinetic_half_step(State& s, const Potential& v, double dt) {
  EvolveOptions opt;
  opt.mode = s.kind == StateKind::wigner ? Mode::quantum_liouville : Mode::classical_liouville;
  opt.dt = dt;
  validate_evolve(s, v, opt);
  Prop prop(s, v, opt);
  prop.load(s);
  prop.kinetic(false);
  prop.store(s, s.t);
}

void potential_step(State& s, const Potential& v, const EvolveOptions& opt, double dt,
                    double t_mid) {
  EvolveOptions o = opt;
  o.dt = dt;
  validate_evolve(s, v, o);
  Prop prop(s, v, o);
  prop.load(s);
  prop.potential(t_mid);
  prop.store(s, s.t);
}

void kick_step(State& s, const Potential& v, const EvolveOptions& opt) {
  if (!v.has_kicks()) throw misuse_error("kick_step: potential has no kicks");
  if (s.grid.boundary != Boundary::periodic_x)
    throw misuse_error("kick_step: kicks require a periodic_x grid");
  if (!near_integer(s.t))
    throw misuse_error("kick_step: kicks fire at integer times, state is at t=" +
                       std::to_string(s.t));
  EvolveOptions o = opt;
  if (!(o.dt > 0)) o.dt = 1.0;  // tables need a dt; the kick itself ignores it
  validate_evolve(s, v, o);
  Prop prop(s, v, o);
  prop.load(s);
  prop.kick();
  prop.store(s, s.t);
}

}  // namespace mlab
