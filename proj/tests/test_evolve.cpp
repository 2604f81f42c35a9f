#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "mlab/errors.hpp"
#include "mlab/evolve.hpp"
#include "mlab/potentials.hpp"
#include "mlab/state.hpp"
#include "support/oracles.hpp"

using namespace mlab;

namespace {

constexpr double pi = std::numbers::pi;

double var_x(const State& s) {
  const double m1 = moment(s, 1, 0).value;
  return moment(s, 2, 0).value - m1 * m1;
}

double var_p(const State& s) {
  const double m1 = moment(s, 0, 1).value;
  return moment(s, 0, 2).value - m1 * m1;
}

double max_abs_diff(const State& a, const State& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.f.size(); ++i) m = std::max(m, std::abs(a.f[i] - b.f[i]));
  return m;
}

double max_abs(const State& s) {
  double m = 0;
  for (double v : s.f) m = std::max(m, std::abs(v));
  return m;
}

// Ensemble of weighted leapfrog trajectories on a uniform lattice of the
// initial Gaussian, +-7 sigma. The lattice sum of a Gaussian converges
// superalgebraically, so this reproduces the exact Liouville moments to
// well below the PDE tolerances while sharing no code with the propagator.
struct EnsembleMoments {
  double x_mean, p_mean;
};

EnsembleMoments leapfrog_ensemble(double x0, double p0, double sx, double sp, double mass,
                                  const std::function<double(double, double)>& dVdx, double dt,
                                  long n_steps) {
  const int n = 57;  // odd: includes the center point
  const double half = 7.0;
  double wsum = 0, xm = 0, pm = 0;
  for (int i = 0; i < n; ++i) {
    const double u = -half + 2.0 * half * i / (n - 1);
    const double wu = std::exp(-0.5 * u * u);
    for (int j = 0; j < n; ++j) {
      const double v = -half + 2.0 * half * j / (n - 1);
      const double w = wu * std::exp(-0.5 * v * v);
      auto [x, p] = oracle::leapfrog(x0 + u * sx, p0 + v * sp, mass, dVdx, dt, n_steps);
      wsum += w;
      xm += w * x;
      pm += w * p;
    }
  }
  return {xm / wsum, pm / wsum};
}

}  // namespace

TEST_CASE("free streaming reproduces ballistic dispersion") {
  const Grid g = make_grid(128, 128, -10, 10, -10, 10, Boundary::box);
  State s = gaussian_state(g, 0.5, 1.0, 1.0, 0.5, StateKind::classical);
  const Potential v = free_particle(2.0);
  EvolveOptions opt;
  opt.mode = Mode::classical_liouville;
  opt.dt = 0.01;
  evolve_to(s, v, opt, 1.0);

  CHECK(s.t == doctest::Approx(1.0));
  CHECK(moment(s, 1, 0).value == doctest::Approx(0.5 + 1.0 * 1.0 / 2.0).epsilon(1e-10));
  CHECK(moment(s, 0, 1).value == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(var_x(s) == doctest::Approx(oracle::free_var_x(1.0, 0.25, 2.0, 1.0)).epsilon(1e-10));
  CHECK(var_p(s) == doctest::Approx(0.25).epsilon(1e-10));
  CHECK(norm(s) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("momentum diffusion follows the closed-form variances") {
  const Grid g = make_grid(128, 128, -10, 10, -10, 10, Boundary::box);
  State s = gaussian_state(g, 0.0, 0.0, 1.0, 0.5, StateKind::classical);
  const Potential v = free_particle(1.0);
  EvolveOptions opt;
  opt.mode = Mode::classical_fokker_planck;
  opt.dt = 0.01;
  opt.D = 0.3;
  const TrajectoryRecord rec = evolve_to(s, v, opt, 1.0);

  // The p-marginal is untouched by streaming, so its heat-kernel growth is
  // exact per step; var_x picks up the Strang defect, O(D t dt^2).
  CHECK(var_p(s) == doctest::Approx(oracle::diffusion_var_p(0.25, 0.3, 1.0)).epsilon(1e-8));
  CHECK(var_x(s) ==
        doctest::Approx(oracle::diffusion_var_x(1.0, 0.25, 0.3, 1.0, 1.0)).epsilon(1e-5));
  // Diffusion contracts the L2 mass; the record's norm column stays at 1.
  CHECK(l2_mass(s) < 0.99 * 1.0 / (4.0 * pi * 1.0 * 0.5));
  for (double n : rec.at("norm")) CHECK(n == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("harmonic centroid is the leapfrog orbit at the same dt") {
  // sigma_p rotates into an x-width of sigma_p/(m w); keep that at >= 3 cells
  // or the spectral tail aliases into a broadband floor.
  const Grid g = make_grid(256, 256, -8, 8, -14, 14, Boundary::box);
  const double m = 1.3, w = 2.1, x0 = 1.0, p0 = 0.5, dt = 0.005;
  State s = gaussian_state(g, x0, p0, 0.7, 0.6, StateKind::classical);
  const Potential v = harmonic(m, w);
  EvolveOptions opt;
  opt.mode = Mode::classical_liouville;
  opt.dt = dt;
  evolve_to(s, v, opt, 2.0);

  // For a linear force <F(x)> = F(<x>), so the centroid of the split-step
  // flow IS the drift-kick-drift point orbit, not merely close to it. What
  // remains is the gaussian tail the box clips, a few parts in 1e9.
  const auto [xr, pr] =
      oracle::leapfrog(x0, p0, m, [&](double x, double) { return v.eval(x, 0, 1); }, dt, 400);
  CHECK(moment(s, 1, 0).value == doctest::Approx(xr).epsilon(1e-7));
  CHECK(moment(s, 0, 1).value == doctest::Approx(pr).epsilon(1e-7));

  // And the orbit itself is the exact rotation up to O(dt^2).
  const auto [xe, pe] = oracle::harmonic_centroid(x0, p0, m, w, 2.0);
  CHECK(moment(s, 1, 0).value == doctest::Approx(xe).epsilon(5e-4));
  CHECK(moment(s, 0, 1).value == doctest::Approx(pe).epsilon(5e-4));
  CHECK(var_x(s) == doctest::Approx(oracle::harmonic_var_x(0.49, 0.36, m, w, 2.0)).epsilon(5e-3));
}

TEST_CASE("quantum evolution equals classical for a quadratic potential") {
  // The two-point kernel collapses to V'(x)s when V''' = 0, so the wigner
  // and liouville runs must agree to rounding.
  const Grid g = make_grid(128, 256, -8, 8, -12, 12, Boundary::box);
  State sc = gaussian_state(g, 1.0, 0.5, 0.7, 0.36, StateKind::classical);
  State sq = gaussian_state(g, 1.0, 0.5, 0.7, 0.36, StateKind::wigner, 0.5);
  REQUIRE(max_abs_diff(sc, sq) == 0.0);

  const Potential v = harmonic(1.0, 1.3);
  EvolveOptions opt;
  opt.dt = 0.01;
  opt.mode = Mode::classical_liouville;
  evolve_to(sc, v, opt, 1.0);
  opt.mode = Mode::quantum_liouville;
  evolve_to(sq, v, opt, 1.0);

  CHECK(max_abs_diff(sc, sq) <= 1e-12 * max_abs(sc));
}

TEST_CASE("quartic well blob follows the exact Liouville moments") {
  // Filaments thin as 1/stretch; nx=1024 keeps the narrowest one resolved
  // through t=0.2 so the blob moments stay clean to the oracle tolerance.
  const Grid g = make_grid(1024, 512, -8, 8, -20, 20, Boundary::box);
  const double x0 = -3.0, p0 = 8.0, sx = 0.25, sp = 0.5, dt = 1e-3;
  const Potential v = duffing(1.0, 10.0, 0.5, 0.0, 0.0);

  State s = gaussian_state(g, x0, p0, sx, sp, StateKind::classical);
  EvolveOptions opt;
  opt.mode = Mode::classical_liouville;
  opt.dt = dt;
  evolve_to(s, v, opt, 0.2);

  const auto ref = leapfrog_ensemble(
      x0, p0, sx, sp, 1.0, [&](double x, double t) { return v.eval(x, t, 1); }, 1e-4, 2000);
  CHECK(std::abs(moment(s, 1, 0).value - ref.x_mean) < 1e-3 * std::max(1.0, std::abs(ref.x_mean)));
  CHECK(std::abs(moment(s, 0, 1).value - ref.p_mean) < 1e-3 * std::max(1.0, std::abs(ref.p_mean)));

  // The blob has left its initial centroid by a finite-width amount the
  // ensemble sees but a single point orbit does not; make sure the test
  // would notice if the propagator secretly integrated the point orbit.
  const auto [xp, pp] =
      oracle::leapfrog(x0, p0, 1.0, [&](double x, double t) { return v.eval(x, t, 1); }, 1e-4,
                       2000);
  CHECK(std::abs(xp - ref.x_mean) + std::abs(pp - ref.p_mean) > 5e-3);
}

TEST_CASE("driven quartic well matches the ensemble oracle") {
  // Filaments thin as 1/stretch; nx=1024 keeps the narrowest one resolved
  // through t=0.2 so the blob moments stay clean to the oracle tolerance.
  const Grid g = make_grid(1024, 512, -8, 8, -20, 20, Boundary::box);
  const double x0 = -3.0, p0 = 8.0, sx = 0.25, sp = 0.5, dt = 1e-3;
  const Potential v = duffing(1.0, 10.0, 0.5, 10.0, 6.07);

  State s = gaussian_state(g, x0, p0, sx, sp, StateKind::classical);
  EvolveOptions opt;
  opt.mode = Mode::classical_liouville;
  opt.dt = dt;
  evolve_to(s, v, opt, 0.2);

  const auto ref = leapfrog_ensemble(
      x0, p0, sx, sp, 1.0, [&](double x, double t) { return v.eval(x, t, 1); }, 1e-4, 2000);
  CHECK(std::abs(moment(s, 1, 0).value - ref.x_mean) < 1e-3 * std::max(1.0, std::abs(ref.x_mean)));
  CHECK(std::abs(moment(s, 0, 1).value - ref.p_mean) < 1e-3 * std::max(1.0, std::abs(ref.p_mean)));
}

TEST_CASE("cubic truncation is exact for a quartic potential") {
  const Grid g = make_grid(256, 256, -8, 8, -20, 20, Boundary::box);
  const Potential v = duffing(1.0, 10.0, 0.5, 0.0, 0.0);
  State a = gaussian_state(g, -3.0, 8.0, 0.25, 0.5, StateKind::wigner, 0.1);
  State b = a;

  EvolveOptions opt;
  opt.mode = Mode::quantum_liouville;
  opt.dt = 1e-3;
  evolve_to(a, v, opt, 0.01);

  opt.moyal.truncated = true;
  opt.moyal.lambda_max = 3;
  evolve_to(b, v, opt, 0.01);

  // Derivatives above 4 vanish, so the odd series through s^3 IS the
  // two-point kernel, up to the rounding difference of the two evaluations.
  CHECK(max_abs_diff(a, b) <= 1e-12 * max_abs(a));
}

TEST_CASE("first-order truncation reproduces the classical run bit for bit") {
  const Grid g = make_grid(256, 256, -8, 8, -20, 20, Boundary::box);
  const Potential v = duffing(1.0, 10.0, 0.5, 0.0, 0.0);
  State sc = gaussian_state(g, -3.0, 8.0, 0.25, 0.5, StateKind::classical);
  State sq = gaussian_state(g, -3.0, 8.0, 0.25, 0.5, StateKind::wigner, 0.1);

  EvolveOptions opt;
  opt.dt = 1e-3;
  opt.mode = Mode::classical_liouville;
  evolve_to(sc, v, opt, 0.05);
  opt.mode = Mode::quantum_liouville;
  opt.moyal.truncated = true;
  opt.moyal.lambda_max = 1;
  evolve_to(sq, v, opt, 0.05);

  // lambda = 1 kills every hbar factor, so the phase tables coincide exactly
  // and the two runs perform identical arithmetic.
  CHECK(max_abs_diff(sc, sq) == 0.0);
}

TEST_CASE("rotor kick shifts mean momentum by kappa <sin q>") {
  const Grid g = make_grid(128, 512, 0, 2 * pi, -40, 40, Boundary::periodic_x);
  const double kappa = 2.0;
  const Potential v = kicked_rotor(kappa);

  auto mean_sin = [&](const State& s) {
    double acc = 0, mass = 0;
    for (int i = 0; i < g.nx; ++i)
      for (int l = 0; l < g.np; ++l) {
        acc += std::sin(g.x(i)) * s.at(i, l);
        mass += s.at(i, l);
      }
    return acc / mass;
  };

  EvolveOptions opt;
  opt.mode = Mode::classical_liouville;
  SUBCASE("classical") {
    State s = gaussian_state(g, 1.0, 2.0, 0.5, 1.5, StateKind::classical);
    s.t = 1.0;
    const double want = kappa * mean_sin(s);
    const double before = moment(s, 0, 1).value;
    kick_step(s, v, opt);
    CHECK(moment(s, 0, 1).value - before == doctest::Approx(want).epsilon(1e-9));
    CHECK(norm(s) == doctest::Approx(1.0).epsilon(1e-10));
  }
  SUBCASE("quantum") {
    // The impulse conjugation shifts the momentum operator by kappa sin q
    // exactly, independent of hbar.
    State s = gaussian_state(g, 1.0, 2.0, 0.75, 1.0, StateKind::wigner, 1.0);
    s.t = 2.0;
    opt.mode = Mode::quantum_liouville;
    const double want = kappa * mean_sin(s);
    const double before = moment(s, 0, 1).value;
    kick_step(s, v, opt);
    CHECK(moment(s, 0, 1).value - before == doctest::Approx(want).epsilon(1e-9));
  }
  SUBCASE("misuse") {
    State s = gaussian_state(g, 1.0, 2.0, 0.5, 1.5, StateKind::classical);
    s.t = 0.5;
    CHECK_THROWS_AS(kick_step(s, v, opt), misuse_error);  // off the kick clock
    const Grid gb = make_grid(128, 128, -10, 10, -10, 10, Boundary::box);
    State sb = gaussian_state(gb, 0, 0, 1, 1, StateKind::classical);
    CHECK_THROWS_AS(kick_step(sb, v, opt), misuse_error);
    CHECK_THROWS_AS(kick_step(s, free_particle(1.0), opt), misuse_error);
  }
}

TEST_CASE("evolve_to composes the exposed substeps") {
  const Grid g = make_grid(128, 256, -8, 8, -20, 20, Boundary::box);
  const Potential v = duffing(1.0, 10.0, 0.5, 10.0, 6.07);
  const double dt = 0.01;

  State a = gaussian_state(g, -3.0, 8.0, 0.4, 0.8, StateKind::classical);
  State b = a;

  EvolveOptions opt;
  opt.mode = Mode::classical_liouville;
  opt.dt = dt;
  evolve_to(a, v, opt, 3 * dt);

  for (int k = 0; k < 3; ++k) {
    kinetic_half_step(b, v, dt);
    potential_step(b, v, opt, dt, (k + 0.5) * dt);
    kinetic_half_step(b, v, dt);
  }
  // evolve_to merges interior half steps; undoing the merge costs one extra
  // transform round trip per step, i.e. rounding only.
  CHECK(max_abs_diff(a, b) <= 1e-13 * max_abs(a));
  CHECK(a.t == doctest::Approx(3 * dt));
}

TEST_CASE("periodic free streaming matches the wrapped gaussian pointwise") {
  const Grid g = make_grid(128, 128, 0, 2 * pi, -8, 8, Boundary::periodic_x);
  const double q0 = 2.0, p0 = 1.2, sq = 0.4, sp = 0.8, t = 1.0;
  State s = gaussian_state(g, q0, p0, sq, sp, StateKind::classical);
  const Potential v = free_particle(1.0);
  EvolveOptions opt;
  opt.mode = Mode::classical_liouville;
  opt.dt = 0.05;
  evolve_to(s, v, opt, t);

  double worst = 0;
  for (int i = 0; i < g.nx; ++i)
    for (int l = 0; l < g.np; ++l) {
      const double want = oracle::wrapped_gauss_pdf(g.x(i) - g.p(l) * t - q0, sq, 2 * pi) *
                          oracle::gauss_pdf(g.p(l) - p0, sp);
      worst = std::max(worst, std::abs(s.at(i, l) - want));
    }
  CHECK(worst <= 1e-9 * max_abs(s));
  CHECK(moment(s, 1, 0).ill_defined);
  CHECK_FALSE(moment(s, 0, 2).ill_defined);
}

TEST_CASE("record cadence and kick logging") {
  SUBCASE("every N steps plus endpoints") {
    const Grid g = make_grid(64, 64, -10, 10, -10, 10, Boundary::box);
    State s = gaussian_state(g, 0, 0, 1, 1, StateKind::classical);
    EvolveOptions opt;
    opt.mode = Mode::classical_liouville;
    opt.dt = 0.1;
    opt.record_every = 2;
    const TrajectoryRecord rec = evolve_to(s, free_particle(1.0), opt, 1.0);
    REQUIRE(rec.times.size() == 6);
    for (int j = 0; j < 6; ++j) CHECK(rec.times[j] == doctest::Approx(0.2 * j).epsilon(1e-12));
    CHECK(rec.at("norm").size() == 6);
    CHECK(rec.meta.at("mode") == "classical_liouville");
  }
  SUBCASE("kicks force a record and land after the step") {
    const Grid g = make_grid(128, 256, 0, 2 * pi, -40, 40, Boundary::periodic_x);
    State s = gaussian_state(g, 1.0, 0.0, 0.4, 0.8, StateKind::classical);
    EvolveOptions opt;
    opt.mode = Mode::classical_liouville;
    opt.dt = 0.25;
    // Stop shortly after the first kick: the undamped rotor cascades to
    // momentum structure no fixed grid can hold for long (that is the
    // physics), and this test is about bookkeeping, not filamentation.
    const TrajectoryRecord rec = evolve_to(s, kicked_rotor(2.0), opt, 1.25);
    REQUIRE(rec.times.size() == 3);  // t0, the kick, the endpoint
    CHECK(rec.times[1] == doctest::Approx(1.0));
    CHECK(rec.times[2] == doctest::Approx(1.25));
    const auto& pm = rec.at("p_mean");
    // Streaming alone never moves <p>; the jump proves the kick fired and
    // the row logged the post-kick state.
    CHECK(pm[0] == doctest::Approx(0.0).scale(1).epsilon(1e-10));
    CHECK(std::abs(pm[1] - pm[0]) > 0.01);
  }
}

TEST_CASE("runaway states abort with a numeric error") {
  // A tight momentum box plus strong diffusion drives mass into the edge
  // monitor zone within a few steps.
  const Grid g = make_grid(64, 64, -10, 10, -2, 2, Boundary::box);
  State s = gaussian_state(g, 0, 0, 1, 0.3, StateKind::classical);
  EvolveOptions opt;
  opt.mode = Mode::classical_fokker_planck;
  opt.D = 5.0;
  opt.dt = 0.05;
  opt.record_every = 1;
  CHECK_THROWS_AS(evolve_to(s, free_particle(1.0), opt, 1.0), numeric_error);
}

TEST_CASE("evolve validation rejects inconsistent setups") {
  const Grid box = make_grid(64, 64, -10, 10, -10, 10, Boundary::box);
  const Grid ring = make_grid(64, 128, 0, 2 * pi, -20, 20, Boundary::periodic_x);
  State c = gaussian_state(box, 0, 0, 1, 1, StateKind::classical);
  State w = gaussian_state(box, 0, 0, 1, 1, StateKind::wigner, 1.0);
  const Potential fp = free_particle(1.0);

  EvolveOptions opt;
  opt.dt = 0.1;

  opt.mode = Mode::classical_liouville;
  opt.D = 0.1;
  CHECK_THROWS_AS(validate_evolve(c, fp, opt), config_error);
  opt.mode = Mode::classical_fokker_planck;
  opt.D = 0;
  CHECK_THROWS_AS(validate_evolve(c, fp, opt), config_error);
  opt.mode = Mode::quantum_liouville;
  opt.D = 0.1;
  CHECK_THROWS_AS(validate_evolve(w, fp, opt), config_error);
  opt.mode = Mode::quantum_master;
  opt.D = 0;
  CHECK_THROWS_AS(validate_evolve(w, fp, opt), config_error);
  opt.D = 0.1;

  CHECK_THROWS_AS(validate_evolve(c, fp, opt), config_error);  // classical state, quantum mode
  opt.mode = Mode::classical_liouville;
  opt.D = 0;
  CHECK_THROWS_AS(validate_evolve(w, fp, opt), config_error);  // wigner state, classical mode

  State w0 = c;
  w0.kind = StateKind::wigner;  // hbar still unset
  opt.mode = Mode::quantum_liouville;
  CHECK_THROWS_AS(validate_evolve(w0, fp, opt), config_error);

  opt.mode = Mode::classical_liouville;
  opt.moyal.truncated = true;
  opt.moyal.lambda_max = 3;
  CHECK_THROWS_AS(validate_evolve(c, fp, opt), config_error);  // truncation is quantum-only
  opt.mode = Mode::quantum_liouville;
  opt.moyal.lambda_max = 2;
  CHECK_THROWS_AS(validate_evolve(w, fp, opt), config_error);  // even order
  opt.moyal.truncated = false;
  opt.moyal.lambda_max = 0;

  opt.mode = Mode::classical_liouville;
  CHECK_THROWS_AS(validate_evolve(c, kicked_rotor(2.0), opt), config_error);  // rotor in a box
  State ring_c = gaussian_state(ring, 1, 0, 0.4, 1, StateKind::classical);
  CHECK_THROWS_AS(validate_evolve(ring_c, duffing(1, 10, 0.5, 0, 0), opt), config_error);

  opt.record_purity = true;
  CHECK_THROWS_AS(validate_evolve(c, fp, opt), config_error);  // purity needs hbar
  opt.record_purity = false;
  opt.record_nu = true;
  CHECK_THROWS_AS(validate_evolve(w, fp, opt), config_error);  // box grid not commensurate
  opt.record_nu = false;

  opt.dt = 0;
  CHECK_THROWS_AS(validate_evolve(c, fp, opt), config_error);
  opt.dt = 0.3;
  CHECK_THROWS_AS(evolve_to(c, fp, opt, 1.0), config_error);  // dt does not tile the span
  opt.dt = 0.1;
  CHECK_THROWS_AS(evolve_to(c, fp, opt, -1.0), config_error);
  State rot = gaussian_state(ring, 1, 0, 0.4, 1, StateKind::classical);
  opt.dt = 0.3;
  CHECK_THROWS_AS(evolve_to(rot, kicked_rotor(2.0), opt, 0.3), config_error);  // kick period
}

TEST_CASE("diffusion decays purity under the quantum master mode") {
  const Grid g = make_grid(128, 128, -10, 10, -10, 10, Boundary::box);
  // Keep both axes at >= 3 cells through the rotation so the gamma column
  // reads true negativity, not spectral ringing.
  State s = gaussian_state(g, 0.0, 0.0, 0.5, 0.5, StateKind::wigner, 0.5);
  EvolveOptions opt;
  opt.mode = Mode::quantum_master;
  opt.dt = 0.01;
  opt.D = 0.1;
  opt.record_every = 25;
  opt.record_purity = true;
  opt.record_l2 = true;
  opt.record_gamma = true;
  const TrajectoryRecord rec = evolve_to(s, harmonic(1.0, 1.0), opt, 1.0);

  const auto& pur = rec.at("purity");
  CHECK(pur.front() == doctest::Approx(1.0).epsilon(1e-9));
  for (std::size_t j = 1; j < pur.size(); ++j) CHECK(pur[j] < pur[j - 1]);
  // A positive gaussian stays essentially positive under this flow.
  for (double gval : rec.at("gamma")) CHECK(gval < 1e-6);
}
