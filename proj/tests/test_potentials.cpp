#include <cmath>
#include <numbers>

#include "doctest.h"
#include "mlab/errors.hpp"
#include "mlab/potentials.hpp"
#include "mlab/state.hpp"

using namespace mlab;

namespace {

// Central finite difference of the next-lower closed-form derivative, the
// oracle every analytic derivative is checked against.
double fd(const Potential& v, double x, double t, int order, double h) {
  return (v.eval(x + h, t, order - 1) - v.eval(x - h, t, order - 1)) / (2 * h);
}

}  // namespace

TEST_CASE("duffing derivatives match finite differences through order 4") {
  const Potential v = duffing(1.0, 10.0, 0.5, 10.0, 6.07);
  for (double x : {-3.0, -0.7, 0.0, 1.3, 4.2}) {
    for (double t : {0.0, 0.37}) {
      for (int order = 1; order <= 4; ++order) {
        const double h = 1e-5 * std::max(1.0, std::abs(x));
        const double exact = v.eval(x, t, order);
        const double approx = fd(v, x, t, order, h);
        CHECK(exact == doctest::Approx(approx).epsilon(1e-6).scale(std::abs(exact) + 1.0));
      }
      CHECK(v.eval(x, t, 5) == 0.0);
    }
  }
  CHECK(v.max_order() == 4);
  // Drive separates as c(t) * x.
  CHECK(v.eval(2.0, 0.1, 0) - v.static_eval(2.0, 0) ==
        doctest::Approx(10.0 * std::cos(6.07 * 0.1) * 2.0).epsilon(1e-13));
  CHECK(v.drive_coeff(0.25) == doctest::Approx(10.0 * std::cos(6.07 * 0.25)).epsilon(1e-14));
}

TEST_CASE("harmonic and free potentials") {
  const Potential h = harmonic(2.0, 3.0);
  CHECK(h.static_eval(1.5, 0) == doctest::Approx(0.5 * 2 * 9 * 2.25).epsilon(1e-14));
  CHECK(h.static_eval(1.5, 1) == doctest::Approx(18.0 * 1.5).epsilon(1e-14));
  CHECK(h.static_eval(1.5, 2) == doctest::Approx(18.0).epsilon(1e-14));
  CHECK(h.static_eval(1.5, 3) == 0.0);
  CHECK(h.max_order() == 2);
  const Potential f = free_particle(1.0);
  CHECK(f.static_eval(0.3, 0) == 0.0);
  CHECK(f.drive_coeff(1.0) == 0.0);
}

TEST_CASE("rotor force is the impulse profile") {
  const Potential r = kicked_rotor(10.0);
  CHECK(r.has_kicks());
  CHECK(r.static_eval(1.0, 0) == 0.0);
  for (double q : {0.3, 1.7, 4.0}) {
    CHECK(r.force(q, 0.0, 0) == doctest::Approx(10.0 * std::sin(q)).epsilon(1e-14));
    CHECK(r.force(q, 0.0, 1) == doctest::Approx(10.0 * std::cos(q)).epsilon(1e-14));
    CHECK(r.force(q, 0.0, 2) == doctest::Approx(-10.0 * std::sin(q)).epsilon(1e-14));
  }
}

TEST_CASE("smooth force is minus the gradient") {
  const Potential v = duffing(1.0, 10.0, 0.5, 10.0, 6.07);
  for (double x : {-3.0, 1.1}) {
    CHECK(v.force(x, 0.2, 0) == doctest::Approx(-v.eval(x, 0.2, 1)).epsilon(1e-14));
    CHECK(v.force(x, 0.2, 1) == doctest::Approx(-v.eval(x, 0.2, 2)).epsilon(1e-14));
    CHECK(v.force(x, 0.2, 2) == doctest::Approx(-v.eval(x, 0.2, 3)).epsilon(1e-14));
  }
}

TEST_CASE("factory validation") {
  CHECK_THROWS_AS(free_particle(0.0), config_error);
  CHECK_THROWS_AS(harmonic(1.0, -2.0), config_error);
  CHECK_THROWS_AS(duffing(1.0, 10.0, 0.0, 10.0, 6.07), config_error);
  CHECK_THROWS_AS(duffing(1.0, 10.0, 0.5, 10.0, 0.0), config_error);
  CHECK_THROWS_AS(kicked_rotor(0.0), config_error);
}

TEST_CASE("force_stats finds percentile points of a displaced gaussian") {
  const Grid g = make_grid(256, 64, -10, 10, -10, 10, Boundary::box);
  const double x0 = -3.0, sx = 0.5;
  const State s = gaussian_state(g, x0, 0.0, sx, 1.0, StateKind::classical);
  const Potential v = duffing(1.0, 10.0, 0.5, 10.0, 6.07);
  const ForceStats fs = force_stats(v, s, 0.0);

  // Quartiles of a gaussian sit at +-0.6745 sigma around the median.
  const double z = 0.674489750196082;
  CHECK(std::abs(fs.position[0] - (x0 - z * sx)) < g.dx);
  CHECK(std::abs(fs.position[1] - x0) < g.dx);
  CHECK(std::abs(fs.position[2] - (x0 + z * sx)) < g.dx);
  for (int q = 0; q < 3; ++q) {
    CHECK(fs.F[q] == doctest::Approx(v.force(fs.position[q], 0.0, 0)).epsilon(1e-14));
    CHECK(fs.dF[q] == doctest::Approx(v.force(fs.position[q], 0.0, 1)).epsilon(1e-14));
    CHECK(fs.d2F[q] == doctest::Approx(v.force(fs.position[q], 0.0, 2)).epsilon(1e-14));
    CHECK_FALSE(fs.degenerate[q]);
  }
}

TEST_CASE("force_stats flags vanishing force") {
  const Grid g = make_grid(256, 64, -10, 10, -10, 10, Boundary::box);
  // Symmetric state about the harmonic minimum: the median point sits where
  // F = 0.
  const State s = gaussian_state(g, 0.0, 0.0, 1.0, 1.0, StateKind::classical);
  const Potential h = harmonic(1.0, 2.0);
  const ForceStats fs = force_stats(h, s, 0.0);
  CHECK(fs.degenerate[1]);
  CHECK_FALSE(fs.degenerate[0]);
  CHECK_FALSE(fs.degenerate[2]);

  // Zero force everywhere: no usable point at all.
  const Potential f = free_particle(1.0);
  CHECK_THROWS_AS(force_stats(f, s, 0.0), numeric_error);
}
