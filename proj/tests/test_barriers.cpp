#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "fbflow/barriers.hpp"
#include "fbflow/errors.hpp"
#include "fbflow/heat_kernel.hpp"
#include "fbflow/mass_profile.hpp"
#include "generators.hpp"

using namespace fbflow;

namespace {

MassProfile flat_block(double height, double hi, double h) {
  MassProfile u;
  u.cell_width = h;
  u.values.assign(static_cast<std::size_t>(std::lround(hi / h)), height);
  return u;
}

}  // namespace

TEST_SUITE("barriers") {

TEST_CASE("cut and paste: hand case, conservation, exact displacement") {
  const double h = 1.0 / 8.0;
  const MassProfile u = flat_block(1.0, 2.0, h);
  const MassProfile cut = cut_and_paste(u, 0.5, 1.0);
  CHECK(cut.atom == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(cut.support_end() == doctest::Approx(1.5));
  for (double v : cut.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(total_mass(cut) == doctest::Approx(2.0).epsilon(1e-14));

  Xoshiro256pp rng(31);
  for (int rep = 0; rep < 40; ++rep) {
    const MassProfile w = testgen::random_profile(rng, 1.0 / 32.0, 2.0);
    const double delta = testgen::uniform_in(rng, 0.01, 0.3);
    const double j = testgen::uniform_in(rng, 0.3, 1.5);
    if (density_mass(w) <= j * delta * 1.01) continue;
    const MassProfile c = cut_and_paste(w, delta, j);
    // Mass is conserved and the L1 displacement is exactly 2*j*delta: the
    // same mass leaves the right end and reappears at the origin.
    CHECK(std::abs(total_mass(c) - total_mass(w)) <= 1e-12 * total_mass(w));
    CHECK(l1_distance(c, w) == doctest::Approx(2.0 * j * delta).epsilon(1e-11));
    // The move is downward in the transport order.
    CHECK(leq_modulo(c, w, 0.0, 1e-10));
  }
}

TEST_CASE("cut and paste requires enough density") {
  const MassProfile u = flat_block(1.0, 0.5, 1.0 / 8.0);  // density mass 0.5
  CHECK_THROWS_AS(cut_and_paste(u, 1.0, 1.0), InsufficientDensityError);
}

TEST_CASE("one step of each evolution: atoms, mass, bracket") {
  const double delta = 0.05;
  const MassProfile rho = stationary_profile(2.0, 1.0, 1.0 / 64.0);
  const MassProfile lo = lower_step(rho, delta, 1.0);
  const MassProfile up = upper_step(rho, delta, 1.0);
  // Diffuse-then-cut ends with the freshly parked atom; cut-then-diffuse
  // melts it away.
  CHECK(lo.atom == doctest::Approx(delta).epsilon(1e-15));
  CHECK(up.atom == 0.0);
  CHECK(total_mass(lo) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(total_mass(up) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(leq_modulo(lo, up, 0.0, 1e-10));
}

TEST_CASE("both evolutions are monotone in the starting profile") {
  Xoshiro256pp rng(32);
  int tested = 0;
  for (int rep = 0; rep < 30 && tested < 20; ++rep) {
    const auto [u, v] = testgen::ordered_pair(rng, 1.0 / 32.0, 1.5);
    const double delta = testgen::uniform_in(rng, 0.02, 0.15);
    // Small random profiles may not carry enough free density to cut.
    if (density_mass(u) <= 1.05 * delta) continue;
    ++tested;
    CHECK(order_gap(lower_step(u, delta, 1.0), lower_step(v, delta, 1.0)) <= 1e-10);
    CHECK(order_gap(upper_step(u, delta, 1.0), upper_step(v, delta, 1.0)) <= 1e-10);
  }
  CHECK(tested >= 20);
}

TEST_CASE("a barrier run keeps its books") {
  const double h = 1.0 / 64.0;
  const MassProfile rho = stationary_profile(2.0, 1.0, h);
  const double delta = 0.05;
  const BarrierRun run = run_barriers(rho, delta, 1.0, 20);
  REQUIRE(run.gap_l1.size() == 21);
  REQUIRE(run.steps.size() == 21);  // record_every defaults to 1
  for (std::size_t k = 1; k < run.gap_l1.size(); ++k) {
    CHECK(run.gap_l1[k] <= 4.0 * delta + 5.0 * h);
  }
  for (const BarrierStep& s : run.steps) {
    CHECK(leq_modulo(s.lower, s.upper, 0.0, 1e-9));
    CHECK(std::abs(total_mass(s.lower) - 1.0) <= 1e-8);
    CHECK(std::abs(total_mass(s.upper) - 1.0) <= 1e-8);
    // The stationary wedge is a fixed point of the limit dynamics, so both
    // evolutions stay within the one-step F-distance of it.
    CHECK(order_gap(s.lower, rho) <= 1e-9);
    CHECK(order_gap(rho, s.upper) <= 1e-9);
    CHECK(std::abs(order_gap(rho, s.lower)) <= 4.0 * delta + 5.0 * h);
    CHECK(std::abs(order_gap(s.upper, rho)) <= 4.0 * delta + 5.0 * h);
  }
  CHECK_THROWS_AS(run_barriers(rho, delta, 1.0, 0), ConfigurationError);
}

TEST_CASE("barrier evolutions are stable in L1") {
  Xoshiro256pp rng(33);
  for (int rep = 0; rep < 10; ++rep) {
    const MassProfile u = testgen::random_profile(rng, 1.0 / 32.0, 1.5);
    const MassProfile v = testgen::random_profile(rng, 1.0 / 32.0, 1.5);
    const double delta = 0.1;
    const BarrierRunOptions opts;
    const BarrierRun ru = run_barriers(u, delta, 1.0, 5, opts);
    const BarrierRun rv = run_barriers(v, delta, 1.0, 5, opts);
    const double d0 = l1_distance(u, v);
    CHECK(l1_distance(ru.steps.back().lower, rv.steps.back().lower) <= d0 + 1e-8);
    CHECK(l1_distance(ru.steps.back().upper, rv.steps.back().upper) <= d0 + 1e-8);
  }
}

TEST_CASE("edges stay pinched between the enclosing wedges") {
  // rho_1 <= u <= rho_3 keeps every barrier edge inside [0.5, 1.5] up to the
  // diffusive spill, measured here with a mass threshold of j*delta/2.
  const double h = 1.0 / 128.0;
  const double delta = 0.01;
  const MassProfile r1 = stationary_profile(1.0, 1.0, h);
  const MassProfile r3 = stationary_profile(3.0, 1.0, h);
  MassProfile u = r1;
  u.values.resize(r3.values.size(), 0.0);
  for (std::size_t i = 0; i < u.values.size(); ++i) {
    u.values[i] = 0.4 * u.values[i] + 0.6 * r3.values[i];
  }
  REQUIRE(leq_modulo(r1, u, 0.0, 1e-12));
  REQUIRE(leq_modulo(u, r3, 0.0, 1e-12));

  BarrierRunOptions opts;
  opts.edge_tol = 0.5 * delta;  // j = 1
  opts.record_every = 10;
  const BarrierRun run = run_barriers(u, delta, 1.0, 100, opts);
  for (std::size_t k = 0; k < run.edge_lower.size(); ++k) {
    CHECK(run.edge_lower[k] >= 0.5 - 0.02);
    CHECK(run.edge_lower[k] <= 1.5 + 0.02);
    CHECK(run.edge_upper[k] >= 0.5 - 0.02);
    CHECK(run.edge_upper[k] <= 1.5 + 0.02);
  }
}

TEST_CASE("dyadic refinement produces a certified bracket") {
  const double h = 1.0 / 128.0;
  const MassProfile rho = stationary_profile(2.0, 1.0, h);
  const SeparatingElement sep = separating_element(rho, 0.5, 1.0, 2e-2, 8);
  CHECK(sep.certified_gap <= 2e-2);
  CHECK(sep.levels_used <= 8);
  // The bracket contains the fixed point, and the midpoint is close to it.
  CHECK(order_gap(sep.finest_lower, rho) <= 1e-9);
  CHECK(order_gap(rho, sep.finest_upper) <= 1e-9);
  CHECK(order_gap(sep.profile, rho) <= sep.certified_gap);
  CHECK(order_gap(rho, sep.profile) <= sep.certified_gap);
  // One more halving tightens the gap by roughly the advertised rate.
  CHECK(sep.certified_gap <=
        4.0 * 0.5 * std::pow(2.0, -sep.levels_used) + 5.0 * h + 1e-9);
}

TEST_CASE("refinement reports failure honestly when starved of levels") {
  const MassProfile rho = stationary_profile(2.0, 1.0, 1.0 / 64.0);
  try {
    separating_element(rho, 0.5, 1.0, 1e-9, 3);
    FAIL("expected a convergence failure");
  } catch (const ConvergenceFailure& e) {
    CHECK(e.achieved_gap > 1e-9);
    CHECK(e.levels_used == 3);
  }
}

TEST_CASE("the separating element is monotone in its argument") {
  Xoshiro256pp rng(34);
  for (int rep = 0; rep < 5; ++rep) {
    const auto [u, v] = testgen::ordered_pair(rng, 1.0 / 32.0, 1.2);
    const SeparatingElement su = separating_element(u, 0.25, 1.0, 5e-2, 7);
    const SeparatingElement sv = separating_element(v, 0.25, 1.0, 5e-2, 7);
    CHECK(order_gap(su.profile, sv.profile) <=
          su.certified_gap + sv.certified_gap + 1e-9);
  }
}

}  // TEST_SUITE
