#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "fbflow/errors.hpp"
#include "fbflow/heat_kernel.hpp"
#include "fbflow/mass_profile.hpp"
#include "generators.hpp"

using namespace fbflow;

namespace {

// Reference values computed from the standard normal cumulative:
//   Phi(1)       = 0.8413447460685429
//   Phi(sqrt(2)) such that 2*(1 - Phi(sqrt 2)) = 0.157299207050285
constexpr double kTwoOverSqrt2Pi = 0.7978845608028654;   // 2/sqrt(2*pi)
constexpr double kPhiOne = 0.8413447460685429;
constexpr double kTailAtOneHalfTime = 0.157299207050285; // 2*(1 - Phi(sqrt 2))
constexpr double kPhiOfZeroDensity = 0.3989422804014327; // phi(0) = psi(0)

}  // namespace

TEST_SUITE("heat_kernel") {

TEST_CASE("reflecting kernel: closed form at the origin, symmetry, flattening") {
  CHECK(kernel_value(1.0, 0.0, 0.0) == doctest::Approx(kTwoOverSqrt2Pi).epsilon(1e-14));

  Xoshiro256pp rng(21);
  for (int rep = 0; rep < 20; ++rep) {
    const double t = testgen::uniform_in(rng, 0.01, 4.0);
    const double a = testgen::uniform_in(rng, 0.0, 3.0);
    const double b = testgen::uniform_in(rng, 0.0, 3.0);
    // The expression is symmetric term by term, so this holds bitwise.
    CHECK(kernel_value(t, a, b) == kernel_value(t, b, a));
    CHECK(kernel_value(t, a, b) >= 0.0);
  }

  // Large time flattens toward 2/sqrt(2*pi*t) regardless of the points.
  const double t = 1e6;
  CHECK(kernel_value(t, 1.0, 2.0) ==
        doctest::Approx(kTwoOverSqrt2Pi / std::sqrt(t)).epsilon(1e-5));

  CHECK_THROWS_AS(kernel_value(0.0, 1.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(kernel_value(-1.0, 1.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(kernel_value(1.0, -0.5, 1.0), std::domain_error);
}

TEST_CASE("normal cdf and its antiderivative at pinned points") {
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(normal_cdf(1.0) == doctest::Approx(kPhiOne).epsilon(1e-14));
  CHECK(normal_cdf(-1.0) == doctest::Approx(1.0 - kPhiOne).epsilon(1e-14));
  // psi(z) = z Phi(z) + phi(z); psi(0) is the standard normal density at 0.
  CHECK(normal_psi(0.0) == doctest::Approx(kPhiOfZeroDensity).epsilon(1e-14));
  // psi(z) - psi(-z) = z is an exact identity.
  for (double z : {0.3, 1.0, 2.5}) {
    CHECK(normal_psi(z) - normal_psi(-z) == doctest::Approx(z).epsilon(1e-13));
  }
}

TEST_CASE("step planning reserves room for the diffusion tail") {
  MassProfile u;
  u.cell_width = 1.0 / 64.0;
  u.values.assign(64, 1.0);
  const double t = 0.25;
  const HeatStepPlan plan = plan_heat_step(u, t);
  plan.validate();
  CHECK(plan.target_grid.max_radius >= u.support_end() + 6.0 * std::sqrt(t) - 1e-12);
  CHECK(plan.target_grid.cell_width == u.cell_width);

  // A cap below the required reach is rejected outright.
  CHECK_THROWS_AS(plan_heat_step(u, t, u.support_end() + 0.5), ConfigurationError);
  CHECK_THROWS_AS(plan_heat_step(u, 0.0), std::domain_error);
}

TEST_CASE("a diffused origin atom has the half-normal tail") {
  MassProfile u;
  u.atom = 1.0;
  u.cell_width = 1.0 / 256.0;
  const MassProfile out = heat_step(u, 0.5);
  CHECK(out.atom == 0.0);
  // Breakpoint tails of the output are exact Gaussian integrals, so the
  // value at r = 1 is pinned to full precision (truncation < 1e-12).
  CHECK(tail_mass(out, 1.0) == doctest::Approx(kTailAtOneHalfTime).epsilon(1e-9));
  CHECK(total_mass(out) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("diffusion conserves mass and kills the atom") {
  Xoshiro256pp rng(22);
  for (int rep = 0; rep < 30; ++rep) {
    const MassProfile u = testgen::random_profile(rng, 1.0 / 64.0, 1.5);
    const double t = testgen::uniform_in(rng, 0.01, 0.3);
    const MassProfile out = heat_step(u, t);
    CHECK(out.atom == 0.0);
    CHECK(std::abs(total_mass(out) - total_mass(u)) <= 1e-8 * total_mass(u));
  }
}

TEST_CASE("two half steps compose into one full step") {
  MassProfile u;
  u.cell_width = 1.0 / 256.0;
  u.values.assign(256, 1.0);  // block on [0, 1]
  u.atom = 0.25;
  const MassProfile direct = heat_step(u, 0.25);
  const MassProfile composed = heat_step(heat_step(u, 0.125), 0.125);
  // The only error source is the piecewise-constant projection between the
  // two half steps, which is second order in the cell width; measured around
  // 4e-6 at this resolution.
  CHECK(l1_distance(direct, composed) <= 2e-5);
}

TEST_CASE("diffusion is an L1 contraction") {
  Xoshiro256pp rng(23);
  for (int rep = 0; rep < 25; ++rep) {
    const MassProfile u = testgen::random_profile(rng, 1.0 / 64.0, 1.5);
    const MassProfile v = testgen::random_profile(rng, 1.0 / 64.0, 1.5);
    const double t = testgen::uniform_in(rng, 0.01, 0.2);
    CHECK(l1_distance(heat_step(u, t), heat_step(v, t)) <=
          l1_distance(u, v) + 1e-8);
  }
}

TEST_CASE("diffusion preserves the transport order, with and without headroom") {
  Xoshiro256pp rng(24);
  for (int rep = 0; rep < 25; ++rep) {
    const double t = testgen::uniform_in(rng, 0.01, 0.2);
    {
      const auto [u, v] = testgen::ordered_pair(rng, 1.0 / 64.0, 1.5);
      CHECK(order_gap(heat_step(u, t), heat_step(v, t)) <= 1e-10);
    }
    {
      // Unordered pair: the worst tail excess never grows under diffusion.
      const MassProfile u = testgen::random_profile(rng, 1.0 / 64.0, 1.5);
      const MassProfile v = testgen::random_profile(rng, 1.0 / 64.0, 1.5);
      const double m = std::max(order_gap(u, v), 0.0);
      CHECK(order_gap(heat_step(u, t), heat_step(v, t)) <= m + 1e-10);
    }
  }
}

TEST_CASE("diffusion output is deterministic") {
  Xoshiro256pp rng(25);
  const MassProfile u = testgen::random_profile(rng, 1.0 / 64.0, 1.5);
  const MassProfile a = heat_step(u, 0.07);
  const MassProfile b = heat_step(u, 0.07);
  REQUIRE(a.values.size() == b.values.size());
  for (std::size_t i = 0; i < a.values.size(); ++i) CHECK(a.values[i] == b.values[i]);
}

}  // TEST_SUITE
