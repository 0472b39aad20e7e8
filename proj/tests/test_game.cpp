#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "popdyn/game.hpp"
#include "popdyn/protocols.hpp"
#include "popdyn/rng.hpp"

using namespace popdyn;

TEST_CASE("completion rate boundary cases") {
  const GameParams g = GameParams::reference();
  CHECK(completion_rate(0.0, 0.5, g, 0) == 0.0);
  CHECK(completion_rate(100.0, 0.0, g, 1) == 0.0);
  CHECK_THROWS_AS(completion_rate(-1.0, 0.5, g, 0), std::domain_error);
  CHECK_THROWS_AS(completion_rate(1.0, 1.5, g, 0), std::domain_error);
}

TEST_CASE("completion rate near the worked equilibrium") {
  // R tanh(0.036*94.2/2) * 0.2771^0.91 evaluates to roughly the growth rate 1
  const GameParams g = GameParams::reference();
  CHECK(completion_rate(94.2, 0.2771, g, 1) == doctest::Approx(1.00023662477).epsilon(1e-9));
}

TEST_CASE("completion rate matches the exponential form and saturates") {
  const GameParams g = GameParams::reference();
  Rng rng(31, 0);
  for (int it = 0; it < 300; ++it) {
    const double q = 500.0 * rng.uniform01();
    const double x = rng.uniform01();
    const double direct =
        g.R[0] * (std::exp(g.alpha[0] * q) - 1.0) / (std::exp(g.alpha[0] * q) + 1.0) *
        std::pow(x, g.beta[0]);
    CHECK(completion_rate(q, x, g, 0) == doctest::Approx(direct).epsilon(1e-12));
    CHECK(completion_rate(q, x, g, 0) <= g.R[0]);
  }
  CHECK(std::isfinite(completion_rate(1e6, 1.0, g, 0)));  // tanh form cannot overflow
}

TEST_CASE("completion rate is monotone in q and x") {
  const GameParams g = GameParams::reference();
  Rng rng(37, 0);
  for (int it = 0; it < 300; ++it) {
    const double q = 300.0 * rng.uniform01();
    const double x = rng.uniform01();
    const double dq = 10.0 * rng.uniform01();
    const double dx = (1.0 - x) * rng.uniform01();
    CHECK(completion_rate(q + dq, x, g, 2) >= completion_rate(q, x, g, 2));
    CHECK(completion_rate(q, x + dx, g, 2) >= completion_rate(q, x, g, 2));
  }
}

TEST_CASE("q rhs hand values") {
  const GameParams g = GameParams::reference();
  const SimplexVector unif = SimplexVector::uniform(3);
  CHECK(q_rhs({0, 0, 0}, unif, g) == g.w);

  // direct evaluation at the worked initial condition
  const Vec dq = q_rhs({100, 200, 300}, unif, g);
  CHECK(dq[0] == doctest::Approx(-0.698502952084).epsilon(1e-9));
  CHECK(dq[1] == doctest::Approx(-0.263949214863).epsilon(1e-9));
  CHECK(dq[2] == doctest::Approx(0.734213725841).epsilon(1e-9));
}

TEST_CASE("q rhs saturation bound") {
  const GameParams g = GameParams::reference();
  Rng rng(41, 0);
  for (int it = 0; it < 300; ++it) {
    Vec q(3), x(3);
    double sum = 0.0;
    for (int i = 0; i < 3; ++i) {
      q[i] = 400.0 * rng.uniform01();
      x[i] = 0.01 + rng.uniform01();
      sum += x[i];
    }
    for (double& e : x) e /= sum;
    const Vec dq = q_rhs(q, SimplexVector(x), g);
    for (int i = 0; i < 3; ++i) CHECK(dq[i] >= g.w[i] - g.R[i] - 1e-12);
  }
}

TEST_CASE("equilibrium for the reference game") {
  const Equilibrium eq = solve_equilibrium(GameParams::reference());
  // frozen from a 30-digit bisection oracle on the scalar reduction
  CHECK(eq.q_bar == doctest::Approx(94.100744036073895).epsilon(1e-10));
  CHECK(eq.x_star[0] == doctest::Approx(0.12937089522223508).epsilon(1e-9));
  CHECK(eq.x_star[1] == doctest::Approx(0.27710143602294351).epsilon(1e-9));
  CHECK(eq.x_star[2] == doctest::Approx(0.59352766875482141).epsilon(1e-9));
  for (int i = 0; i < 3; ++i) {
    CHECK(eq.q_star[i] == eq.q_bar);
    CHECK(std::abs(completion_rate(eq.q_bar, eq.x_star[i], GameParams::reference(), i) -
                   GameParams::reference().w[i]) < 1e-10);
  }
  CHECK(eq.x_star.strictly_positive());
}

TEST_CASE("equilibrium rest point of q rhs") {
  const GameParams g = GameParams::reference();
  const Equilibrium eq = solve_equilibrium(g);
  const Vec dq = q_rhs(eq.q_star, eq.x_star, g);
  for (double e : dq) CHECK(std::abs(e) < 1e-9);
}

TEST_CASE("symmetric game yields the uniform split") {
  GameParams g;
  g.R = {3.0, 3.0, 3.0};
  g.alpha = {0.05, 0.05, 0.05};
  g.beta = {0.5, 0.5, 0.5};
  g.w = {1.0, 1.0, 1.0};
  const Equilibrium eq = solve_equilibrium(g);
  for (int i = 0; i < 3; ++i) CHECK(eq.x_star[i] == doctest::Approx(1.0 / 3).epsilon(1e-12));
}

TEST_CASE("choice map fixes x* at the equilibrium payoffs") {
  const Equilibrium eq = solve_equilibrium(GameParams::reference());
  for (double eta : {0.001, 0.04, 10.0}) {
    const SimplexVector c = kld_rl_choice(eq.q_star, eta, eq.x_star);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(c[i] - eq.x_star[i]) < 1e-10);
  }
}

TEST_CASE("infeasible parameters are rejected") {
  GameParams g = GameParams::reference();
  g.w = {2.0, 2.0, 2.0};  // sum (w/R)^{1/beta} > 1
  CHECK_THROWS_AS(g.validate(), ConfigError);
  CHECK_THROWS_AS(solve_equilibrium(g), NoEquilibrium);
}

TEST_CASE("job state validation") {
  CHECK_NOTHROW(JobState({0.0, 5.0}));
  CHECK_THROWS(JobState({-0.1, 5.0}));
}
