#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "popdyn/finite_sim.hpp"
#include "popdyn/harness.hpp"
#include "popdyn/meanfield.hpp"

using namespace popdyn;

namespace {

SimConfig short_config(std::uint64_t seed, double horizon = 50.0) {
  SimConfig s;
  s.N = 10;
  s.lambda = 0.5;
  s.delay = 3;
  s.horizon = horizon;
  s.protocol = make_kld_rl(0.04, solve_equilibrium(GameParams::reference()).x_star);
  s.rng = RngSpec{"xoshiro256++", seed, 0};
  return s;
}

}  // namespace

TEST_CASE("transition row examples") {
  // no switching: identity rows keep all mass in place
  const CountVector x({4, 3, 3}, 10);
  auto identity_rows = [](std::size_t i) {
    Vec row(3, 0.0);
    row[i] = 1.0;
    return SimplexVector(row);
  };
  auto masses = transition_row(x, identity_rows);
  CHECK(masses.size() == 1);
  CHECK(masses.back().counts == x.counts());
  CHECK(masses.back().prob == doctest::Approx(1.0));

  // two strategies, everyone at the first, constant choice row
  const CountVector y({1, 0}, 1);
  auto choice_rows = [](std::size_t) { return SimplexVector({0.3, 0.7}); };
  masses = transition_row(y, choice_rows);
  REQUIRE(masses.size() == 2);
  CHECK(masses[0].counts == std::vector<int>{0, 1});
  CHECK(masses[0].prob == doctest::Approx(0.7));
  CHECK(masses[1].counts == y.counts());
  CHECK(masses[1].prob == doctest::Approx(0.3));

  // constant choice row aligned with the state: self-loop mass sum_i x_i c_i
  const CountVector z({3, 7}, 10);
  auto aligned = [](std::size_t) { return SimplexVector({0.3, 0.7}); };
  masses = transition_row(z, aligned);
  double total = 0.0, stay = 0.0;
  for (const auto& m : masses) {
    total += m.prob;
    if (m.counts == z.counts()) stay += m.prob;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(stay == doctest::Approx(0.3 * 0.3 + 0.7 * 0.7).epsilon(1e-12));
}

TEST_CASE("zero rate leaves the population frozen") {
  SimConfig s = short_config(1);
  s.lambda = 0.0;
  s.initial_counts = std::vector<int>{2, 3, 5};
  const JumpTrajectory traj = run_finite(s);
  CHECK(traj.arrivals == 0);
  CHECK(traj.events.empty());
  for (const auto& smp : traj.samples) CHECK(smp.x == Vec{0.2, 0.3, 0.5});
  // q follows the pure game flow: matches the mean-field integrator with
  // the same frozen allocation
  MeanFieldConfig m;
  m.protocol = s.protocol;
  m.lambda = 0.0;
  m.q0 = s.q0;
  m.x0 = SimplexVector({0.2, 0.3, 0.5});
  m.horizon = s.horizon;
  m.step = s.ode_step;
  m.sample_cadence = s.sample_cadence;
  const MeanFieldTrajectory mft = integrate_closed_loop(m);
  REQUIRE(mft.samples.size() == traj.samples.size());
  for (std::size_t k = 0; k < mft.samples.size(); ++k)
    for (int i = 0; i < 3; ++i)
      CHECK(traj.samples[k].q[i] == doctest::Approx(mft.samples[k].q[i]).epsilon(1e-9));
}

TEST_CASE("events conserve the population and move one agent") {
  const JumpTrajectory traj = run_finite(short_config(3, 100.0));
  CHECK(traj.arrivals > 0);
  std::vector<int> counts = traj.initial_counts;
  for (const auto& e : traj.events) {
    CHECK(e.from < 3);
    CHECK(e.to < 3);
    if (e.to != e.from) {
      --counts[e.from];
      ++counts[e.to];
    }
    int sum = 0;
    for (int c : counts) {
      CHECK(c >= 0);
      sum += c;
    }
    CHECK(sum == 10);
  }
  for (std::size_t k = 1; k < traj.events.size(); ++k)
    CHECK(traj.events[k].t > traj.events[k - 1].t);
}

TEST_CASE("identical configs reproduce byte-identical artifacts") {
  const JumpTrajectory a = run_finite(short_config(7));
  const JumpTrajectory b = run_finite(short_config(7));
  CHECK(trajectory_csv(a.samples, a.n) == trajectory_csv(b.samples, b.n));
  CHECK(events_csv(a.events) == events_csv(b.events));
  const JumpTrajectory c = run_finite(short_config(8));
  CHECK(trajectory_csv(a.samples, a.n) != trajectory_csv(c.samples, c.n));
}

TEST_CASE("arrival counts track the aggregate rate") {
  // mean N*lambda*T with sd sqrt(N*lambda*T); average z over seeds stays small
  double z_sum = 0.0;
  const int n_seeds = 10;
  for (std::uint64_t seed = 1; seed <= n_seeds; ++seed) {
    SimConfig s = short_config(seed, 200.0);
    const double expected = static_cast<double>(s.N) * s.lambda * s.horizon;
    const JumpTrajectory traj = run_finite(s);
    z_sum += (static_cast<double>(traj.arrivals) - expected) / std::sqrt(expected);
  }
  CHECK(std::abs(z_sum / n_seeds) < 3.0 / std::sqrt(static_cast<double>(n_seeds)));
}

TEST_CASE("interpolation endpoints, midpoint, and step gap") {
  const JumpTrajectory traj = run_finite(short_config(11, 100.0));
  REQUIRE(traj.events.size() >= 3);
  const InterpolatedPath path(traj);

  // endpoint: the value at an arrival is the post-jump state
  const double t1 = traj.events[0].t;
  const double t2 = traj.events[1].t;
  const Vec at_t1 = path.interpolated(t1);
  CHECK(at_t1 == path.step_state(t1));

  const Vec mid = path.interpolated(0.5 * (t1 + t2));
  const Vec s1 = path.step_state(t1);
  const Vec s2 = path.step_state(t2);
  for (int i = 0; i < 3; ++i)
    CHECK(mid[i] == doctest::Approx(0.5 * (s1[i] + s2[i])).epsilon(1e-12));

  // interpolated never strays more than one agent from the step path
  for (double t = 0.0; t < path.last_arrival(); t += 0.37) {
    const Vec xh = path.interpolated(t);
    const Vec xs = path.step_state(t);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(xh[i] - xs[i]) <= 1.0 / 10 + 1e-12);
  }
  CHECK_THROWS_AS(path.interpolated(path.last_arrival() + 1.0), std::domain_error);
}

TEST_CASE("epsilon reproduces the segment slope exactly") {
  const SimConfig cfg = short_config(13, 100.0);
  const JumpTrajectory traj = run_finite(cfg);
  const InterpolatedPath path(traj);
  const auto& kld = std::get<KldRlSpec>(cfg.protocol);

  int checked = 0;
  for (std::size_t k = 1; k + 1 < traj.events.size() && checked < 50; ++k) {
    const double t1 = traj.events[k].t, t2 = traj.events[k + 1].t;
    if (t2 - t1 < 1e-6) continue;
    const double t = t1 + 0.37 * (t2 - t1);
    const long slot = static_cast<long>(std::floor(t)) - traj.delay;
    PayoffVector phat(3, 0.0);
    if (slot >= 0) phat = traj.mean_estimate_log[static_cast<std::size_t>(slot)];
    const Vec choice = kld_rl_choice(phat, kld.eta, kld.theta).values();
    const Vec eps = path.epsilon(t, choice, cfg.lambda);
    const Vec xh = path.interpolated(t);
    const Vec s1 = path.step_state(t1), s2 = path.step_state(t2);
    for (int i = 0; i < 3; ++i) {
      // identity: lambda (choice - xh) + lambda eps == finite difference
      const double fd = (s2[i] - s1[i]) / (t2 - t1);
      CHECK(cfg.lambda * (choice[i] - xh[i]) + cfg.lambda * eps[i] ==
            doctest::Approx(fd).epsilon(1e-10));
      // boundedness from the jump size and the simplex
      CHECK(std::abs(eps[i]) <= 1.0 / (cfg.lambda * (t2 - t1)) + 2.0);
    }
    ++checked;
  }
  CHECK(checked > 10);
  CHECK_THROWS_AS(path.epsilon(traj.events[1].t, Vec(3, 0.0), cfg.lambda), std::domain_error);
}

TEST_CASE("noise channels") {
  const GameParams g = GameParams::reference();
  const Vec q{50, 80, 120};
  const Vec x{0.2, 0.3, 0.5};
  CHECK(noise_w(q, x, x, g) == Vec{0, 0, 0});
  CHECK(noise_w({0, 0, 0}, x, Vec{0.5, 0.3, 0.2}, g) == Vec{0, 0, 0});

  // single-coordinate interpolation gap, bounded by the direct difference
  Vec xh = x;
  xh[2] += 0.1;
  xh[0] -= 0.1;
  const Vec wt = noise_w(q, xh, x, g);
  for (int i = 0; i < 3; ++i) {
    const double cap = std::abs(completion_rate(q[i], xh[i], g, i) -
                                completion_rate(q[i], x[i], g, i));
    CHECK(std::abs(wt[i]) <= cap + 1e-15);
  }

  const SimplexVector theta({0.13, 0.28, 0.59});
  CHECK(noise_v(q, q, 0.7, theta) == Vec{0, 0, 0});
  const Vec v = noise_v(q, {49, 81, 118}, 1e6, theta);
  CHECK(norm2(v) <= 1e-6 * norm2(sub(q, {49, 81, 118})) + 1e-18);

  Rng rng(19, 0);
  for (int it = 0; it < 2000; ++it) {
    Vec p(3), ph(3), th(3);
    double sum = 0;
    for (int i = 0; i < 3; ++i) {
      p[i] = 200 * rng.uniform01();
      ph[i] = 200 * rng.uniform01();
      th[i] = 0.05 + rng.uniform01();
      sum += th[i];
    }
    for (double& e : th) e /= sum;
    const double eta = std::pow(10.0, -2.0 + 4.0 * rng.uniform01());
    const Vec dv = noise_v(p, ph, eta, SimplexVector(th));
    CHECK(norm2(dv) <= norm2(sub(p, ph)) / eta + 1e-12);
  }
}

TEST_CASE("exact payoff mode needs no communication layer") {
  SimConfig s = short_config(21);
  s.exact_payoff = true;
  const JumpTrajectory traj = run_finite(s);
  CHECK(traj.mean_estimate_log.empty());
  CHECK(traj.graph_attempts == 0);
  CHECK(traj.arrivals > 0);
}

TEST_CASE("config validation") {
  SimConfig s = short_config(1);
  s.ode_step = 0.5;
  CHECK_THROWS_AS(run_finite(s), ConfigError);
  s = short_config(1);
  s.delay = -1;
  CHECK_THROWS_AS(run_finite(s), ConfigError);
  s = short_config(1);
  s.initial_counts = std::vector<int>{5, 5, 5};
  CHECK_THROWS_AS(run_finite(s), ConfigError);
  s = short_config(1);
  s.q0 = {-1, 0, 0};
  CHECK_THROWS_AS(run_finite(s), ConfigError);
}

TEST_CASE("finite state matches the mean field when noise vanishes") {
  // median over seeds of the sup deviation shrinks as N grows
  const Equilibrium eq = solve_equilibrium(GameParams::reference());
  Vec medians;
  for (std::size_t N : {10, 40, 160}) {
    std::vector<double> devs;
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
      SimConfig s;
      s.N = N;
      s.lambda = 0.1;
      s.delay = 0;
      s.horizon = 100.0;
      s.exact_payoff = true;
      s.protocol = make_kld_rl(0.04, eq.x_star);
      s.rng = RngSpec{"xoshiro256++", seed, 0};
      const JumpTrajectory traj = run_finite(s);
      MeanFieldConfig m;
      m.protocol = s.protocol;
      m.lambda = s.lambda;
      m.q0 = s.q0;
      m.x0 = state_from_counts(CountVector(traj.initial_counts, static_cast<int>(N)));
      m.horizon = s.horizon;
      m.step = 0.01;
      m.sample_cadence = 0.5;
      const MeanFieldTrajectory mf = integrate_closed_loop(m);
      const InterpolatedPath path(traj);
      double worst = 0.0;
      for (const auto& smp : mf.samples) {
        const Vec xh = path.interpolated(std::min(smp.t, path.last_arrival()));
        for (int i = 0; i < 3; ++i) worst = std::max(worst, std::abs(xh[i] - smp.x[i]));
      }
      devs.push_back(worst);
    }
    medians.push_back(median(devs));
  }
  CHECK(medians[1] <= medians[0]);
  CHECK(medians[2] <= medians[1]);
}
