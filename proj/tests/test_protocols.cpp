#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "popdyn/protocols.hpp"
#include "popdyn/rng.hpp"

using namespace popdyn;

namespace {

SimplexVector random_theta(Rng& rng, std::size_t n, double floor = 0.02) {
  Vec t(n);
  double sum = 0.0;
  for (double& e : t) {
    e = floor + rng.exponential(1.0);
    sum += e;
  }
  for (double& e : t) e /= sum;
  return SimplexVector(t);
}

Vec random_payoff(Rng& rng, std::size_t n, double scale) {
  Vec p(n);
  for (double& e : p) e = scale * (2.0 * rng.uniform01() - 1.0);
  return p;
}

}  // namespace

TEST_CASE("smith row hand values") {
  const SimplexVector row = smith_row({2, 5}, 0, 0.1);
  CHECK(row[0] == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(row[1] == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(smith_row({5, 5, 5}, 1, 0.3).values() == Vec{0.0, 1.0, 0.0});
  CHECK(smith_row({5, 2}, 0, 0.1).values() == Vec{1.0, 0.0});
  CHECK_THROWS_AS(smith_row({0, 100}, 0, 0.02), std::domain_error);
}

TEST_CASE("smith rows are distributions up to the designed payoff cap") {
  const double m_q = 300.0;
  Rng rng(3, 0);
  for (int it = 0; it < 2000; ++it) {
    const std::size_t n = 2 + rng.uniform_below(4);
    const double varrho = smith_varrho_for(n, m_q);
    Vec p(n);
    for (double& e : p) e = m_q * rng.uniform01();
    for (std::size_t j = 0; j < n; ++j) {
      const SimplexVector row = smith_row(p, j, varrho);
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) sum += row[i];
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("lse hand values") {
  const SimplexVector unif = SimplexVector::uniform(3);
  CHECK(lse({0, 0, 0}, 0.7, unif) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(lse({3.2, 3.2, 3.2}, 0.05, SimplexVector({0.2, 0.3, 0.5})) ==
        doctest::Approx(3.2).epsilon(1e-13));
  // direct evaluation of eta ln(sum theta_j e^{p_j})
  CHECK(lse({1, 0, 0}, 1.0, unif) ==
        doctest::Approx(std::log((std::exp(1.0) + 2.0) / 3.0)).epsilon(1e-14));
}

TEST_CASE("lse survives extreme payoff to temperature ratios") {
  const SimplexVector unif = SimplexVector::uniform(3);
  const double v = lse({1e6, 0, 0}, 1.0, unif);
  CHECK(std::isfinite(v));
  CHECK(v == doctest::Approx(1e6 + std::log(1.0 / 3.0)).epsilon(1e-9));
  const double w = lse({1000, 0, 0}, 0.001, unif);
  CHECK(std::isfinite(w));
}

TEST_CASE("choice map hand values") {
  const SimplexVector theta({0.2, 0.3, 0.5});
  const SimplexVector c = kld_rl_choice({4.4, 4.4, 4.4}, 0.01, theta);
  for (int i = 0; i < 3; ++i) CHECK(c[i] == doctest::Approx(theta[i]).epsilon(1e-13));

  const SimplexVector unif = SimplexVector::uniform(3);
  const SimplexVector d = kld_rl_choice({1, 0, 0}, 1.0, unif);
  const double e = std::exp(1.0);
  CHECK(d[0] == doctest::Approx(e / (e + 2)).epsilon(1e-14));
  CHECK(d[1] == doctest::Approx(1 / (e + 2)).epsilon(1e-14));
  CHECK(d[2] == doctest::Approx(1 / (e + 2)).epsilon(1e-14));
}

TEST_CASE("large eta flattens the choice map onto theta") {
  const SimplexVector theta({0.13, 0.28, 0.59});
  const SimplexVector c = kld_rl_choice({1, 0, 0}, 1e6, theta);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(c[i] - theta[i]) < 1e-6);
}

TEST_CASE("choice map is shift invariant") {
  Rng rng(5, 0);
  for (int it = 0; it < 200; ++it) {
    const std::size_t n = 2 + rng.uniform_below(4);
    const SimplexVector theta = random_theta(rng, n);
    const Vec p = random_payoff(rng, n, 5.0);
    const double eta = 0.05 + 3.0 * rng.uniform01();
    const double shift = 10.0 * (rng.uniform01() - 0.5);
    Vec ps = p;
    for (double& e : ps) e += shift;
    const Vec a = kld_rl_choice(p, eta, theta).values();
    const Vec b = kld_rl_choice(ps, eta, theta).values();
    for (std::size_t i = 0; i < n; ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
  }
}

TEST_CASE("choice map solves the regularized maximization") {
  Rng rng(7, 0);
  const SimplexVector unif = SimplexVector::uniform(3);
  const SimplexVector c0 = kld_rl_choice({1, 0, 0}, 1.0, unif);
  CHECK(kld_rl_argmax_check({1, 0, 0}, 1.0, unif, c0));
  CHECK(kld_rl_argmax_check({1, 0, 0}, 1.0, unif, unif));

  for (int it = 0; it < 1000; ++it) {
    const std::size_t n = 2 + rng.uniform_below(4);
    const SimplexVector theta = random_theta(rng, n);
    const Vec p = random_payoff(rng, n, 4.0);
    const double eta = 0.1 + 2.0 * rng.uniform01();
    const SimplexVector z = random_theta(rng, n, 0.0);
    CHECK(kld_rl_argmax_check(p, eta, theta, z));
  }
}

TEST_CASE("lse gradient and hessian match finite differences") {
  Rng rng(13, 0);
  const double h = 1e-5;
  for (int it = 0; it < 100; ++it) {
    const std::size_t n = 2 + rng.uniform_below(3);
    const SimplexVector theta = random_theta(rng, n);
    const Vec p = random_payoff(rng, n, 2.0);
    const double eta = 0.5 + 4.0 * rng.uniform01();

    const Vec grad = lse_gradient(p, eta, theta);
    const Vec choice = kld_rl_choice(p, eta, theta).values();
    for (std::size_t i = 0; i < n; ++i) CHECK(grad[i] == choice[i]);  // same definition

    for (std::size_t i = 0; i < n; ++i) {
      Vec pp = p, pm = p;
      pp[i] += h;
      pm[i] -= h;
      const double fd = (lse(pp, eta, theta) - lse(pm, eta, theta)) / (2 * h);
      CHECK(std::abs(grad[i] - fd) / std::max(std::abs(fd), 1e-3) < 1e-6);
    }

    const Eigen::MatrixXd hess = lse_hessian(p, eta, theta);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k) {
        Vec pp = p, pm = p;
        pp[k] += h;
        pm[k] -= h;
        const double fd =
            (lse_gradient(pp, eta, theta)[i] - lse_gradient(pm, eta, theta)[i]) / (2 * h);
        CHECK(std::abs(hess(i, k) - fd) < 1e-6 * std::max(1.0, std::abs(fd)));
      }

    // rows sum to zero and the quadratic form is pinched into [0, 1/eta]
    for (std::size_t i = 0; i < n; ++i) {
      double row = 0.0;
      for (std::size_t k = 0; k < n; ++k) row += hess(i, k);
      CHECK(std::abs(row) < 1e-14);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hess);
    CHECK(es.eigenvalues().minCoeff() > -1e-12);
    CHECK(es.eigenvalues().maxCoeff() < 1.0 / eta + 1e-12);
  }
}

TEST_CASE("hessian quadratic form bound") {
  Rng rng(17, 0);
  for (int it = 0; it < 500; ++it) {
    const std::size_t n = 2 + rng.uniform_below(4);
    const SimplexVector theta = random_theta(rng, n);
    const Vec p = random_payoff(rng, n, 6.0);
    const double eta = 0.01 + 5.0 * rng.uniform01();
    const Eigen::MatrixXd hess = lse_hessian(p, eta, theta);
    Eigen::VectorXd v(n);
    for (std::size_t i = 0; i < n; ++i) v(static_cast<Eigen::Index>(i)) = 2 * rng.uniform01() - 1;
    const double quad = v.dot(hess * v);
    CHECK(quad >= -1e-12);
    CHECK(quad <= v.squaredNorm() / eta + 1e-12);
  }
}

TEST_CASE("lipschitz gap hand values and sweep") {
  const SimplexVector unif = SimplexVector::uniform(3);
  auto [l0, r0] = lipschitz_gap({2, 1, 0}, {2, 1, 0}, 0.7, unif);
  CHECK(l0 == 0.0);
  CHECK(r0 == 0.0);

  auto [l1, r1] = lipschitz_gap({1, 0, 0}, {0, 0, 0}, 1.0, unif);
  CHECK(l1 == doctest::Approx(0.29734790947518529).epsilon(1e-12));
  CHECK(r1 == doctest::Approx(1.0).epsilon(1e-15));

  Rng rng(23, 0);
  for (int it = 0; it < 10000; ++it) {
    const std::size_t n = 2 + rng.uniform_below(4);
    const SimplexVector theta = random_theta(rng, n);
    const double eta = std::pow(10.0, -3.0 + 6.0 * rng.uniform01());
    const Vec p = random_payoff(rng, n, 10.0);
    const Vec ph = random_payoff(rng, n, 10.0);
    auto [lhs, rhs] = lipschitz_gap(p, ph, eta, theta);
    CHECK(lhs <= rhs + 1e-12);
  }
}

TEST_CASE("edm velocity") {
  const SimplexVector unif = SimplexVector::uniform(3);
  const ProtocolSpec kld = make_kld_rl(0.8, unif);

  // rest point of the choice dynamic
  const SimplexVector c = kld_rl_choice({2, 1, 0}, 0.8, unif);
  const Vec v0 = edm_velocity({2, 1, 0}, c, kld);
  for (double e : v0) CHECK(std::abs(e) < 1e-15);

  const ProtocolSpec smith = make_smith(0.1);
  const Vec v1 = edm_velocity({5, 5}, SimplexVector({0.4, 0.6}), smith);
  CHECK(v1 == Vec{0.0, 0.0});

  const Vec v2 = edm_velocity({2, 5}, SimplexVector({1.0, 0.0}), smith);
  CHECK(v2[0] == doctest::Approx(-0.3).epsilon(1e-14));
  CHECK(v2[1] == doctest::Approx(0.3).epsilon(1e-14));
}

TEST_CASE("edm velocity components sum to zero") {
  Rng rng(29, 0);
  for (int it = 0; it < 300; ++it) {
    const std::size_t n = 2 + rng.uniform_below(4);
    const SimplexVector x = random_theta(rng, n, 0.0);
    const Vec p = random_payoff(rng, n, 3.0);
    const ProtocolSpec spec = (it % 2 == 0)
                                  ? make_kld_rl(0.3 + rng.uniform01(), random_theta(rng, n))
                                  : make_smith(smith_varrho_for(n, 10.0));
    const Vec v = edm_velocity(p, x, spec);
    double sum = 0.0;
    for (double e : v) sum += e;
    CHECK(std::abs(sum) < 1e-13);
  }
}

TEST_CASE("protocol spec validation") {
  CHECK_THROWS_AS(make_smith(-1.0), ConfigError);
  CHECK_THROWS_AS(make_kld_rl(0.0, SimplexVector::uniform(3)), ConfigError);
  CHECK_THROWS_AS(make_kld_rl(1.0, SimplexVector({1.0, 0.0})), ConfigError);
}
