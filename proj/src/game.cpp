#include "popdyn/game.hpp"

#include <algorithm>
#include <cmath>

namespace popdyn {

void GameParams::validate() const {
  const std::size_t m = n();
  if (m < 2) throw ConfigError("game: need at least 2 tasks");
  if (R.size() != m || alpha.size() != m || beta.size() != m)
    throw ConfigError("game: R, alpha, beta, w must have equal length");
  double feas = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (!(R[i] > 0.0) || !(alpha[i] > 0.0) || !(w[i] > 0.0))
      throw ConfigError("game: R, alpha, w must be positive");
    if (!(beta[i] > 0.0 && beta[i] < 1.0))
      throw ConfigError("game: beta must lie in (0,1)");
    feas += std::pow(w[i] / R[i], 1.0 / beta[i]);
  }
  if (!(feas < 1.0))
    throw ConfigError("game: infeasible parameters, sum_i (w_i/R_i)^{1/beta_i} = " +
                      std::to_string(feas) + " >= 1 (no interior equilibrium)");
}

GameParams GameParams::reference() {
  GameParams g;
  g.R = {3.44, 3.44, 3.44};
  g.alpha = {0.036, 0.036, 0.036};
  g.beta = {0.91, 0.91, 0.91};
  g.w = {0.5, 1.0, 2.0};
  return g;
}

JobState::JobState(Vec values) : q(std::move(values)) {
  for (double e : q)
    if (!(e >= 0.0) || !std::isfinite(e))
      throw std::invalid_argument("JobState: entries must be finite and nonnegative");
}

double completion_rate(double q_i, double x_i, const GameParams& params, std::size_t i) {
  if (q_i < 0.0) throw std::domain_error("completion_rate: negative job state");
  if (x_i < 0.0 || x_i > 1.0) throw std::domain_error("completion_rate: x_i outside [0,1]");
  if (q_i == 0.0 || x_i == 0.0) return 0.0;
  // tanh form of (e^{aq}-1)/(e^{aq}+1); immune to overflow at large a*q
  return params.R[i] * std::tanh(0.5 * params.alpha[i] * q_i) * std::pow(x_i, params.beta[i]);
}

Vec q_rhs(const Vec& q, const SimplexVector& x, const GameParams& params) {
  const std::size_t n = params.n();
  Vec dq(n);
  for (std::size_t i = 0; i < n; ++i)
    dq[i] = -completion_rate(q[i], x[i], params, i) + params.w[i];
  return dq;
}

Vec q_rhs_raw(const Vec& q, const Vec& x, const GameParams& params) {
  const std::size_t n = params.n();
  Vec dq(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double qi = std::max(q[i], 0.0);
    const double xi = std::clamp(x[i], 0.0, 1.0);
    dq[i] = -completion_rate(qi, xi, params, i) + params.w[i];
  }
  return dq;
}

namespace {

/// x*_i consistent with a common job level: F_i(q_bar, x_i) = w_i.
double allocation_at(const GameParams& g, double q_bar, std::size_t i) {
  return std::pow(g.w[i] / (g.R[i] * std::tanh(0.5 * g.alpha[i] * q_bar)), 1.0 / g.beta[i]);
}

double simplex_excess(const GameParams& g, double q_bar) {
  double s = 0.0;
  for (std::size_t i = 0; i < g.n(); ++i) s += allocation_at(g, q_bar, i);
  return s - 1.0;
}

}  // namespace

Equilibrium solve_equilibrium(const GameParams& params) {
  const std::size_t n = params.n();
  constexpr double kQMax = 1e6;

  // h is strictly decreasing; find a bracket with a sign change.
  double lo = 1e-9;
  while (!(simplex_excess(params, lo) > 0.0)) {
    lo *= 0.5;
    if (lo < 1e-300) throw NoEquilibrium("solve_equilibrium: h(0+) not positive");
  }
  double hi = 1.0;
  while (simplex_excess(params, hi) > 0.0) {
    hi *= 2.0;
    if (hi > kQMax)
      throw NoEquilibrium("solve_equilibrium: no sign change of h on (0, 1e6]");
  }

  for (int it = 0; it < 200 && (hi - lo) > 1e-13 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (simplex_excess(params, mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  const double q_bar = 0.5 * (lo + hi);

  Vec xs(n);
  for (std::size_t i = 0; i < n; ++i) xs[i] = allocation_at(params, q_bar, i);
  Equilibrium eq{Vec(n, q_bar), SimplexVector(xs), q_bar};

  for (std::size_t i = 0; i < n; ++i) {
    const double resid = std::abs(completion_rate(q_bar, eq.x_star[i], params, i) - params.w[i]);
    if (resid > 1e-10)
      throw NoEquilibrium("solve_equilibrium: residual " + std::to_string(resid) +
                          " exceeds 1e-10 at task " + std::to_string(i));
  }
  return eq;
}

}  // namespace popdyn
