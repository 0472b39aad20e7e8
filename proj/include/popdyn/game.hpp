#pragma once

#include "popdyn/core.hpp"

namespace popdyn {

/// Task-allocation game parameters: per task i, jobs complete at rate
/// R_i tanh(alpha_i q_i / 2) x_i^{beta_i} and arrive at rate w_i.
struct GameParams {
  Vec R;      // jobs/time
  Vec alpha;  // 1/jobs
  Vec beta;   // in (0,1)
  Vec w;      // jobs/time

  std::size_t n() const { return w.size(); }
  void validate() const;

  /// The worked example: n = 3, R = 3.44, alpha = 0.036, beta = 0.91,
  /// w = (0.5, 1, 2).
  static GameParams reference();
};

/// Remaining jobs per task, nonnegative.
struct JobState {
  Vec q;
  explicit JobState(Vec values);
};

struct Equilibrium {
  Vec q_star;            // all entries equal q_bar
  SimplexVector x_star;  // strictly positive
  double q_bar;
};

/// Completion rate F_i(q_i, x_i) = R_i tanh(alpha_i q_i / 2) x_i^{beta_i};
/// exactly 0 when q_i = 0 or x_i = 0.
double completion_rate(double q_i, double x_i, const GameParams& params, std::size_t i);

/// Job-state velocity (-F_i(q_i, x_i) + w_i)_i. Payoffs are read as p = q.
Vec q_rhs(const Vec& q, const SimplexVector& x, const GameParams& params);

/// Integrator variant: clamps q below at 0 and x into [0,1] before
/// evaluating, so RK4 stage values cannot trip the domain checks.
Vec q_rhs_raw(const Vec& q, const Vec& x, const GameParams& params);

/// Noise-free equilibrium with theta = x*: all q*_i equal a common level
/// q_bar (the choice map fixes x* only at equal payoffs), reducing the
/// equilibrium condition F_i(q_bar, x*_i) = w_i to a scalar root problem
/// solved by bisection on h(q_bar) = sum_i (w_i / (R_i tanh(alpha_i q_bar/2)))^{1/beta_i} - 1.
Equilibrium solve_equilibrium(const GameParams& params);

}  // namespace popdyn
