#pragma once

#include <string>
#include <vector>

#include "popdyn/finite_sim.hpp"
#include "popdyn/game.hpp"
#include "popdyn/meanfield.hpp"
#include "popdyn/protocols.hpp"

namespace popdyn {

/// Storage function S(p, x) = lse(p) - p'x + eta KL(x || theta): the gap of
/// the regularized objective to its maximum, so S >= 0 with S = 0 exactly at
/// x = C(p), and grad_p S = C(p) - x. Gradients in x are taken at the
/// interior-clamped point (1 - clamp) x + clamp/n.
struct StorageSpec {
  double eta;
  SimplexVector theta;
  double interior_clamp = 1e-9;
};

/// Antistorage candidate L(q, x) =
///   sum_i [ R_i tanh(alpha_i q_i/2) x_i^{beta_i+1}/(beta_i+1) - w_i x_i ] + offset,
/// which satisfies grad_x L = F(q,x) - w by construction. The decrease
/// condition grad_q'L (w - F) <= 0 is NOT guaranteed and is reported by
/// check_premises instead of assumed.
struct AntistorageSpec {
  GameParams game;
  double offset;  // sum_i w_i keeps L >= 0 on the simplex

  static AntistorageSpec for_game(const GameParams& g);
};

struct StorageEval {
  double value;
  Vec grad_p;
  Vec grad_x;
};
StorageEval storage_S(const PayoffVector& p, const Vec& x, const StorageSpec& spec);

struct AntistorageEval {
  double value;
  Vec grad_q;
  Vec grad_x;
};
AntistorageEval antistorage_L(const Vec& q, const Vec& x, const AntistorageSpec& spec);

/// Integrand of the noise bound (payoffs are job levels, so q = p):
///   -2 lambda (eps+v)'w~ + lambda (lambda grad_x S + F - w)'(eps+v)
///   + (grad_q L - lambda V)'w~.
double g_lambda(const PayoffVector& p, const Vec& x_hat, const Vec& w_tilde, const Vec& eps,
                const Vec& v, double lambda, const StorageSpec& storage,
                const AntistorageSpec& anti);

struct PremisePoint {
  PayoffVector p;
  Vec x;
  Vec q;
};
struct PremiseReport {
  double worst_19a;  // max of grad_x'S V + eta V'V (<= 0 means satisfied)
  double worst_20a;  // max of grad_q'L (w - F)     (<= 0 means satisfied)
};
PremiseReport check_premises(const std::vector<PremisePoint>& samples,
                             const StorageSpec& storage, const AntistorageSpec& anti);

inline constexpr double kPremiseTol = 1e-9;

struct BoundReport {
  double lhs = 0.0;           // integral of |C(p) - X^|_2^2
  double rhs = 0.0;           // (lambda^2 eta)^{-1} (alpha + integral |g|)
  double alpha_lambda = 0.0;  // lambda S(0) + L(0)
  double worst_19a = 0.0;
  double worst_20a = 0.0;
  double resolution_gap = 0.0;
  bool premise_19a_ok = false;
  bool premise_20a_ok = false;
  bool holds = false;
};

/// Dense paired trajectory the checker integrates over. For noise-free
/// mean-field runs eps is empty (zero) and p_hat_delayed = p.
struct BoundInput {
  std::vector<double> t;
  std::vector<Vec> q;
  std::vector<Vec> x_hat;
  std::vector<Vec> x_step;
  std::vector<PayoffVector> p_hat_delayed;
  std::vector<Vec> eps;
};

BoundInput bound_input_from_meanfield(const MeanFieldTrajectory& traj);

/// Replays a finite run: X^/X from the event log, the common estimate stream
/// is the population-mean estimate with the same floor(t) - d rule the
/// simulator uses, and eps is extracted per segment. Grid points at arrival
/// times or past the last arrival are dropped. With exact_payoff the run had
/// no estimation layer, so the delayed estimate is the payoff itself.
BoundInput bound_input_from_finite(const JumpTrajectory& traj, double eta,
                                   const SimplexVector& theta, bool exact_payoff = false);

/// Trapezoid evaluation of the noise bound plus premise diagnostics.
/// Throws InsufficientResolution when coarsening the grid by 2 shifts either
/// integral by >= 1%.
BoundReport check_theorem1(const BoundInput& input, double lambda, double eta,
                           const StorageSpec& storage, const AntistorageSpec& anti);

std::string bound_report_json(const BoundReport& report);

}  // namespace popdyn
