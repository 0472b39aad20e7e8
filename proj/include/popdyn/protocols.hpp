#pragma once

#include <utility>
#include <variant>

#include <Eigen/Dense>

#include "popdyn/core.hpp"

namespace popdyn {

/// Pairwise-comparison protocol: switch j -> i with probability
/// varrho * max(p_i - p_j, 0).
struct SmithSpec {
  double varrho;
};

/// Softmax choice map anchored at a reference distribution theta with
/// temperature eta; the maximizer of z'p - eta * KL(z || theta) over the
/// simplex.
struct KldRlSpec {
  double eta;
  SimplexVector theta;
};

using ProtocolSpec = std::variant<SmithSpec, KldRlSpec>;

ProtocolSpec make_smith(double varrho);
ProtocolSpec make_kld_rl(double eta, SimplexVector theta);

/// varrho guaranteeing valid Smith rows for payoffs in [0, m_q].
double smith_varrho_for(std::size_t n, double m_q);

/// Row j of the Smith protocol. Throws if the off-diagonal mass exceeds 1
/// (varrho too large for the observed payoff gaps).
SimplexVector smith_row(const PayoffVector& p, std::size_t j, double varrho);

/// eta * ln(sum_j theta_j exp(p_j / eta)), max-subtracted so that
/// |p|_inf / eta up to 1e6 cannot overflow.
double lse(const PayoffVector& p, double eta, const SimplexVector& theta);

SimplexVector kld_rl_choice(const PayoffVector& p, double eta, const SimplexVector& theta);

/// Oracle check that the closed-form choice map attains the regularized
/// maximum: z'p - eta KL(z||theta) <= value at the choice map, + 1e-9 slack.
bool kld_rl_argmax_check(const PayoffVector& p, double eta, const SimplexVector& theta,
                         const SimplexVector& z);

Vec lse_gradient(const PayoffVector& p, double eta, const SimplexVector& theta);
Eigen::MatrixXd lse_hessian(const PayoffVector& p, double eta, const SimplexVector& theta);

/// (lhs, rhs) of the choice-map Lipschitz bound:
/// |C(p) - C(p_hat)|_2 <= eta^{-1} |p - p_hat|_2.
std::pair<double, double> lipschitz_gap(const PayoffVector& p, const PayoffVector& phat,
                                        double eta, const SimplexVector& theta);

/// Unit-rate mean switch field V_i = sum_j x_j rho_ji - x_i sum_j rho_ij.
/// For KLD-RL this is exactly C(p) - x. Components sum to 0.
Vec edm_velocity(const PayoffVector& p, const SimplexVector& x, const ProtocolSpec& spec);

/// Unvalidated variant for integrator stage values, which may sit a few ulp
/// off the simplex.
Vec edm_velocity_raw(const PayoffVector& p, const Vec& x, const ProtocolSpec& spec);

}  // namespace popdyn
