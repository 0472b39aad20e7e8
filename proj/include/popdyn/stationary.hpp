#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "popdyn/core.hpp"
#include "popdyn/rng.hpp"

namespace popdyn {

/// All head-count states of N agents over n strategies, lexicographic.
/// There are binomial(N+n-1, n-1) of them.
struct StateSpace {
  std::size_t N = 0;
  std::size_t n = 0;
  std::vector<std::vector<int>> states;

  std::size_t index_of(const std::vector<int>& counts) const;
  std::size_t size() const { return states.size(); }
};

StateSpace enumerate_states(std::size_t N, std::size_t n);

/// Sparse row-stochastic transition matrix of the revision jump chain when
/// every reviser samples from x*: mass (x_i x*_j) on the single-switch move
/// i -> j, self-loop mass sum_i x_i x*_i.
struct ChainEntry {
  std::uint32_t to;
  double prob;
};
struct JumpChain {
  std::size_t n_states = 0;
  std::vector<std::vector<ChainEntry>> rows;
};

JumpChain build_chain(const SimplexVector& xstar, const StateSpace& space);

enum class StationaryMethod { kAuto, kDense, kPower };

/// mu with mu'P = mu', sum mu = 1; dense linear solve up to 1e4 states,
/// power iteration above. Throws NotConverged if the balance residual stays
/// above 1e-10.
Vec stationary_distribution(const JumpChain& chain, StationaryMethod method = StationaryMethod::kAuto);

struct StationaryReport {
  Vec mu;
  Vec mean;
  double sum_var = 0.0;
  double residual = 0.0;  // |mu'P - mu'|_inf
};

StationaryReport stationary_analysis(const SimplexVector& xstar, const StateSpace& space);

/// mean = sum_x mu_x x, sum_var = sum_x mu_x |x - mean|_2^2.
std::pair<Vec, double> stationary_moments(const Vec& mu, const StateSpace& space);

struct McMoments {
  Vec mean;
  Vec mean_stderr;
  double sum_var = 0.0;
  double sum_var_stderr = 0.0;
  std::size_t batches = 0;
};

/// Simulates the jump chain, discards burn_in steps, then estimates both
/// moments with batch-means standard errors.
McMoments monte_carlo_moments(const SimplexVector& xstar, std::size_t N, std::size_t burn_in,
                              std::size_t n_samples, Rng& rng);

std::string stationary_report_json(const StationaryReport& r);

}  // namespace popdyn
