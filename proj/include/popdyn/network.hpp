#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "popdyn/core.hpp"
#include "popdyn/rng.hpp"

namespace popdyn {

/// Directed communication graph; in_neighbors[k] are the agents whose
/// estimates k averages (self excluded).
struct CommGraph {
  std::size_t n_agents = 0;
  std::vector<std::vector<std::uint32_t>> in_neighbors;
  std::uint64_t sample_attempts = 0;

  bool strongly_connected() const;
  std::string edge_list() const;  // "src dst" per line, 1-based
};

/// Erdos-Renyi digraph: each ordered pair is an edge with probability prob,
/// rejection-resampled until strongly connected. Throws
/// GraphSamplingExhausted after 1e5 rejections.
CommGraph sample_er_digraph(std::size_t n_agents, double prob, Rng& rng);

/// Per-agent payoff estimates updated at integer times plus a ring of the
/// last (delay+1) snapshots. Observers copy the true payoff; everyone else
/// averages in-neighbor estimates from the previous step (Jacobi update).
class EstimateBank {
 public:
  EstimateBank(std::size_t n_agents, std::size_t n_strategies, int delay,
               std::vector<std::uint32_t> observers);

  /// Synchronous consensus update at the next integer time.
  void advance(const CommGraph& graph, const PayoffVector& p_true, bool include_self = false);

  /// Overwrites the current estimates without touching the history ring.
  void set_estimates(std::vector<PayoffVector> estimates);

  const PayoffVector& estimate(std::size_t agent) const { return current_[agent]; }

  /// Estimate of `agent` as of integer time (now - d); pre-update initial
  /// zeros when now - d < 0. `now` must be the last advanced time.
  PayoffVector delayed_estimate(std::size_t agent, long now, int d) const;

  PayoffVector mean_estimate() const;

  long now() const { return now_; }
  const std::vector<std::uint32_t>& observers() const { return observers_; }
  std::size_t n_agents() const { return current_.size(); }

 private:
  std::vector<PayoffVector> current_;
  std::vector<std::vector<PayoffVector>> ring_;  // [slot][agent], slot = time % (delay+1)
  std::vector<long> ring_time_;
  std::vector<std::uint32_t> observers_;
  std::vector<bool> is_observer_;
  int delay_;
  long now_ = -1;  // no update yet
};

/// Functional wrapper matching the protocol description.
inline void consensus_step(EstimateBank& bank, const CommGraph& graph,
                           const PayoffVector& p_true, bool include_self = false) {
  bank.advance(graph, p_true, include_self);
}

inline PayoffVector delayed_estimate(const EstimateBank& bank, std::size_t agent, long now,
                                     int d) {
  return bank.delayed_estimate(agent, now, d);
}

}  // namespace popdyn
