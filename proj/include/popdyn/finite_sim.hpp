#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "popdyn/game.hpp"
#include "popdyn/network.hpp"
#include "popdyn/protocols.hpp"
#include "popdyn/rng.hpp"

namespace popdyn {

struct SimConfig {
  std::size_t N = 10;
  ProtocolSpec protocol = SmithSpec{1.0 / 600.0};
  double lambda = 0.1;   // per-agent revision rate
  int delay = 0;         // estimate delay, integer multiples of the update period
  double horizon = 1000.0;
  double ode_step = 0.01;
  double sample_cadence = 0.5;
  GameParams game = GameParams::reference();
  Vec q0 = {100.0, 200.0, 300.0};
  double graph_prob = 0.2;
  double observer_fraction = 0.1;
  bool include_self = false;
  bool exact_payoff = false;  // bypass estimation: revisers read p(t) = q(t) directly
  RngSpec rng;
  std::optional<std::vector<int>> initial_counts;  // default: uniform-random per agent
  bool record_events = true;

  void validate() const;
};

struct JumpEvent {
  double t;
  std::uint32_t agent;
  std::uint16_t from;
  std::uint16_t to;
};

struct JumpTrajectory {
  std::size_t N = 0;
  std::size_t n = 0;
  double horizon = 0.0;
  double lambda = 0.0;
  int delay = 0;
  std::vector<int> initial_counts;
  std::vector<JumpEvent> events;               // every arrival, self-picks included
  std::vector<TrajectorySample> samples;       // fixed cadence
  std::vector<PayoffVector> mean_estimate_log; // population-mean estimate at t = 0,1,...
  std::uint64_t arrivals = 0;                  // total, independent of record_events
  std::uint64_t graph_attempts = 0;
};

JumpTrajectory run_finite(const SimConfig& config);

/// One-revision transition law: from counts x, mass (x_i rho_ij) moves one
/// agent from i to j, the rest stays put. `row_for(i)` supplies the
/// protocol row of a reviser currently playing i.
struct TransitionMass {
  std::vector<int> counts;
  double prob;
};
std::vector<TransitionMass> transition_row(
    const CountVector& x, const std::function<SimplexVector(std::size_t)>& row_for);

/// Piecewise view of the jump path: the step state X(t), the linear
/// interpolation X^(t) between consecutive arrivals, and the per-segment
/// rate error epsilon. Built from initial counts plus the event log; a
/// virtual arrival at t = 0 anchors the first segment.
class InterpolatedPath {
 public:
  explicit InterpolatedPath(const JumpTrajectory& traj);

  Vec step_state(double t) const;
  Vec interpolated(double t) const;

  /// epsilon(t) = slope/lambda - (choice_delayed - X^(t)) for t strictly
  /// inside a segment; throws std::domain_error at arrival times (gap flag)
  /// and past the last arrival.
  Vec epsilon(double t, const Vec& choice_delayed, double lambda) const;

  double last_arrival() const { return times_.back(); }
  bool at_arrival(double t, double tol = 1e-12) const;

 private:
  std::size_t segment_index(double t) const;
  std::vector<double> times_;  // arrival times, leading 0
  std::vector<Vec> states_;    // post-event states
};

/// Modeling error F(q, x_hat) - F(q, x_step), the w~ channel.
Vec noise_w(const Vec& q, const Vec& x_hat, const Vec& x_step, const GameParams& params);

/// Estimation/delay error C(p_hat_delayed) - C(p), the v~ channel.
Vec noise_v(const PayoffVector& p, const PayoffVector& phat_delayed, double eta,
            const SimplexVector& theta);

}  // namespace popdyn
