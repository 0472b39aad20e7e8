#pragma once

#include <deque>
#include <vector>

#include "popdyn/game.hpp"
#include "popdyn/protocols.hpp"

namespace popdyn {

/// Sampled vector-valued signal with linear interpolation; empty means
/// identically zero. Used to inject recorded noise channels.
struct NoiseSeries {
  std::vector<double> t;
  std::vector<Vec> v;

  bool zero() const { return t.empty(); }
  Vec at(double time, std::size_t n) const;
};

struct MeanFieldConfig {
  ProtocolSpec protocol = SmithSpec{1.0 / 600.0};
  double lambda = 0.1;
  GameParams game = GameParams::reference();
  Vec q0 = {100.0, 200.0, 300.0};
  SimplexVector x0 = SimplexVector::uniform(3);
  double delay = 0.0;
  double horizon = 1000.0;
  double step = 0.01;
  double sample_cadence = 0.5;
  NoiseSeries epsilon;  // additive on x-dot, scaled by lambda
  NoiseSeries w_tilde;  // additive on q-dot

  void validate() const;
};

struct MeanFieldTrajectory {
  std::vector<TrajectorySample> samples;
  double max_simplex_drift = 0.0;  // worst |sum x - 1| seen before renormalizing
};

/// Ring of (time, payoff) covering the delay window, linear interpolation
/// between stored samples, constant pre-history before t = 0.
class HistoryBuffer {
 public:
  HistoryBuffer(double delay, Vec pre_history);
  void push(double t, Vec p);
  Vec at(double t) const;

 private:
  double delay_;
  Vec pre_;
  std::deque<std::pair<double, Vec>> ring_;
};

/// Fixed-step RK4 on the coupled loop q-dot = -F(q,x) + w + w~(t),
/// x-dot = lambda (V(p(t-d), x) + epsilon(t)), p = q; method of steps for
/// the delay (step must divide the delay), x renormalized every step.
MeanFieldTrajectory integrate_closed_loop(const MeanFieldConfig& config);

/// EDM with a frozen payoff vector; returns samples of x at the cadence.
std::vector<std::pair<double, Vec>> edm_only(const ProtocolSpec& protocol, double lambda,
                                             const PayoffVector& p, const SimplexVector& x0,
                                             double horizon, double step,
                                             double sample_cadence);

}  // namespace popdyn
