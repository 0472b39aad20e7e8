#include "popdyn/meanfield.hpp"

#include <algorithm>
#include <cmath>

namespace popdyn {

Vec NoiseSeries::at(double time, std::size_t n) const {
  if (zero()) return Vec(n, 0.0);
  if (time <= t.front()) return v.front();
  if (time >= t.back()) return v.back();
  const auto it = std::upper_bound(t.begin(), t.end(), time);
  const std::size_t k = static_cast<std::size_t>(it - t.begin()) - 1;
  const double w = (time - t[k]) / (t[k + 1] - t[k]);
  Vec out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = v[k][i] + w * (v[k + 1][i] - v[k][i]);
  return out;
}

void MeanFieldConfig::validate() const {
  game.validate();
  if (x0.size() != game.n()) throw ConfigError("meanfield: x0 length mismatch");
  if (q0.size() != game.n()) throw ConfigError("meanfield: q0 length mismatch");
  for (double e : q0)
    if (!(e >= 0.0)) throw ConfigError("meanfield: q0 must be nonnegative");
  if (!(lambda >= 0.0)) throw ConfigError("meanfield: lambda must be >= 0");
  if (!(horizon > 0.0)) throw ConfigError("meanfield: horizon must be positive");
  if (!(step > 0.0)) throw ConfigError("meanfield: step must be positive");
  if (delay < 0.0) throw ConfigError("meanfield: delay must be >= 0");
  if (delay > 0.0) {
    if (!(step <= delay / 10.0 + 1e-15))
      throw ConfigError("meanfield: step must be <= delay/10");
    const double ratio = delay / step;
    if (std::abs(ratio - std::round(ratio)) > 1e-9)
      throw ConfigError("meanfield: step must divide the delay exactly");
  }
  const double cr = sample_cadence / step;
  if (!(sample_cadence > 0.0) || std::abs(cr - std::round(cr)) > 1e-9)
    throw ConfigError("meanfield: sample_cadence must be a multiple of step");
  if (const auto* kld = std::get_if<KldRlSpec>(&protocol))
    if (kld->theta.size() != game.n()) throw ConfigError("meanfield: theta length mismatch");
}

HistoryBuffer::HistoryBuffer(double delay, Vec pre_history)
    : delay_(delay), pre_(std::move(pre_history)) {}

void HistoryBuffer::push(double t, Vec p) {
  ring_.emplace_back(t, std::move(p));
  // keep one sample beyond the window so interpolation at t - d stays bracketed
  while (ring_.size() > 2 && ring_[1].first <= ring_.back().first - delay_ - 1e-12)
    ring_.pop_front();
}

Vec HistoryBuffer::at(double t) const {
  if (ring_.empty() || t <= ring_.front().first) {
    if (t < -1e-12 || ring_.empty()) return pre_;
    return ring_.front().second;
  }
  if (t >= ring_.back().first) return ring_.back().second;
  // ring times are the integration grid: locate by binary search
  std::size_t lo = 0, hi = ring_.size() - 1;
  while (hi - lo > 1) {
    const std::size_t mid = (lo + hi) / 2;
    if (ring_[mid].first <= t)
      lo = mid;
    else
      hi = mid;
  }
  const double w = (t - ring_[lo].first) / (ring_[hi].first - ring_[lo].first);
  Vec out(ring_[lo].second.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = ring_[lo].second[i] + w * (ring_[hi].second[i] - ring_[lo].second[i]);
  return out;
}

namespace {

struct LoopState {
  Vec q;
  Vec x;
};

}  // namespace

MeanFieldTrajectory integrate_closed_loop(const MeanFieldConfig& config) {
  config.validate();
  const std::size_t n = config.game.n();
  const double h = config.step;
  const bool delayed = config.delay > 0.0;

  HistoryBuffer history(config.delay, config.q0);  // p(t) = q(0) for t < 0
  if (delayed) history.push(0.0, config.q0);

  LoopState s{config.q0, config.x0.values()};
  MeanFieldTrajectory traj;

  // velocity field; delayed payoff from history (or the stage q when d = 0,
  // which keeps full RK4 order)
  auto deriv = [&](double t, const LoopState& st, LoopState& d) {
    d.q = q_rhs_raw(st.q, st.x, config.game);
    if (!config.w_tilde.zero()) {
      const Vec wt = config.w_tilde.at(t, n);
      for (std::size_t i = 0; i < n; ++i) d.q[i] += wt[i];
    }
    const Vec p_del = delayed ? history.at(t - config.delay) : st.q;
    d.x = edm_velocity_raw(p_del, st.x, config.protocol);
    const Vec eps = config.epsilon.at(t, n);
    for (std::size_t i = 0; i < n; ++i) d.x[i] = config.lambda * (d.x[i] + eps[i]);
  };

  const auto total_steps = static_cast<std::uint64_t>(std::llround(config.horizon / h));
  const auto per_sample = static_cast<std::uint64_t>(std::llround(config.sample_cadence / h));

  auto record = [&](double t) { traj.samples.push_back({t, s.x, s.q, max_norm(s.q)}); };
  record(0.0);

  LoopState k1, k2, k3, k4, tmp;
  tmp.q.resize(n);
  tmp.x.resize(n);

  for (std::uint64_t step_i = 0; step_i < total_steps; ++step_i) {
    const double t = static_cast<double>(step_i) * h;
    deriv(t, s, k1);
    for (std::size_t i = 0; i < n; ++i) {
      tmp.q[i] = s.q[i] + 0.5 * h * k1.q[i];
      tmp.x[i] = s.x[i] + 0.5 * h * k1.x[i];
    }
    deriv(t + 0.5 * h, tmp, k2);
    for (std::size_t i = 0; i < n; ++i) {
      tmp.q[i] = s.q[i] + 0.5 * h * k2.q[i];
      tmp.x[i] = s.x[i] + 0.5 * h * k2.x[i];
    }
    deriv(t + 0.5 * h, tmp, k3);
    for (std::size_t i = 0; i < n; ++i) {
      tmp.q[i] = s.q[i] + h * k3.q[i];
      tmp.x[i] = s.x[i] + h * k3.x[i];
    }
    deriv(t + h, tmp, k4);
    for (std::size_t i = 0; i < n; ++i) {
      s.q[i] += h / 6.0 * (k1.q[i] + 2.0 * k2.q[i] + 2.0 * k3.q[i] + k4.q[i]);
      s.x[i] += h / 6.0 * (k1.x[i] + 2.0 * k2.x[i] + 2.0 * k3.x[i] + k4.x[i]);
      if (s.q[i] < 0.0) s.q[i] = 0.0;
      if (s.x[i] < 0.0) s.x[i] = 0.0;
    }

    double sum = 0.0;
    for (double e : s.x) sum += e;
    traj.max_simplex_drift = std::max(traj.max_simplex_drift, std::abs(sum - 1.0));
    if (std::abs(sum - 1.0) > 1e-9)
      throw NumericalBlowup("meanfield: simplex drift " + std::to_string(sum - 1.0));
    for (double& e : s.x) e /= sum;

    const double t_next = static_cast<double>(step_i + 1) * h;
    if (max_norm(s.q) > 1e9) throw NumericalBlowup("meanfield: |q| exceeded 1e9");
    if (delayed) history.push(t_next, s.q);
    if ((step_i + 1) % per_sample == 0) record(t_next);
  }
  return traj;
}

std::vector<std::pair<double, Vec>> edm_only(const ProtocolSpec& protocol, double lambda,
                                             const PayoffVector& p, const SimplexVector& x0,
                                             double horizon, double step,
                                             double sample_cadence) {
  if (!(step > 0.0) || !(horizon > 0.0)) throw ConfigError("edm_only: bad step/horizon");
  const std::size_t n = p.size();
  Vec x = x0.values();
  std::vector<std::pair<double, Vec>> out;
  out.emplace_back(0.0, x);
  const auto total = static_cast<std::uint64_t>(std::llround(horizon / step));
  const auto per = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(sample_cadence / step)));
  Vec k1, k2, k3, k4, tmp(n);
  for (std::uint64_t i = 0; i < total; ++i) {
    auto vel = [&](const Vec& xx) { return edm_velocity_raw(p, xx, protocol); };
    k1 = vel(x);
    for (std::size_t j = 0; j < n; ++j) tmp[j] = x[j] + 0.5 * step * lambda * k1[j];
    k2 = vel(tmp);
    for (std::size_t j = 0; j < n; ++j) tmp[j] = x[j] + 0.5 * step * lambda * k2[j];
    k3 = vel(tmp);
    for (std::size_t j = 0; j < n; ++j) tmp[j] = x[j] + step * lambda * k3[j];
    k4 = vel(tmp);
    for (std::size_t j = 0; j < n; ++j)
      x[j] += step * lambda / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
    double sum = 0.0;
    for (double e : x) sum += e;
    for (double& e : x) e /= sum;
    if ((i + 1) % per == 0) out.emplace_back(static_cast<double>(i + 1) * step, x);
  }
  return out;
}

}  // namespace popdyn
