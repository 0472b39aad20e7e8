#include "popdyn/finite_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace popdyn {

void SimConfig::validate() const {
  game.validate();
  if (N < 1) throw ConfigError("finite: N must be >= 1");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("finite: lambda must be >= 0");
  if (delay < 0) throw ConfigError("finite: delay must be a nonnegative integer");
  if (!(horizon > 0.0)) throw ConfigError("finite: horizon must be positive");
  if (!(ode_step > 0.0 && ode_step <= 0.1)) throw ConfigError("finite: ode_step must be in (0, 0.1]");
  if (!(sample_cadence > 0.0)) throw ConfigError("finite: sample_cadence must be positive");
  if (q0.size() != game.n()) throw ConfigError("finite: q0 length mismatch");
  for (double e : q0)
    if (!(e >= 0.0)) throw ConfigError("finite: q0 must be nonnegative");
  if (!exact_payoff && !(graph_prob > 0.0 && graph_prob <= 1.0))
    throw ConfigError("finite: graph connection probability must be in (0,1]");
  if (!(observer_fraction > 0.0 && observer_fraction <= 1.0))
    throw ConfigError("finite: observer_fraction must be in (0,1]");
  if (const auto* kld = std::get_if<KldRlSpec>(&protocol)) {
    if (kld->theta.size() != game.n()) throw ConfigError("finite: theta length mismatch");
  }
  if (initial_counts) {
    if (initial_counts->size() != game.n()) throw ConfigError("finite: initial_counts length mismatch");
    long long sum = 0;
    for (int c : *initial_counts) {
      if (c < 0) throw ConfigError("finite: negative initial count");
      sum += c;
    }
    if (sum != static_cast<long long>(N))
      throw ConfigError("finite: initial_counts must sum to N");
  }
}

namespace {

/// RK4 on q with the population state frozen; advances q in place from a to b
/// in steps of at most h, clamping below at 0.
void integrate_q(Vec& q, const SimplexVector& x, const GameParams& game, double a, double b,
                 double h) {
  auto rhs = [&](const Vec& qq, Vec& dq) {
    for (std::size_t i = 0; i < qq.size(); ++i)
      dq[i] = -completion_rate(std::max(qq[i], 0.0), x[i], game, i) + game.w[i];
  };
  const std::size_t n = q.size();
  Vec k1(n), k2(n), k3(n), k4(n), tmp(n);
  double t = a;
  while (t < b - 1e-15) {
    const double step = std::min(h, b - t);
    rhs(q, k1);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = q[i] + 0.5 * step * k1[i];
    rhs(tmp, k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = q[i] + 0.5 * step * k2[i];
    rhs(tmp, k3);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = q[i] + step * k3[i];
    rhs(tmp, k4);
    for (std::size_t i = 0; i < n; ++i) {
      q[i] += step / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      if (q[i] < 0.0) q[i] = 0.0;
    }
    t += step;
  }
}

}  // namespace

JumpTrajectory run_finite(const SimConfig& config) {
  config.validate();
  const std::size_t n = config.game.n();
  const std::size_t N = config.N;

  Rng rng_graph(config.rng.seed, config.rng.stream + rng_stream::kGraph);
  Rng rng_init(config.rng.seed, config.rng.stream + rng_stream::kInitial);
  Rng rng_events(config.rng.seed, config.rng.stream + rng_stream::kEvents);

  JumpTrajectory traj;
  traj.N = N;
  traj.n = n;
  traj.horizon = config.horizon;
  traj.lambda = config.lambda;
  traj.delay = config.delay;

  // communication layer; skipped entirely under exact payoff observation
  CommGraph graph;
  std::vector<std::uint32_t> observers;
  if (!config.exact_payoff) {
    graph = sample_er_digraph(N, config.graph_prob, rng_graph);
    traj.graph_attempts = graph.sample_attempts;
    const auto n_obs = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(config.observer_fraction * static_cast<double>(N))));
    observers = rng_graph.sample_without_replacement(std::min(n_obs, N), N);
  }
  EstimateBank bank(N, n, config.delay, observers);

  // initial strategies
  std::vector<std::uint16_t> strategy(N);
  std::vector<int> counts(n, 0);
  if (config.initial_counts) {
    std::size_t agent = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (int c = 0; c < (*config.initial_counts)[i]; ++c) strategy[agent++] = static_cast<std::uint16_t>(i);
    counts = *config.initial_counts;
  } else {
    for (std::size_t k = 0; k < N; ++k) {
      strategy[k] = static_cast<std::uint16_t>(rng_init.uniform_below(n));
      ++counts[strategy[k]];
    }
  }
  traj.initial_counts = counts;

  Vec q = config.q0;
  auto state_now = [&]() {
    Vec x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<double>(counts[i]) / static_cast<double>(N);
    return SimplexVector(std::move(x));
  };
  SimplexVector x = state_now();

  const double total_rate = static_cast<double>(N) * config.lambda;
  double t = 0.0;
  double next_event = (total_rate > 0.0) ? rng_events.exponential(total_rate)
                                         : std::numeric_limits<double>::infinity();
  long next_integer = 0;
  std::uint64_t next_sample = 0;

  const auto* kld = std::get_if<KldRlSpec>(&config.protocol);
  const double varrho = kld ? 0.0 : std::get<SmithSpec>(config.protocol).varrho;

  while (true) {
    const double t_integer = static_cast<double>(next_integer);
    const double t_sample = static_cast<double>(next_sample) * config.sample_cadence;
    double t_next = std::min({t_integer, t_sample, next_event, config.horizon});
    if (t_next > t) {
      integrate_q(q, x, config.game, t, t_next, config.ode_step);
      t = t_next;
    }

    // priority at coincident times: consensus, then sample, then event
    if (t == t_integer && t_integer <= config.horizon) {
      if (!config.exact_payoff) {
        bank.advance(graph, q, config.include_self);
        traj.mean_estimate_log.push_back(bank.mean_estimate());
      }
      ++next_integer;
      continue;
    }
    if (t == t_sample && t_sample <= config.horizon) {
      traj.samples.push_back({t, x.values(), q, max_norm(q)});
      ++next_sample;
      continue;
    }
    if (t >= config.horizon) break;

    // revision arrival
    const auto agent = static_cast<std::uint32_t>(rng_events.uniform_below(N));
    const std::uint16_t from = strategy[agent];
    PayoffVector payoff =
        config.exact_payoff
            ? q
            : bank.delayed_estimate(agent, static_cast<long>(std::floor(t)), config.delay);
    SimplexVector row = kld ? kld_rl_choice(payoff, kld->eta, kld->theta)
                            : smith_row(payoff, from, varrho);
    const auto to = static_cast<std::uint16_t>(rng_events.sample_discrete(row.values()));
    if (to != from) {
      --counts[from];
      ++counts[to];
      strategy[agent] = to;
      x = state_now();
    }
    ++traj.arrivals;
    if (config.record_events) traj.events.push_back({t, agent, from, to});
    next_event = t + rng_events.exponential(total_rate);
  }

  return traj;
}

std::vector<TransitionMass> transition_row(
    const CountVector& x, const std::function<SimplexVector(std::size_t)>& row_for) {
  const std::size_t n = x.size();
  const double N = static_cast<double>(x.population());
  std::vector<TransitionMass> out;
  double stay = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (x.counts()[i] == 0) continue;
    const double share = static_cast<double>(x.counts()[i]) / N;
    const SimplexVector row = row_for(i);  // SimplexVector enforces a valid distribution
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) {
        stay += share * row[j];
        continue;
      }
      if (row[j] == 0.0) continue;
      std::vector<int> next = x.counts();
      --next[i];
      ++next[j];
      out.push_back({std::move(next), share * row[j]});
    }
  }
  out.push_back({x.counts(), stay});
  return out;
}

InterpolatedPath::InterpolatedPath(const JumpTrajectory& traj) {
  if (traj.events.empty())
    throw std::invalid_argument("InterpolatedPath: trajectory has no recorded events");
  const double N = static_cast<double>(traj.N);
  std::vector<int> counts = traj.initial_counts;
  auto as_state = [&]() {
    Vec x(counts.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(counts[i]) / N;
    return x;
  };
  times_.push_back(0.0);
  states_.push_back(as_state());
  for (const JumpEvent& e : traj.events) {
    if (e.to != e.from) {
      --counts[e.from];
      ++counts[e.to];
    }
    times_.push_back(e.t);
    states_.push_back(as_state());
  }
}

std::size_t InterpolatedPath::segment_index(double t) const {
  if (t < 0.0 || t > times_.back())
    throw std::domain_error("InterpolatedPath: time outside [0, last arrival]");
  // segment k covers [times_[k], times_[k+1])
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  return static_cast<std::size_t>(it - times_.begin()) - 1;
}

Vec InterpolatedPath::step_state(double t) const { return states_[segment_index(t)]; }

Vec InterpolatedPath::interpolated(double t) const {
  const std::size_t k = segment_index(t);
  if (k + 1 >= times_.size()) return states_.back();
  const Vec& a = states_[k];
  const Vec& b = states_[k + 1];
  const double w = (t - times_[k]) / (times_[k + 1] - times_[k]);
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + w * (b[i] - a[i]);
  return out;
}

bool InterpolatedPath::at_arrival(double t, double tol) const {
  const auto it = std::lower_bound(times_.begin(), times_.end(), t - tol);
  return it != times_.end() && std::abs(*it - t) <= tol;
}

Vec InterpolatedPath::epsilon(double t, const Vec& choice_delayed, double lambda) const {
  if (at_arrival(t)) throw std::domain_error("epsilon: undefined exactly at an arrival time");
  const std::size_t k = segment_index(t);
  if (k + 1 >= times_.size())
    throw std::domain_error("epsilon: undefined past the last arrival");
  const Vec& a = states_[k];
  const Vec& b = states_[k + 1];
  const double gap = times_[k + 1] - times_[k];
  const Vec xh = interpolated(t);
  Vec eps(a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    eps[i] = (b[i] - a[i]) / (lambda * gap) - (choice_delayed[i] - xh[i]);
  return eps;
}

Vec noise_w(const Vec& q, const Vec& x_hat, const Vec& x_step, const GameParams& params) {
  Vec out(q.size());
  for (std::size_t i = 0; i < q.size(); ++i)
    out[i] = completion_rate(q[i], x_hat[i], params, i) -
             completion_rate(q[i], x_step[i], params, i);
  return out;
}

Vec noise_v(const PayoffVector& p, const PayoffVector& phat_delayed, double eta,
            const SimplexVector& theta) {
  const Vec c_delayed = kld_rl_choice(phat_delayed, eta, theta).values();
  const Vec c_now = kld_rl_choice(p, eta, theta).values();
  return sub(c_delayed, c_now);
}

}  // namespace popdyn
