#include "popdyn/stationary.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>

namespace popdyn {

namespace {

double binomial(std::size_t a, std::size_t b) {
  double r = 1.0;
  for (std::size_t i = 1; i <= b; ++i)
    r = r * static_cast<double>(a - b + i) / static_cast<double>(i);
  return r;
}

void enumerate_rec(std::size_t remaining, std::size_t slot, std::vector<int>& cur,
                   std::vector<std::vector<int>>& out) {
  if (slot + 1 == cur.size()) {
    cur[slot] = static_cast<int>(remaining);
    out.push_back(cur);
    return;
  }
  for (std::size_t c = 0; c <= remaining; ++c) {
    cur[slot] = static_cast<int>(c);
    enumerate_rec(remaining - c, slot + 1, cur, out);
  }
}

}  // namespace

std::size_t StateSpace::index_of(const std::vector<int>& counts) const {
  const auto it = std::lower_bound(states.begin(), states.end(), counts);
  if (it == states.end() || *it != counts)
    throw std::invalid_argument("StateSpace: state not found");
  return static_cast<std::size_t>(it - states.begin());
}

StateSpace enumerate_states(std::size_t N, std::size_t n) {
  if (N < 1 || n < 2) throw std::invalid_argument("enumerate_states: need N >= 1, n >= 2");
  if (binomial(N + n - 1, n - 1) > 1e6)
    throw StateSpaceTooLarge("enumerate_states: more than 1e6 states");
  StateSpace space;
  space.N = N;
  space.n = n;
  std::vector<int> cur(n, 0);
  enumerate_rec(N, 0, cur, space.states);
  std::sort(space.states.begin(), space.states.end());
  return space;
}

JumpChain build_chain(const SimplexVector& xstar, const StateSpace& space) {
  if (xstar.size() != space.n) throw std::invalid_argument("build_chain: x* length mismatch");
  JumpChain chain;
  chain.n_states = space.size();
  chain.rows.resize(space.size());
  const double N = static_cast<double>(space.N);
  for (std::size_t s = 0; s < space.size(); ++s) {
    const auto& counts = space.states[s];
    double stay = 0.0;
    for (std::size_t i = 0; i < space.n; ++i) {
      if (counts[i] == 0) continue;
      const double xi = static_cast<double>(counts[i]) / N;
      stay += xi * xstar[i];
      for (std::size_t j = 0; j < space.n; ++j) {
        if (j == i || xstar[j] == 0.0) continue;
        std::vector<int> next = counts;
        --next[i];
        ++next[j];
        chain.rows[s].push_back(
            {static_cast<std::uint32_t>(space.index_of(next)), xi * xstar[j]});
      }
    }
    chain.rows[s].push_back({static_cast<std::uint32_t>(s), stay});
  }
  return chain;
}

namespace {

double balance_residual(const JumpChain& chain, const Vec& mu) {
  Vec muP(chain.n_states, 0.0);
  for (std::size_t s = 0; s < chain.n_states; ++s)
    for (const ChainEntry& e : chain.rows[s]) muP[e.to] += mu[s] * e.prob;
  double worst = 0.0;
  for (std::size_t s = 0; s < chain.n_states; ++s)
    worst = std::max(worst, std::abs(muP[s] - mu[s]));
  return worst;
}

Vec solve_dense(const JumpChain& chain) {
  const auto m = static_cast<Eigen::Index>(chain.n_states);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
  for (std::size_t s = 0; s < chain.n_states; ++s) {
    for (const ChainEntry& e : chain.rows[s]) a(e.to, static_cast<Eigen::Index>(s)) += e.prob;
    a(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s)) -= 1.0;
  }
  a.row(m - 1).setOnes();  // replace one balance row with the normalization
  Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
  b(m - 1) = 1.0;
  Eigen::VectorXd mu = a.fullPivLu().solve(b);
  Vec out(chain.n_states);
  for (Eigen::Index i = 0; i < m; ++i) out[static_cast<std::size_t>(i)] = std::max(mu(i), 0.0);
  double sum = 0.0;
  for (double e : out) sum += e;
  for (double& e : out) e /= sum;
  return out;
}

Vec solve_power(const JumpChain& chain) {
  Vec mu(chain.n_states, 1.0 / static_cast<double>(chain.n_states));
  Vec next(chain.n_states, 0.0);
  for (std::size_t it = 0; it < 2000000; ++it) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t s = 0; s < chain.n_states; ++s)
      for (const ChainEntry& e : chain.rows[s]) next[e.to] += mu[s] * e.prob;
    double diff = 0.0, sum = 0.0;
    for (std::size_t s = 0; s < chain.n_states; ++s) {
      diff = std::max(diff, std::abs(next[s] - mu[s]));
      sum += next[s];
    }
    for (double& e : next) e /= sum;
    mu.swap(next);
    if (diff < 1e-13) return mu;
  }
  return mu;
}

}  // namespace

Vec stationary_distribution(const JumpChain& chain, StationaryMethod method) {
  for (std::size_t s = 0; s < chain.n_states; ++s) {
    double row = 0.0;
    for (const ChainEntry& e : chain.rows[s]) row += e.prob;
    if (std::abs(row - 1.0) > 1e-12)
      throw std::invalid_argument("stationary_distribution: row " + std::to_string(s) +
                                  " sums to " + std::to_string(row));
  }
  Vec mu;
  switch (method) {
    case StationaryMethod::kDense:
      mu = solve_dense(chain);
      break;
    case StationaryMethod::kPower:
      mu = solve_power(chain);
      break;
    case StationaryMethod::kAuto:
      mu = (chain.n_states <= 10000) ? solve_dense(chain) : solve_power(chain);
      break;
  }
  const double resid = balance_residual(chain, mu);
  if (resid >= 1e-10)
    throw NotConverged("stationary_distribution: balance residual " + std::to_string(resid));
  return mu;
}

std::pair<Vec, double> stationary_moments(const Vec& mu, const StateSpace& space) {
  const double N = static_cast<double>(space.N);
  Vec mean(space.n, 0.0);
  for (std::size_t s = 0; s < space.size(); ++s)
    for (std::size_t i = 0; i < space.n; ++i)
      mean[i] += mu[s] * static_cast<double>(space.states[s][i]) / N;
  double sum_var = 0.0;
  for (std::size_t s = 0; s < space.size(); ++s) {
    double d2 = 0.0;
    for (std::size_t i = 0; i < space.n; ++i) {
      const double d = static_cast<double>(space.states[s][i]) / N - mean[i];
      d2 += d * d;
    }
    sum_var += mu[s] * d2;
  }
  return {mean, sum_var};
}

StationaryReport stationary_analysis(const SimplexVector& xstar, const StateSpace& space) {
  const JumpChain chain = build_chain(xstar, space);
  StationaryReport rep;
  rep.mu = stationary_distribution(chain);
  rep.residual = balance_residual(chain, rep.mu);
  auto [mean, sum_var] = stationary_moments(rep.mu, space);
  rep.mean = std::move(mean);
  rep.sum_var = sum_var;
  return rep;
}

McMoments monte_carlo_moments(const SimplexVector& xstar, std::size_t N, std::size_t burn_in,
                              std::size_t n_samples, Rng& rng) {
  const std::size_t n = xstar.size();
  if (N < 1 || n_samples < 1000)
    throw std::invalid_argument("monte_carlo_moments: need N >= 1 and >= 1000 samples");

  // start all mass on the most likely strategy; burn-in washes it out
  std::vector<int> counts(n, 0);
  counts[static_cast<std::size_t>(
      std::max_element(xstar.values().begin(), xstar.values().end()) -
      xstar.values().begin())] = static_cast<int>(N);

  auto step = [&]() {
    // reviser strategy i drawn with probability counts_i / N, next ~ x*
    std::uint64_t u = rng.uniform_below(N);
    std::size_t i = 0;
    for (std::uint64_t acc = 0; i < n; ++i) {
      acc += static_cast<std::uint64_t>(counts[i]);
      if (u < acc) break;
    }
    const std::size_t j = rng.sample_discrete(xstar.values());
    if (j != i) {
      --counts[i];
      ++counts[j];
    }
  };

  for (std::size_t k = 0; k < burn_in; ++k) step();

  const std::size_t n_batches = 100;
  const std::size_t batch_len = n_samples / n_batches;
  std::vector<Vec> batch_mean(n_batches, Vec(n, 0.0));
  Vec overall(n, 0.0);
  std::vector<std::vector<int>> history;
  history.reserve(n_samples);
  for (std::size_t b = 0; b < n_batches; ++b) {
    for (std::size_t k = 0; k < batch_len; ++k) {
      step();
      history.push_back(counts);
      for (std::size_t i = 0; i < n; ++i)
        batch_mean[b][i] += static_cast<double>(counts[i]) / static_cast<double>(N);
    }
    for (std::size_t i = 0; i < n; ++i) {
      batch_mean[b][i] /= static_cast<double>(batch_len);
      overall[i] += batch_mean[b][i] / static_cast<double>(n_batches);
    }
  }

  std::vector<double> batch_var(n_batches, 0.0);
  std::size_t idx = 0;
  for (std::size_t b = 0; b < n_batches; ++b) {
    for (std::size_t k = 0; k < batch_len; ++k, ++idx) {
      double d2 = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = static_cast<double>(history[idx][i]) / static_cast<double>(N) - overall[i];
        d2 += d * d;
      }
      batch_var[b] += d2;
    }
    batch_var[b] /= static_cast<double>(batch_len);
  }

  McMoments mc;
  mc.batches = n_batches;
  mc.mean = overall;
  mc.mean_stderr.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double s2 = 0.0;
    for (std::size_t b = 0; b < n_batches; ++b) {
      const double d = batch_mean[b][i] - overall[i];
      s2 += d * d;
    }
    s2 /= static_cast<double>(n_batches - 1);
    mc.mean_stderr[i] = std::sqrt(s2 / static_cast<double>(n_batches));
  }
  double v_mean = 0.0;
  for (double v : batch_var) v_mean += v / static_cast<double>(n_batches);
  double v_s2 = 0.0;
  for (double v : batch_var) v_s2 += (v - v_mean) * (v - v_mean);
  v_s2 /= static_cast<double>(n_batches - 1);
  mc.sum_var = v_mean;
  mc.sum_var_stderr = std::sqrt(v_s2 / static_cast<double>(n_batches));
  return mc;
}

std::string stationary_report_json(const StationaryReport& r) {
  std::ostringstream os;
  os.precision(17);
  os << "{\"mean\":[";
  for (std::size_t i = 0; i < r.mean.size(); ++i) os << (i ? "," : "") << r.mean[i];
  os << "],\"mu\":[";
  for (std::size_t i = 0; i < r.mu.size(); ++i) os << (i ? "," : "") << r.mu[i];
  os << "],\"residual\":" << r.residual << ",\"sum_var\":" << r.sum_var << "}";
  return os.str();
}

}  // namespace popdyn
