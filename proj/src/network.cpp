#include "popdyn/network.hpp"

#include <algorithm>
#include <sstream>
#include <stack>

namespace popdyn {

namespace {

/// Tarjan SCC count, iterative.
bool single_scc(const std::vector<std::vector<std::uint32_t>>& out_adj) {
  const std::size_t n = out_adj.size();
  std::vector<int> index(n, -1), lowlink(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<std::uint32_t> stack;
  int next_index = 0;
  std::size_t scc_count = 0;

  struct Frame {
    std::uint32_t v;
    std::size_t child;
  };
  for (std::uint32_t root = 0; root < n; ++root) {
    if (index[root] != -1) continue;
    std::vector<Frame> call;
    call.push_back({root, 0});
    index[root] = lowlink[root] = next_index++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!call.empty()) {
      Frame& f = call.back();
      if (f.child < out_adj[f.v].size()) {
        const std::uint32_t w = out_adj[f.v][f.child++];
        if (index[w] == -1) {
          index[w] = lowlink[w] = next_index++;
          stack.push_back(w);
          on_stack[w] = true;
          call.push_back({w, 0});
        } else if (on_stack[w]) {
          lowlink[f.v] = std::min(lowlink[f.v], index[w]);
        }
      } else {
        if (lowlink[f.v] == index[f.v]) {
          ++scc_count;
          std::uint32_t w;
          do {
            w = stack.back();
            stack.pop_back();
            on_stack[w] = false;
          } while (w != f.v);
        }
        const std::uint32_t done = f.v;
        call.pop_back();
        if (!call.empty())
          lowlink[call.back().v] = std::min(lowlink[call.back().v], lowlink[done]);
      }
    }
  }
  return scc_count == 1;
}

std::vector<std::vector<std::uint32_t>> out_adjacency(const CommGraph& g) {
  std::vector<std::vector<std::uint32_t>> out(g.n_agents);
  for (std::uint32_t dst = 0; dst < g.n_agents; ++dst)
    for (std::uint32_t src : g.in_neighbors[dst]) out[src].push_back(dst);
  return out;
}

}  // namespace

bool CommGraph::strongly_connected() const { return single_scc(out_adjacency(*this)); }

std::string CommGraph::edge_list() const {
  std::ostringstream os;
  for (std::uint32_t dst = 0; dst < n_agents; ++dst)
    for (std::uint32_t src : in_neighbors[dst]) os << (src + 1) << ' ' << (dst + 1) << '\n';
  return os.str();
}

CommGraph sample_er_digraph(std::size_t n_agents, double prob, Rng& rng) {
  if (n_agents < 2) throw std::invalid_argument("sample_er_digraph: need n_agents >= 2");
  if (!(prob > 0.0 && prob <= 1.0))
    throw std::invalid_argument("sample_er_digraph: prob must be in (0,1]");
  constexpr std::uint64_t kMaxAttempts = 100000;
  CommGraph g;
  g.n_agents = n_agents;
  for (std::uint64_t attempt = 1; attempt <= kMaxAttempts; ++attempt) {
    g.in_neighbors.assign(n_agents, {});
    for (std::uint32_t src = 0; src < n_agents; ++src)
      for (std::uint32_t dst = 0; dst < n_agents; ++dst) {
        if (src == dst) continue;
        if (rng.uniform01() < prob) g.in_neighbors[dst].push_back(src);
      }
    if (g.strongly_connected()) {
      g.sample_attempts = attempt;
      return g;
    }
  }
  throw GraphSamplingExhausted("sample_er_digraph: no strongly connected draw in " +
                               std::to_string(kMaxAttempts) + " attempts (prob too small?)");
}

EstimateBank::EstimateBank(std::size_t n_agents, std::size_t n_strategies, int delay,
                           std::vector<std::uint32_t> observers)
    : current_(n_agents, PayoffVector(n_strategies, 0.0)),
      observers_(std::move(observers)),
      is_observer_(n_agents, false),
      delay_(delay) {
  if (delay < 0) throw std::invalid_argument("EstimateBank: negative delay");
  ring_.assign(static_cast<std::size_t>(delay) + 1, current_);
  ring_time_.assign(static_cast<std::size_t>(delay) + 1, -1);
  for (std::uint32_t k : observers_) {
    if (k >= n_agents) throw std::invalid_argument("EstimateBank: observer out of range");
    is_observer_[k] = true;
  }
}

void EstimateBank::set_estimates(std::vector<PayoffVector> estimates) {
  if (estimates.size() != current_.size())
    throw std::invalid_argument("set_estimates: size mismatch");
  current_ = std::move(estimates);
}

void EstimateBank::advance(const CommGraph& graph, const PayoffVector& p_true,
                           bool include_self) {
  if (graph.n_agents != current_.size())
    throw std::invalid_argument("EstimateBank::advance: graph size mismatch");
  const std::size_t n_agents = current_.size();
  std::vector<PayoffVector> next(n_agents);
  for (std::size_t k = 0; k < n_agents; ++k) {
    if (is_observer_[k]) {
      next[k] = p_true;
      continue;
    }
    const auto& nbrs = graph.in_neighbors[k];
    if (nbrs.empty() && !include_self) {
      next[k] = current_[k];  // isolated reader keeps its estimate
      continue;
    }
    PayoffVector acc(p_true.size(), 0.0);
    double count = 0.0;
    for (std::uint32_t l : nbrs) {
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += current_[l][i];
      count += 1.0;
    }
    if (include_self) {
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += current_[k][i];
      count += 1.0;
    }
    for (double& e : acc) e /= count;
    next[k] = std::move(acc);
  }
  current_ = std::move(next);
  ++now_;
  const std::size_t slot = static_cast<std::size_t>(now_) % ring_.size();
  ring_[slot] = current_;
  ring_time_[slot] = now_;
}

PayoffVector EstimateBank::delayed_estimate(std::size_t agent, long now, int d) const {
  const long s = now - d;
  if (s < 0) return PayoffVector(current_[agent].size(), 0.0);
  const std::size_t slot = static_cast<std::size_t>(s) % ring_.size();
  if (ring_time_[slot] != s)
    throw std::logic_error("delayed_estimate: time " + std::to_string(s) +
                           " not retained (ring holds " + std::to_string(ring_time_[slot]) + ")");
  return ring_[slot][agent];
}

PayoffVector EstimateBank::mean_estimate() const {
  PayoffVector m(current_[0].size(), 0.0);
  for (const auto& est : current_)
    for (std::size_t i = 0; i < m.size(); ++i) m[i] += est[i];
  for (double& e : m) e /= static_cast<double>(current_.size());
  return m;
}

}  // namespace popdyn
