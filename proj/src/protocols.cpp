#include "popdyn/protocols.hpp"

#include <algorithm>
#include <cmath>

namespace popdyn {

ProtocolSpec make_smith(double varrho) {
  if (!(varrho > 0.0) || !std::isfinite(varrho))
    throw ConfigError("smith: varrho must be positive");
  return SmithSpec{varrho};
}

ProtocolSpec make_kld_rl(double eta, SimplexVector theta) {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw ConfigError("kld-rl: eta must be positive");
  if (!theta.strictly_positive())
    throw ConfigError("kld-rl: theta must be strictly positive");
  return KldRlSpec{eta, std::move(theta)};
}

double smith_varrho_for(std::size_t n, double m_q) {
  if (n < 2 || !(m_q > 0.0)) throw ConfigError("smith_varrho_for: need n >= 2, m_q > 0");
  return 1.0 / (static_cast<double>(n - 1) * m_q);
}

SimplexVector smith_row(const PayoffVector& p, std::size_t j, double varrho) {
  const std::size_t n = p.size();
  if (j >= n) throw std::invalid_argument("smith_row: strategy index out of range");
  Vec row(n, 0.0);
  double off = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i == j) continue;
    row[i] = varrho * std::max(p[i] - p[j], 0.0);
    off += row[i];
  }
  if (off > 1.0)
    throw std::domain_error("smith_row: off-diagonal mass " + std::to_string(off) +
                            " exceeds 1 (varrho too large for payoff range)");
  row[j] = 1.0 - off;
  return SimplexVector(std::move(row));
}

namespace {

/// theta-weighted exponentials of (p - max p)/eta and their sum.
void weighted_exp(const PayoffVector& p, double eta, const SimplexVector& theta, Vec& t,
                  double& total) {
  const double m = *std::max_element(p.begin(), p.end());
  t.resize(p.size());
  total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    t[i] = theta[i] * std::exp((p[i] - m) / eta);
    total += t[i];
  }
}

void check_choice_inputs(const PayoffVector& p, double eta, const SimplexVector& theta) {
  if (p.size() != theta.size()) throw std::invalid_argument("choice map: length mismatch");
  if (!(eta > 0.0)) throw std::invalid_argument("choice map: eta must be positive");
  if (!theta.strictly_positive())
    throw std::invalid_argument("choice map: theta must be strictly positive");
  for (double e : p)
    if (!std::isfinite(e)) throw std::invalid_argument("choice map: non-finite payoff");
}

}  // namespace

double lse(const PayoffVector& p, double eta, const SimplexVector& theta) {
  check_choice_inputs(p, eta, theta);
  const double m = *std::max_element(p.begin(), p.end());
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) total += theta[i] * std::exp((p[i] - m) / eta);
  return m + eta * std::log(total);
}

SimplexVector kld_rl_choice(const PayoffVector& p, double eta, const SimplexVector& theta) {
  check_choice_inputs(p, eta, theta);
  Vec t;
  double total;
  weighted_exp(p, eta, theta, t, total);
  for (double& e : t) e /= total;
  return SimplexVector(std::move(t));
}

bool kld_rl_argmax_check(const PayoffVector& p, double eta, const SimplexVector& theta,
                         const SimplexVector& z) {
  const SimplexVector c = kld_rl_choice(p, eta, theta);
  const double at_z = dot(z.values(), p) - eta * kl_divergence(z, theta);
  const double at_c = dot(c.values(), p) - eta * kl_divergence(c, theta);
  return at_z <= at_c + 1e-9;
}

Vec lse_gradient(const PayoffVector& p, double eta, const SimplexVector& theta) {
  return kld_rl_choice(p, eta, theta).values();
}

Eigen::MatrixXd lse_hessian(const PayoffVector& p, double eta, const SimplexVector& theta) {
  const Vec c = kld_rl_choice(p, eta, theta).values();
  const auto n = static_cast<Eigen::Index>(c.size());
  Eigen::MatrixXd h(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < n; ++k)
      h(i, k) = ((i == k ? c[i] : 0.0) - c[i] * c[k]) / eta;
  return h;
}

std::pair<double, double> lipschitz_gap(const PayoffVector& p, const PayoffVector& phat,
                                        double eta, const SimplexVector& theta) {
  const Vec cp = kld_rl_choice(p, eta, theta).values();
  const Vec cq = kld_rl_choice(phat, eta, theta).values();
  return {norm2(sub(cp, cq)), norm2(sub(p, phat)) / eta};
}

Vec edm_velocity_raw(const PayoffVector& p, const Vec& x, const ProtocolSpec& spec) {
  const std::size_t n = p.size();
  if (const auto* kld = std::get_if<KldRlSpec>(&spec)) {
    const Vec c = kld_rl_choice(p, kld->eta, kld->theta).values();
    return sub(c, x);
  }
  const double varrho = std::get<SmithSpec>(spec).varrho;
  Vec v(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const SimplexVector row = smith_row(p, j, varrho);
    double out_rate = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      v[i] += x[j] * row[i];
      out_rate += row[i];
    }
    v[j] -= x[j] * out_rate;
  }
  return v;
}

Vec edm_velocity(const PayoffVector& p, const SimplexVector& x, const ProtocolSpec& spec) {
  return edm_velocity_raw(p, x.values(), spec);
}

}  // namespace popdyn
