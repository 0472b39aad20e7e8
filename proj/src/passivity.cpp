#include "popdyn/passivity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace popdyn {

namespace {

Vec clamp_interior(const Vec& x, double clamp) {
  const double n = static_cast<double>(x.size());
  Vec out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (1.0 - clamp) * x[i] + clamp / n;
  return out;
}

/// sech^2(z) for z >= 0 without overflow.
double sech2(double z) {
  const double e = std::exp(-z);
  const double denom = 1.0 + e * e;
  const double s = 2.0 * e / denom;
  return s * s;
}

double kl_raw(const Vec& x, const SimplexVector& theta) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] > 0.0) s += x[i] * std::log(x[i] / theta[i]);
  return std::max(s, 0.0);
}

}  // namespace

AntistorageSpec AntistorageSpec::for_game(const GameParams& g) {
  double offset = 0.0;
  for (double wi : g.w) offset += wi;
  return AntistorageSpec{g, offset};
}

StorageEval storage_S(const PayoffVector& p, const Vec& x, const StorageSpec& spec) {
  const std::size_t n = p.size();
  const double eta = spec.eta;
  StorageEval out;
  out.value = lse(p, eta, spec.theta) - dot(p, x) + eta * kl_raw(x, spec.theta);
  if (out.value < 0.0 && out.value > -1e-12) out.value = 0.0;

  const Vec c = kld_rl_choice(p, eta, spec.theta).values();
  out.grad_p.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.grad_p[i] = c[i] - x[i];

  const Vec xi = clamp_interior(x, spec.interior_clamp);
  out.grad_x.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    out.grad_x[i] = -p[i] + eta * (std::log(xi[i] / spec.theta[i]) + 1.0);
  return out;
}

AntistorageEval antistorage_L(const Vec& q, const Vec& x, const AntistorageSpec& spec) {
  const GameParams& g = spec.game;
  const std::size_t n = g.n();
  AntistorageEval out;
  out.value = spec.offset;
  out.grad_q.resize(n);
  out.grad_x.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double z = 0.5 * g.alpha[i] * q[i];
    const double th = std::tanh(z);
    const double xb1 = std::pow(x[i], g.beta[i] + 1.0);
    out.value += g.R[i] * th * xb1 / (g.beta[i] + 1.0) - g.w[i] * x[i];
    out.grad_q[i] = g.R[i] * 0.5 * g.alpha[i] * sech2(z) * xb1 / (g.beta[i] + 1.0);
    out.grad_x[i] = g.R[i] * th * std::pow(x[i], g.beta[i]) - g.w[i];
  }
  return out;
}

double g_lambda(const PayoffVector& p, const Vec& x_hat, const Vec& w_tilde, const Vec& eps,
                const Vec& v, double lambda, const StorageSpec& storage,
                const AntistorageSpec& anti) {
  const std::size_t n = p.size();
  const Vec& q = p;  // payoff map is the identity on job levels
  const StorageEval s = storage_S(p, x_hat, storage);
  const AntistorageEval l = antistorage_L(q, x_hat, anti);
  const Vec c = kld_rl_choice(p, storage.eta, storage.theta).values();

  double term1 = 0.0, term2 = 0.0, term3 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double ev = eps[i] + v[i];
    const double f_i = completion_rate(std::max(q[i], 0.0), std::clamp(x_hat[i], 0.0, 1.0),
                                       anti.game, i);
    term1 += ev * w_tilde[i];
    term2 += (lambda * s.grad_x[i] + f_i - anti.game.w[i]) * ev;
    term3 += (l.grad_q[i] - lambda * (c[i] - x_hat[i])) * w_tilde[i];
  }
  return -2.0 * lambda * term1 + lambda * term2 + term3;
}

PremiseReport check_premises(const std::vector<PremisePoint>& samples,
                             const StorageSpec& storage, const AntistorageSpec& anti) {
  if (samples.empty()) throw std::invalid_argument("check_premises: no samples");
  PremiseReport rep{-std::numeric_limits<double>::infinity(),
                    -std::numeric_limits<double>::infinity()};
  for (const auto& pt : samples) {
    const Vec xi = clamp_interior(pt.x, storage.interior_clamp);
    const StorageEval s = storage_S(pt.p, xi, storage);
    // 19a at the clamped point: grad_x'S V + eta |V|^2 <= 0
    double v19 = 0.0;
    for (std::size_t i = 0; i < xi.size(); ++i)
      v19 += s.grad_x[i] * s.grad_p[i] + storage.eta * s.grad_p[i] * s.grad_p[i];
    rep.worst_19a = std::max(rep.worst_19a, v19);

    const AntistorageEval l = antistorage_L(pt.q, pt.x, anti);
    double v20 = 0.0;
    for (std::size_t i = 0; i < pt.q.size(); ++i) {
      const double f_i = completion_rate(std::max(pt.q[i], 0.0),
                                         std::clamp(pt.x[i], 0.0, 1.0), anti.game, i);
      v20 += l.grad_q[i] * (anti.game.w[i] - f_i);
    }
    rep.worst_20a = std::max(rep.worst_20a, v20);
  }
  return rep;
}

BoundInput bound_input_from_meanfield(const MeanFieldTrajectory& traj) {
  BoundInput in;
  in.t.reserve(traj.samples.size());
  for (const auto& s : traj.samples) {
    in.t.push_back(s.t);
    in.q.push_back(s.q);
    in.x_hat.push_back(s.x);
    in.x_step.push_back(s.x);
    in.p_hat_delayed.push_back(s.q);  // noise-free: estimates are exact
  }
  return in;
}

BoundInput bound_input_from_finite(const JumpTrajectory& traj, double eta,
                                   const SimplexVector& theta, bool exact_payoff) {
  const InterpolatedPath path(traj);
  const double t_end = path.last_arrival();
  BoundInput in;
  for (const auto& s : traj.samples) {
    if (s.t > t_end || path.at_arrival(s.t)) continue;
    PayoffVector phat(traj.n, 0.0);
    if (exact_payoff) {
      phat = s.q;
    } else {
      const long slot = static_cast<long>(std::floor(s.t)) - traj.delay;
      if (!traj.mean_estimate_log.empty() && slot >= 0 &&
          slot < static_cast<long>(traj.mean_estimate_log.size()))
        phat = traj.mean_estimate_log[static_cast<std::size_t>(slot)];
    }
    const Vec choice_del = kld_rl_choice(phat, eta, theta).values();
    in.t.push_back(s.t);
    in.q.push_back(s.q);
    in.x_hat.push_back(path.interpolated(s.t));
    in.x_step.push_back(path.step_state(s.t));
    in.p_hat_delayed.push_back(std::move(phat));
    in.eps.push_back(path.epsilon(s.t, choice_del, traj.lambda));
  }
  return in;
}

namespace {

double trapezoid(const std::vector<double>& t, const std::vector<double>& f, std::size_t stride) {
  double acc = 0.0;
  std::size_t prev = 0;
  for (std::size_t k = stride; k < t.size(); k += stride) {
    acc += 0.5 * (f[prev] + f[k]) * (t[k] - t[prev]);
    prev = k;
  }
  if (prev + 1 < t.size()) {  // close the tail so both resolutions share endpoints
    const std::size_t last = t.size() - 1;
    acc += 0.5 * (f[prev] + f[last]) * (t[last] - t[prev]);
  }
  return acc;
}

}  // namespace

BoundReport check_theorem1(const BoundInput& input, double lambda, double eta,
                           const StorageSpec& storage, const AntistorageSpec& anti) {
  const std::size_t m = input.t.size();
  if (m < 3) throw InsufficientResolution("check_theorem1: fewer than 3 grid points");
  const std::size_t n = input.q.front().size();

  std::vector<double> f_lhs(m), f_g(m);
  std::vector<PremisePoint> pts(m);
  for (std::size_t k = 0; k < m; ++k) {
    const Vec& q = input.q[k];
    const Vec& xh = input.x_hat[k];
    const PayoffVector& p = q;
    const Vec c = kld_rl_choice(p, eta, storage.theta).values();
    double dev2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) dev2 += (c[i] - xh[i]) * (c[i] - xh[i]);
    f_lhs[k] = dev2;

    const Vec eps = input.eps.empty() ? Vec(n, 0.0) : input.eps[k];
    const Vec v = noise_v(p, input.p_hat_delayed[k], eta, storage.theta);
    const Vec wt = noise_w(q, xh, input.x_step[k], anti.game);
    f_g[k] = std::abs(g_lambda(p, xh, wt, eps, v, lambda, storage, anti));

    pts[k] = {p, xh, q};
  }

  BoundReport rep;
  const double lhs_full = trapezoid(input.t, f_lhs, 1);
  const double lhs_coarse = trapezoid(input.t, f_lhs, 2);
  const double g_full = trapezoid(input.t, f_g, 1);
  const double g_coarse = trapezoid(input.t, f_g, 2);

  const StorageEval s0 = storage_S(input.q.front(), input.x_hat.front(), storage);
  const AntistorageEval l0 = antistorage_L(input.q.front(), input.x_hat.front(), anti);
  rep.alpha_lambda = lambda * s0.value + l0.value;

  rep.lhs = lhs_full;
  rep.rhs = (rep.alpha_lambda + g_full) / (lambda * lambda * eta);
  const double scale = std::max({std::abs(lhs_full), std::abs(g_full), 1e-9 * (1.0 + rep.alpha_lambda)});
  rep.resolution_gap =
      std::max(std::abs(lhs_full - lhs_coarse), std::abs(g_full - g_coarse)) / scale;
  if (rep.resolution_gap >= 0.01)
    throw InsufficientResolution("check_theorem1: resolution gap " +
                                 std::to_string(rep.resolution_gap) + " >= 1%");

  const PremiseReport prem = check_premises(pts, storage, anti);
  rep.worst_19a = prem.worst_19a;
  rep.worst_20a = prem.worst_20a;
  rep.premise_19a_ok = prem.worst_19a <= kPremiseTol;
  rep.premise_20a_ok = prem.worst_20a <= kPremiseTol;
  rep.holds = rep.lhs <= rep.rhs;
  return rep;
}

std::string bound_report_json(const BoundReport& r) {
  std::ostringstream os;
  os.precision(17);
  os << "{\"alpha_lambda\":" << r.alpha_lambda << ",\"holds\":" << (r.holds ? "true" : "false")
     << ",\"lhs\":" << r.lhs << ",\"resolution_gap\":" << r.resolution_gap
     << ",\"rhs\":" << r.rhs << ",\"worst_19a\":" << r.worst_19a
     << ",\"worst_20a\":" << r.worst_20a << "}";
  return os.str();
}

}  // namespace popdyn
