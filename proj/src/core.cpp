#include "popdyn/core.hpp"

#include <algorithm>
#include <numeric>

namespace popdyn {

SimplexVector::SimplexVector(Vec values) : v_(std::move(values)) {
  if (v_.empty()) throw std::invalid_argument("SimplexVector: empty vector");
  double sum = 0.0;
  for (double& e : v_) {
    if (!std::isfinite(e)) throw std::invalid_argument("SimplexVector: non-finite entry");
    if (e < -kSimplexSumTol || e > 1.0 + kSimplexSumTol)
      throw std::invalid_argument("SimplexVector: entry outside [0,1]: " + std::to_string(e));
    e = std::clamp(e, 0.0, 1.0);
    sum += e;
  }
  if (std::abs(sum - 1.0) > 2.0 * kSimplexSumTol)
    throw std::invalid_argument("SimplexVector: entries sum to " + std::to_string(sum));
}

SimplexVector SimplexVector::uniform(std::size_t n) {
  if (n == 0) throw std::invalid_argument("SimplexVector::uniform: n = 0");
  return SimplexVector(Vec(n, 1.0 / static_cast<double>(n)));
}

bool SimplexVector::strictly_positive() const {
  return std::all_of(v_.begin(), v_.end(), [](double e) { return e > 0.0; });
}

CountVector::CountVector(std::vector<int> counts, int population)
    : c_(std::move(counts)), n_pop_(population) {
  if (c_.empty()) throw std::invalid_argument("CountVector: empty");
  if (n_pop_ <= 0) throw std::invalid_argument("CountVector: population must be positive");
  long long sum = 0;
  for (int c : c_) {
    if (c < 0) throw std::invalid_argument("CountVector: negative count");
    sum += c;
  }
  if (sum != n_pop_)
    throw std::invalid_argument("CountVector: counts sum to " + std::to_string(sum) +
                                ", expected " + std::to_string(n_pop_));
}

double kl_divergence(const SimplexVector& x, const SimplexVector& theta) {
  if (x.size() != theta.size())
    throw std::domain_error("kl_divergence: length mismatch");
  if (!theta.strictly_positive())
    throw std::domain_error("kl_divergence: theta must be strictly positive");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    // convention 0 ln 0 = 0
    if (x[i] > 0.0) s += x[i] * std::log(x[i] / theta[i]);
  }
  return std::max(s, 0.0);
}

SimplexVector state_from_counts(const CountVector& counts) {
  Vec v(counts.size());
  const double n = static_cast<double>(counts.population());
  for (std::size_t i = 0; i < counts.size(); ++i)
    v[i] = static_cast<double>(counts.counts()[i]) / n;
  return SimplexVector(std::move(v));
}

double max_norm(const Vec& v) {
  if (v.empty()) throw std::invalid_argument("max_norm: empty vector");
  double m = 0.0;
  for (double e : v) m = std::max(m, std::abs(e));
  return m;
}

double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(const Vec& v) { return std::sqrt(dot(v, v)); }

Vec sub(const Vec& a, const Vec& b) {
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

}  // namespace popdyn
