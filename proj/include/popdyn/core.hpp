#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace popdyn {

using Vec = std::vector<double>;

/// Payoffs are plain real vectors (units follow the game; here jobs, since p = q).
using PayoffVector = Vec;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NoEquilibrium : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct GraphSamplingExhausted : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct StateSpaceTooLarge : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NotConverged : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericalBlowup : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InsufficientResolution : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr double kSimplexSumTol = 1e-12;

/// A point of the continuous simplex: entries in [0,1], summing to 1
/// within kSimplexSumTol. Immutable after construction.
class SimplexVector {
 public:
  explicit SimplexVector(Vec values);
  static SimplexVector uniform(std::size_t n);

  const Vec& values() const { return v_; }
  double operator[](std::size_t i) const { return v_[i]; }
  std::size_t size() const { return v_.size(); }
  bool strictly_positive() const;

 private:
  Vec v_;
};

/// Agent head-counts per strategy; counts/N is the population state on the
/// simplex grid.
class CountVector {
 public:
  CountVector(std::vector<int> counts, int population);

  const std::vector<int>& counts() const { return c_; }
  int population() const { return n_pop_; }
  std::size_t size() const { return c_.size(); }

 private:
  std::vector<int> c_;
  int n_pop_;
};

double kl_divergence(const SimplexVector& x, const SimplexVector& theta);
SimplexVector state_from_counts(const CountVector& counts);
double max_norm(const Vec& v);

double dot(const Vec& a, const Vec& b);
double norm2(const Vec& v);
Vec sub(const Vec& a, const Vec& b);

/// One trajectory record shared by the finite and mean-field simulators.
struct TrajectorySample {
  double t;
  Vec x;
  Vec q;
  double qmax;
};

}  // namespace popdyn
