#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "popdyn/finite_sim.hpp"
#include "popdyn/meanfield.hpp"
#include "popdyn/passivity.hpp"
#include "popdyn/stationary.hpp"

namespace popdyn {

enum class Mode { kFinite, kMeanfield, kStationary, kVerifyBound, kEquilibrium, kSweep };

/// Protocol description before theta resolution ("equilibrium" defers to the
/// game's x*).
struct ProtocolConfig {
  enum class Kind { kSmith, kKldRl } kind = Kind::kKldRl;
  double eta = 0.04;
  std::optional<Vec> theta;  // nullopt = equilibrium x*
  double m_q = 300.0;
  std::optional<double> varrho;  // default 1/((n-1) m_q)

  ProtocolSpec resolve(const GameParams& game) const;
};

struct ArmSpec {
  std::string name;
  ProtocolConfig protocol;
  double lambda = 0.1;
  std::vector<double> lambda_grid;  // empty = just lambda
};

struct MeanfieldBlock {
  std::optional<Vec> x0;  // nullopt = uniform
  bool x0_equilibrium = false;
};

struct StationaryBlock {
  std::size_t population = 10;
  std::optional<Vec> x_star;  // nullopt = equilibrium
  bool write_mu_csv = false;
  std::optional<std::pair<std::size_t, std::size_t>> monte_carlo;  // burn_in, samples
};

struct VerifyBlock {
  std::string target = "theorem1-meanfield";  // or theorem1-finite | premises
  std::size_t premise_samples = 10000;
  std::vector<double> premise_etas = {0.04, 1.0, 10.0};
};

struct SweepBlock {
  std::vector<double> eta;
  std::vector<double> lambda;
  std::vector<std::size_t> population;
  std::vector<int> delay;
};

struct ExperimentConfig {
  Mode mode = Mode::kFinite;
  std::string output_dir = "out";
  std::vector<std::uint64_t> seeds = {1};
  bool charts = false;
  bool write_trajectories = true;
  bool write_events = false;
  bool export_graph = false;
  bool compare_meanfield = false;

  GameParams game = GameParams::reference();
  std::vector<ArmSpec> arms;  // at least one after parsing
  std::size_t population = 10;
  std::optional<std::vector<int>> initial_counts;
  int delay = 10;
  double horizon = 1000.0;
  double ode_step = 0.01;
  double sample_cadence = 0.5;
  Vec q0 = {100.0, 200.0, 300.0};
  double connection_prob = 0.2;
  double observer_fraction = 0.1;
  bool include_self = false;
  bool exact_payoff = false;
  std::string rng_algorithm = "xoshiro256++";

  MeanfieldBlock meanfield;
  StationaryBlock stationary;
  VerifyBlock verify;
  SweepBlock sweep;
};

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config_file(const std::string& path);

/// One (arm, lambda, seed) outcome.
struct SummaryRecord {
  std::string arm;
  std::optional<double> eta;
  double lambda = 0.0;
  std::size_t population = 0;
  int delay = 0;
  std::uint64_t seed = 0;
  double tail_mean = 0.0;
  double tail_sd = 0.0;
  std::optional<double> sup_dev_meanfield;
  std::uint64_t events = 0;
  std::optional<BoundReport> bound;
  bool failed = false;
  std::string error;

  nlohmann::json to_json(const std::string& mode) const;
};

/// Time-average and sd of |q|_inf over the tail window [T/2, T].
std::pair<double, double> tail_stats(const std::vector<TrajectorySample>& samples,
                                     double horizon);

double median(std::vector<double> values);
double quantile(std::vector<double> values, double q);

/// Executes a parsed config; writes artifacts under output_dir. Returns the
/// process exit code (0 ok, 3 on numerical/partial failure).
int execute(const ExperimentConfig& config, unsigned jobs);

struct CliOverrides {
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  unsigned jobs = 0;
};

/// Load + validate + execute; maps ConfigError to exit 2, runtime failures
/// to exit 3.
int run_config_file(const std::string& path, const CliOverrides& overrides,
                    const std::vector<Mode>& allowed_modes);

int cli_main(int argc, char** argv);

// artifact helpers (deterministic formatting, 17 significant digits)
std::string trajectory_csv(const std::vector<TrajectorySample>& samples, std::size_t n);
std::string events_csv(const std::vector<JumpEvent>& events);
void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string format_double(double v);

struct ChartSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};
std::string svg_line_chart(const std::string& title, const std::vector<ChartSeries>& series);

}  // namespace popdyn
