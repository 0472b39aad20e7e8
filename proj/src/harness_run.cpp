#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "popdyn/harness.hpp"

namespace popdyn {

using nlohmann::json;
namespace fs = std::filesystem;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

std::string trajectory_csv(const std::vector<TrajectorySample>& samples, std::size_t n) {
  std::ostringstream os;
  os << "t";
  for (std::size_t i = 1; i <= n; ++i) os << ",X" << i;
  for (std::size_t i = 1; i <= n; ++i) os << ",q" << i;
  os << ",qmax\n";
  for (const auto& s : samples) {
    os << format_double(s.t);
    for (double e : s.x) os << ',' << format_double(e);
    for (double e : s.q) os << ',' << format_double(e);
    os << ',' << format_double(s.qmax) << '\n';
  }
  return os.str();
}

std::string events_csv(const std::vector<JumpEvent>& events) {
  std::ostringstream os;
  os << "t,agent,from,to\n";
  for (const auto& e : events)
    os << format_double(e.t) << ',' << (e.agent + 1) << ',' << (e.from + 1) << ','
       << (e.to + 1) << '\n';
  return os.str();
}

std::pair<double, double> tail_stats(const std::vector<TrajectorySample>& samples,
                                     double horizon) {
  std::vector<double> tail;
  for (const auto& s : samples)
    if (s.t >= 0.5 * horizon - 1e-9) tail.push_back(s.qmax);
  if (tail.empty()) throw std::runtime_error("tail_stats: no samples in the tail window");
  double mean = 0.0;
  for (double v : tail) mean += v;
  mean /= static_cast<double>(tail.size());
  double var = 0.0;
  for (double v : tail) var += (v - mean) * (v - mean);
  var = tail.size() > 1 ? var / static_cast<double>(tail.size() - 1) : 0.0;
  return {mean, std::sqrt(var)};
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  const double w = pos - static_cast<double>(lo);
  return values[lo] * (1.0 - w) + values[hi] * w;
}

double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

json SummaryRecord::to_json(const std::string& mode) const {
  json j;
  j["schema_version"] = 1;
  j["mode"] = mode;
  j["arm"] = arm;
  if (eta)
    j["eta"] = *eta;
  else
    j["eta"] = nullptr;
  j["lambda"] = lambda;
  j["population"] = population;
  j["delay"] = delay;
  j["seed"] = seed;
  j["tail_mean"] = tail_mean;
  j["tail_sd"] = tail_sd;
  if (sup_dev_meanfield)
    j["sup_dev_meanfield"] = *sup_dev_meanfield;
  else
    j["sup_dev_meanfield"] = nullptr;
  j["events"] = events;
  if (bound) {
    j["bound"] = json::parse(bound_report_json(*bound));
  } else {
    j["bound"] = nullptr;
  }
  j["failed"] = failed;
  j["error"] = error;
  return j;
}

std::string svg_line_chart(const std::string& title, const std::vector<ChartSeries>& series) {
  const int width = 820, height = 520, ml = 70, mr = 150, mt = 40, mb = 50;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  if (!(xmax > xmin)) xmax = xmin + 1.0;
  if (!(ymax > ymin)) ymax = ymin + 1.0;
  ymin = std::min(ymin, 0.0);
  const double pw = width - ml - mr, ph = height - mt - mb;
  auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) { return mt + ph - (y - ymin) / (ymax - ymin) * ph; };
  const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
     << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << ml << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\">"
     << title << "</text>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw << "\" y2=\""
     << mt + ph << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << mt + ph
     << "\" stroke=\"black\"/>\n";
  char buf[64];
  for (int k = 0; k <= 5; ++k) {
    const double xv = xmin + (xmax - xmin) * k / 5.0;
    const double yv = ymin + (ymax - ymin) * k / 5.0;
    std::snprintf(buf, sizeof buf, "%.6g", xv);
    os << "<text x=\"" << px(xv) << "\" y=\"" << mt + ph + 18
       << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" << buf
       << "</text>\n";
    std::snprintf(buf, sizeof buf, "%.6g", yv);
    os << "<text x=\"" << ml - 8 << "\" y=\"" << py(yv) + 4
       << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" << buf
       << "</text>\n";
    os << "<line x1=\"" << px(xv) << "\" y1=\"" << mt + ph << "\" x2=\"" << px(xv)
       << "\" y2=\"" << mt + ph + 4 << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << ml - 4 << "\" y1=\"" << py(yv) << "\" x2=\"" << ml << "\" y2=\""
       << py(yv) << "\" stroke=\"black\"/>\n";
  }
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    os << "<polyline fill=\"none\" stroke=\"" << palette[si % 6]
       << "\" stroke-width=\"1.2\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(s.x[i]), py(s.y[i]));
      os << buf;
    }
    os << "\"/>\n";
    os << "<text x=\"" << ml + pw + 12 << "\" y=\"" << mt + 16 + 18 * si
       << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"" << palette[si % 6] << "\">"
       << s.label << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

namespace {

void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs == 0) jobs = std::thread::hardware_concurrency();
  if (jobs == 0) jobs = 1;
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, count));
  if (jobs <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(jobs);
  for (unsigned k = 0; k < jobs; ++k)
    pool.emplace_back([&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) break;
        fn(i);
      }
    });
  for (auto& th : pool) th.join();
}

SimConfig make_sim_config(const ExperimentConfig& c, const ArmSpec& arm, double lambda,
                          std::uint64_t seed, bool force_events) {
  SimConfig s;
  s.N = c.population;
  s.protocol = arm.protocol.resolve(c.game);
  s.lambda = lambda;
  s.delay = c.delay;
  s.horizon = c.horizon;
  s.ode_step = c.ode_step;
  s.sample_cadence = c.sample_cadence;
  s.game = c.game;
  s.q0 = c.q0;
  s.graph_prob = c.connection_prob;
  s.observer_fraction = c.observer_fraction;
  s.include_self = c.include_self;
  s.exact_payoff = c.exact_payoff;
  s.rng = RngSpec{c.rng_algorithm, seed, 0};
  s.initial_counts = c.initial_counts;
  s.record_events = c.write_events || c.compare_meanfield || force_events;
  return s;
}

std::string run_tag(const ArmSpec& arm, double lambda, std::uint64_t seed) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%g", lambda);
  return arm.name + "_lam" + buf + "_s" + std::to_string(seed);
}

SimplexVector resolve_x0(const ExperimentConfig& c) {
  if (c.meanfield.x0) return SimplexVector(*c.meanfield.x0);
  if (c.meanfield.x0_equilibrium) return solve_equilibrium(c.game).x_star;
  return SimplexVector::uniform(c.game.n());
}

MeanFieldConfig make_meanfield_config(const ExperimentConfig& c, const ArmSpec& arm,
                                      double lambda, const SimplexVector& x0) {
  MeanFieldConfig m;
  m.protocol = arm.protocol.resolve(c.game);
  m.lambda = lambda;
  m.game = c.game;
  m.q0 = c.q0;
  m.x0 = x0;
  m.delay = static_cast<double>(c.delay);
  m.horizon = c.horizon;
  m.step = c.ode_step;
  m.sample_cadence = c.sample_cadence;
  return m;
}

/// sup_t |X^(t) - x(t)|_inf on the mean-field sample grid.
double sup_deviation(const JumpTrajectory& traj, const MeanFieldTrajectory& mf) {
  const InterpolatedPath path(traj);
  const double t_last = path.last_arrival();
  double worst = 0.0;
  for (const auto& s : mf.samples) {
    const Vec xh = path.interpolated(std::min(s.t, t_last));
    for (std::size_t i = 0; i < xh.size(); ++i)
      worst = std::max(worst, std::abs(xh[i] - s.x[i]));
  }
  return worst;
}

struct FiniteJob {
  std::size_t arm_index;
  double lambda;
  std::uint64_t seed;
};

std::vector<FiniteJob> enumerate_jobs(const ExperimentConfig& c) {
  std::vector<FiniteJob> jobs;
  for (std::size_t a = 0; a < c.arms.size(); ++a) {
    const auto& grid = c.arms[a].lambda_grid;
    const std::vector<double> lambdas = grid.empty() ? std::vector<double>{c.arms[a].lambda} : grid;
    for (double l : lambdas)
      for (std::uint64_t s : c.seeds) jobs.push_back({a, l, s});
  }
  return jobs;
}

SummaryRecord base_record(const ExperimentConfig& c, const ArmSpec& arm, double lambda,
                          std::uint64_t seed) {
  SummaryRecord rec;
  rec.arm = arm.name;
  if (arm.protocol.kind == ProtocolConfig::Kind::kKldRl) rec.eta = arm.protocol.eta;
  rec.lambda = lambda;
  rec.population = c.population;
  rec.delay = c.delay;
  rec.seed = seed;
  return rec;
}

void write_summary(const fs::path& dir, const std::string& mode,
                   const std::vector<SummaryRecord>& records) {
  std::ostringstream os;
  for (const auto& r : records) os << r.to_json(mode).dump() << '\n';
  write_text_file(dir / "summary.jsonl", os.str());
}

int run_finite_mode(const ExperimentConfig& c, unsigned jobs_n) {
  const fs::path dir(c.output_dir);
  const std::vector<FiniteJob> jobs = enumerate_jobs(c);
  std::vector<SummaryRecord> records(jobs.size());

  parallel_for(jobs.size(), jobs_n, [&](std::size_t i) {
    const FiniteJob& job = jobs[i];
    const ArmSpec& arm = c.arms[job.arm_index];
    SummaryRecord rec = base_record(c, arm, job.lambda, job.seed);
    try {
      const SimConfig sim = make_sim_config(c, arm, job.lambda, job.seed, false);
      const JumpTrajectory traj = run_finite(sim);
      std::tie(rec.tail_mean, rec.tail_sd) = tail_stats(traj.samples, c.horizon);
      rec.events = traj.arrivals;
      if (c.compare_meanfield) {
        SimplexVector x0 = state_from_counts(
            CountVector(traj.initial_counts, static_cast<int>(traj.N)));
        MeanFieldConfig mf = make_meanfield_config(c, arm, job.lambda, x0);
        rec.sup_dev_meanfield = sup_deviation(traj, integrate_closed_loop(mf));
      }
      const std::string tag = run_tag(arm, job.lambda, job.seed);
      if (c.write_trajectories)
        write_text_file(dir / ("traj_" + tag + ".csv"), trajectory_csv(traj.samples, traj.n));
      if (c.write_events)
        write_text_file(dir / ("events_" + tag + ".csv"), events_csv(traj.events));
      if (c.export_graph && !c.exact_payoff) {
        Rng rg(job.seed, rng_stream::kGraph);
        write_text_file(dir / ("graph_" + tag + ".txt"),
                        sample_er_digraph(traj.N, c.connection_prob, rg).edge_list());
      }
      if (c.charts) {
        ChartSeries series{tag, {}, {}};
        for (const auto& s : traj.samples) {
          series.x.push_back(s.t);
          series.y.push_back(s.qmax);
        }
        write_text_file(dir / ("chart_" + tag + ".svg"),
                        svg_line_chart("max remaining jobs", {series}));
      }
    } catch (const std::exception& e) {
      rec.failed = true;
      rec.error = e.what();
      rec.tail_mean = rec.tail_sd = std::numeric_limits<double>::quiet_NaN();
    }
    records[i] = std::move(rec);
  });

  write_summary(dir, "finite", records);

  // per-arm calibration digest: the grid lambda with the lowest median tail mean
  json comparison = json::array();
  for (std::size_t a = 0; a < c.arms.size(); ++a) {
    const auto& grid = c.arms[a].lambda_grid;
    const std::vector<double> lambdas = grid.empty() ? std::vector<double>{c.arms[a].lambda} : grid;
    double best_lambda = lambdas.front();
    double best_median = std::numeric_limits<double>::infinity();
    double best_sd_median = std::numeric_limits<double>::quiet_NaN();
    for (double l : lambdas) {
      std::vector<double> tm, ts;
      for (std::size_t i = 0; i < jobs.size(); ++i)
        if (jobs[i].arm_index == a && jobs[i].lambda == l && !records[i].failed) {
          tm.push_back(records[i].tail_mean);
          ts.push_back(records[i].tail_sd);
        }
      if (tm.empty()) continue;
      const double med = median(tm);
      if (med < best_median) {
        best_median = med;
        best_lambda = l;
        best_sd_median = median(ts);
      }
    }
    json entry;
    entry["schema_version"] = 1;
    entry["name"] = c.arms[a].name;
    entry["lambda"] = best_lambda;
    entry["tail_mean_median"] = best_median;
    entry["tail_sd_median"] = best_sd_median;
    comparison.push_back(entry);
  }
  if (c.arms.size() > 1 || !c.arms.front().lambda_grid.empty())
    write_text_file(dir / "comparison.json", comparison.dump(2) + "\n");

  return std::any_of(records.begin(), records.end(),
                     [](const SummaryRecord& r) { return r.failed; })
             ? 3
             : 0;
}

int run_meanfield_mode(const ExperimentConfig& c) {
  const fs::path dir(c.output_dir);
  const ArmSpec& arm = c.arms.front();
  MeanFieldConfig mf = make_meanfield_config(c, arm, arm.lambda, resolve_x0(c));
  const MeanFieldTrajectory traj = integrate_closed_loop(mf);
  if (c.write_trajectories)
    write_text_file(dir / "traj_meanfield.csv", trajectory_csv(traj.samples, c.game.n()));
  if (c.charts) {
    ChartSeries series{"meanfield", {}, {}};
    for (const auto& s : traj.samples) {
      series.x.push_back(s.t);
      series.y.push_back(s.qmax);
    }
    write_text_file(dir / "chart_meanfield.svg", svg_line_chart("max remaining jobs", {series}));
  }
  SummaryRecord rec = base_record(c, arm, arm.lambda, 0);
  std::tie(rec.tail_mean, rec.tail_sd) = tail_stats(traj.samples, c.horizon);
  write_summary(dir, "meanfield", {rec});
  return 0;
}

int run_equilibrium_mode(const ExperimentConfig& c) {
  const Equilibrium eq = solve_equilibrium(c.game);
  double feas = 0.0, resid = 0.0;
  for (std::size_t i = 0; i < c.game.n(); ++i) {
    feas += std::pow(c.game.w[i] / c.game.R[i], 1.0 / c.game.beta[i]);
    resid = std::max(resid, std::abs(completion_rate(eq.q_bar, eq.x_star[i], c.game, i) -
                                     c.game.w[i]));
  }
  json j;
  j["schema_version"] = 1;
  j["feasibility_sum"] = feas;
  j["q_bar"] = eq.q_bar;
  j["q_star"] = eq.q_star;
  j["residual_max"] = resid;
  j["x_star"] = eq.x_star.values();
  write_text_file(fs::path(c.output_dir) / "equilibrium.json", j.dump(2) + "\n");
  return 0;
}

int run_stationary_mode(const ExperimentConfig& c) {
  const fs::path dir(c.output_dir);
  const SimplexVector xstar = c.stationary.x_star ? SimplexVector(*c.stationary.x_star)
                                                  : solve_equilibrium(c.game).x_star;
  const StateSpace space = enumerate_states(c.stationary.population, xstar.size());
  const StationaryReport rep = stationary_analysis(xstar, space);
  write_text_file(dir / "stationary.json", stationary_report_json(rep) + "\n");
  if (c.stationary.write_mu_csv) {
    std::ostringstream os;
    for (std::size_t i = 1; i <= space.n; ++i) os << 'c' << i << ',';
    os << "mu\n";
    for (std::size_t s = 0; s < space.size(); ++s) {
      for (int cnt : space.states[s]) os << cnt << ',';
      os << format_double(rep.mu[s]) << '\n';
    }
    write_text_file(dir / "mu.csv", os.str());
  }
  if (c.stationary.monte_carlo) {
    Rng rng(c.seeds.front(), rng_stream::kChain);
    const McMoments mc = monte_carlo_moments(xstar, c.stationary.population,
                                             c.stationary.monte_carlo->first,
                                             c.stationary.monte_carlo->second, rng);
    json j;
    j["schema_version"] = 1;
    j["batches"] = mc.batches;
    j["mean"] = mc.mean;
    j["mean_stderr"] = mc.mean_stderr;
    j["sum_var"] = mc.sum_var;
    j["sum_var_stderr"] = mc.sum_var_stderr;
    write_text_file(dir / "mc.json", j.dump(2) + "\n");
  }
  return 0;
}

int run_verify_mode(const ExperimentConfig& c, unsigned jobs_n) {
  const fs::path dir(c.output_dir);
  const ArmSpec& arm = c.arms.front();
  if (arm.protocol.kind != ProtocolConfig::Kind::kKldRl)
    throw ConfigError("verify-bound requires a kld-rl protocol (the bound is vacuous for smith)");
  const ProtocolSpec proto = arm.protocol.resolve(c.game);
  const auto& kld = std::get<KldRlSpec>(proto);
  const StorageSpec storage{kld.eta, kld.theta};
  const AntistorageSpec anti = AntistorageSpec::for_game(c.game);

  if (c.verify.target == "theorem1-meanfield") {
    MeanFieldConfig mf = make_meanfield_config(c, arm, arm.lambda, resolve_x0(c));
    const MeanFieldTrajectory traj = integrate_closed_loop(mf);
    const BoundReport rep =
        check_theorem1(bound_input_from_meanfield(traj), arm.lambda, kld.eta, storage, anti);
    write_text_file(dir / "bound_meanfield.json", bound_report_json(rep) + "\n");
    return 0;
  }

  if (c.verify.target == "theorem1-finite") {
    std::vector<SummaryRecord> records(c.seeds.size());
    parallel_for(c.seeds.size(), jobs_n, [&](std::size_t i) {
      SummaryRecord rec = base_record(c, arm, arm.lambda, c.seeds[i]);
      try {
        const SimConfig sim = make_sim_config(c, arm, arm.lambda, c.seeds[i], true);
        const JumpTrajectory traj = run_finite(sim);
        std::tie(rec.tail_mean, rec.tail_sd) = tail_stats(traj.samples, c.horizon);
        rec.events = traj.arrivals;
        const BoundInput input =
            bound_input_from_finite(traj, kld.eta, kld.theta, c.exact_payoff);
        rec.bound = check_theorem1(input, arm.lambda, kld.eta, storage, anti);
        write_text_file(dir / ("bound_s" + std::to_string(c.seeds[i]) + ".json"),
                        bound_report_json(*rec.bound) + "\n");
      } catch (const std::exception& e) {
        rec.failed = true;
        rec.error = e.what();
        rec.tail_mean = rec.tail_sd = std::numeric_limits<double>::quiet_NaN();
      }
      records[i] = std::move(rec);
    });
    write_summary(dir, "verify-bound", records);
    return std::any_of(records.begin(), records.end(),
                       [](const SummaryRecord& r) { return r.failed; })
               ? 3
               : 0;
  }

  // premises: random interior sweep of the two gradient conditions
  Rng rng(c.seeds.front(), rng_stream::kChain);
  const std::size_t n = c.game.n();
  std::vector<PremisePoint> pts(c.verify.premise_samples);
  for (auto& pt : pts) {
    pt.p.resize(n);
    pt.q.resize(n);
    Vec x(n);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      pt.p[i] = -10.0 + 20.0 * rng.uniform01();
      pt.q[i] = 300.0 * rng.uniform01();
      x[i] = 1e-3 + rng.exponential(1.0);
      sum += x[i];
    }
    for (double& e : x) e /= sum;
    pt.x = std::move(x);
  }
  json out;
  out["schema_version"] = 1;
  out["etas"] = c.verify.premise_etas;
  Vec worst19, worst20;
  for (double eta : c.verify.premise_etas) {
    const StorageSpec sp{eta, kld.theta};
    const PremiseReport rep = check_premises(pts, sp, anti);
    worst19.push_back(rep.worst_19a);
    worst20.push_back(rep.worst_20a);
  }
  out["worst_19a"] = worst19;
  out["worst_20a"] = worst20;
  write_text_file(dir / "premises.json", out.dump(2) + "\n");
  return 0;
}

int run_sweep_mode(const ExperimentConfig& c, unsigned jobs_n) {
  const fs::path dir(c.output_dir);
  const ArmSpec& base_arm = c.arms.front();
  const bool kld = base_arm.protocol.kind == ProtocolConfig::Kind::kKldRl;

  const std::vector<double> etas =
      !c.sweep.eta.empty() ? c.sweep.eta
                           : std::vector<double>{kld ? base_arm.protocol.eta : 0.0};
  const std::vector<double> lambdas =
      !c.sweep.lambda.empty() ? c.sweep.lambda : std::vector<double>{base_arm.lambda};
  const std::vector<std::size_t> pops =
      !c.sweep.population.empty() ? c.sweep.population : std::vector<std::size_t>{c.population};
  const std::vector<int> delays =
      !c.sweep.delay.empty() ? c.sweep.delay : std::vector<int>{c.delay};

  struct Point {
    double eta, lambda;
    std::size_t population;
    int delay;
  };
  std::vector<Point> points;
  for (double e : etas)
    for (double l : lambdas)
      for (std::size_t p : pops)
        for (int d : delays) points.push_back({e, l, p, d});

  struct Job {
    std::size_t point;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (std::size_t p = 0; p < points.size(); ++p)
    for (std::uint64_t s : c.seeds) jobs.push_back({p, s});

  std::vector<SummaryRecord> records(jobs.size());
  parallel_for(jobs.size(), jobs_n, [&](std::size_t i) {
    const Point& pt = points[jobs[i].point];
    ExperimentConfig local = c;
    local.population = pt.population;
    local.delay = pt.delay;
    ArmSpec arm = base_arm;
    if (kld) arm.protocol.eta = pt.eta;
    SummaryRecord rec = base_record(local, arm, pt.lambda, jobs[i].seed);
    try {
      const SimConfig sim = make_sim_config(local, arm, pt.lambda, jobs[i].seed, false);
      const JumpTrajectory traj = run_finite(sim);
      std::tie(rec.tail_mean, rec.tail_sd) = tail_stats(traj.samples, c.horizon);
      rec.events = traj.arrivals;
      if (c.compare_meanfield) {
        SimplexVector x0 = state_from_counts(
            CountVector(traj.initial_counts, static_cast<int>(traj.N)));
        MeanFieldConfig mf = make_meanfield_config(local, arm, pt.lambda, x0);
        rec.sup_dev_meanfield = sup_deviation(traj, integrate_closed_loop(mf));
      }
    } catch (const std::exception& e) {
      rec.failed = true;
      rec.error = e.what();
      rec.tail_mean = rec.tail_sd = std::numeric_limits<double>::quiet_NaN();
    }
    records[i] = std::move(rec);
  });

  write_summary(dir, "sweep", records);

  std::ostringstream csv;
  csv << "eta,lambda,population,delay,seeds,failed,tail_mean_median,tail_mean_iqr,"
         "tail_sd_median,tail_sd_iqr\n";
  std::size_t total_failed = 0;
  std::ostringstream failures;
  for (std::size_t p = 0; p < points.size(); ++p) {
    std::vector<double> tm, ts;
    std::size_t failed = 0;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      if (jobs[i].point != p) continue;
      if (records[i].failed) {
        ++failed;
        failures << "point " << p << " seed " << records[i].seed << ": " << records[i].error
                 << '\n';
        continue;
      }
      tm.push_back(records[i].tail_mean);
      ts.push_back(records[i].tail_sd);
    }
    total_failed += failed;
    const Point& pt = points[p];
    if (kld)
      csv << format_double(pt.eta);
    csv << ',' << format_double(pt.lambda) << ',' << pt.population << ',' << pt.delay << ','
        << c.seeds.size() << ',' << failed << ',' << format_double(median(tm)) << ','
        << format_double(quantile(tm, 0.75) - quantile(tm, 0.25)) << ','
        << format_double(median(ts)) << ','
        << format_double(quantile(ts, 0.75) - quantile(ts, 0.25)) << '\n';
  }
  write_text_file(dir / "sweep.csv", csv.str());
  if (total_failed > 0) write_text_file(dir / "failures.txt", failures.str());
  return total_failed > 0 ? 3 : 0;
}

}  // namespace

int execute(const ExperimentConfig& config, unsigned jobs) {
  fs::create_directories(config.output_dir);
  switch (config.mode) {
    case Mode::kFinite:
      return run_finite_mode(config, jobs);
    case Mode::kMeanfield:
      return run_meanfield_mode(config);
    case Mode::kEquilibrium:
      return run_equilibrium_mode(config);
    case Mode::kStationary:
      return run_stationary_mode(config);
    case Mode::kVerifyBound:
      return run_verify_mode(config, jobs);
    case Mode::kSweep:
      return run_sweep_mode(config, jobs);
  }
  return 3;
}

int run_config_file(const std::string& path, const CliOverrides& overrides,
                    const std::vector<Mode>& allowed_modes) {
  try {
    ExperimentConfig config = load_config_file(path);
    if (!allowed_modes.empty() &&
        std::find(allowed_modes.begin(), allowed_modes.end(), config.mode) ==
            allowed_modes.end())
      throw ConfigError("config mode is not valid for this subcommand");
    if (overrides.out) config.output_dir = *overrides.out;
    if (overrides.seed) config.seeds = {*overrides.seed};
    const auto start = std::chrono::steady_clock::now();
    const int code = execute(config, overrides.jobs);
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::steady_clock::now() - start)
                        .count();
    std::cerr << "[popdyn] " << path << " finished in " << ms << " ms, exit " << code << "\n";
    return code;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace popdyn
