#include <fstream>
#include <set>

#include "popdyn/harness.hpp"

namespace popdyn {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                    const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      throw ConfigError("unknown key \"" + it.key() + "\" in " + where);
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for \"") + key + "\": " + e.what());
  }
}

Vec get_vec(const json& obj, const char* key, Vec fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_array()) throw ConfigError(std::string(key) + " must be an array");
  return obj.at(key).get<Vec>();
}

Mode parse_mode(const std::string& s) {
  if (s == "finite") return Mode::kFinite;
  if (s == "meanfield") return Mode::kMeanfield;
  if (s == "stationary") return Mode::kStationary;
  if (s == "verify-bound") return Mode::kVerifyBound;
  if (s == "equilibrium") return Mode::kEquilibrium;
  if (s == "sweep") return Mode::kSweep;
  throw ConfigError("unknown mode \"" + s + "\"");
}

ProtocolConfig parse_protocol(const json& j, const std::string& where) {
  reject_unknown(j, {"kind", "eta", "theta", "m_q", "varrho"}, where);
  ProtocolConfig p;
  const std::string kind = get_or<std::string>(j, "kind", "kld-rl");
  if (kind == "kld-rl") {
    p.kind = ProtocolConfig::Kind::kKldRl;
    p.eta = get_or<double>(j, "eta", 0.04);
    if (!(p.eta > 0.0)) throw ConfigError(where + ": eta must be positive");
    if (j.contains("theta")) {
      const json& th = j.at("theta");
      if (th.is_string()) {
        if (th.get<std::string>() != "equilibrium")
          throw ConfigError(where + ": theta must be an array or \"equilibrium\"");
      } else {
        p.theta = th.get<Vec>();
      }
    }
    if (j.contains("m_q") || j.contains("varrho"))
      throw ConfigError(where + ": m_q/varrho are smith-only keys");
  } else if (kind == "smith") {
    p.kind = ProtocolConfig::Kind::kSmith;
    p.m_q = get_or<double>(j, "m_q", 300.0);
    if (!(p.m_q > 0.0)) throw ConfigError(where + ": m_q must be positive");
    if (j.contains("varrho")) p.varrho = j.at("varrho").get<double>();
    if (j.contains("eta") || j.contains("theta"))
      throw ConfigError(where + ": eta/theta are kld-rl-only keys");
  } else {
    throw ConfigError(where + ": protocol kind must be \"kld-rl\" or \"smith\"");
  }
  return p;
}

}  // namespace

ProtocolSpec ProtocolConfig::resolve(const GameParams& game) const {
  if (kind == Kind::kSmith)
    return make_smith(varrho ? *varrho : smith_varrho_for(game.n(), m_q));
  SimplexVector th = theta ? SimplexVector(*theta) : solve_equilibrium(game).x_star;
  return make_kld_rl(eta, std::move(th));
}

ExperimentConfig parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("config root must be an object");
  reject_unknown(j,
                 {"schema_version", "mode", "output_dir", "seeds", "charts",
                  "write_trajectories", "write_events", "export_graph", "compare_meanfield",
                  "game", "protocol", "lambda", "population", "initial_strategy", "delay",
                  "horizon", "ode_step", "sample_cadence", "q0", "network",
                  "payoff_observation", "rng", "arms", "meanfield", "stationary", "verify",
                  "sweep"},
                 "config root");
  if (get_or<int>(j, "schema_version", 0) != 1)
    throw ConfigError("schema_version must be 1");
  if (!j.contains("mode")) throw ConfigError("mode is required");

  ExperimentConfig c;
  c.mode = parse_mode(j.at("mode").get<std::string>());
  c.output_dir = get_or<std::string>(j, "output_dir", "out");
  if (j.contains("seeds")) {
    c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (c.seeds.empty()) throw ConfigError("seeds must be nonempty");
  }
  c.charts = get_or<bool>(j, "charts", false);
  c.write_trajectories =
      get_or<bool>(j, "write_trajectories", c.mode != Mode::kSweep);
  c.write_events = get_or<bool>(j, "write_events", false);
  c.export_graph = get_or<bool>(j, "export_graph", false);
  c.compare_meanfield = get_or<bool>(j, "compare_meanfield", false);

  if (j.contains("game")) {
    const json& g = j.at("game");
    reject_unknown(g, {"R", "alpha", "beta", "w"}, "game");
    c.game.R = get_vec(g, "R", c.game.R);
    c.game.alpha = get_vec(g, "alpha", c.game.alpha);
    c.game.beta = get_vec(g, "beta", c.game.beta);
    c.game.w = get_vec(g, "w", c.game.w);
  }
  c.game.validate();

  ArmSpec base;
  base.name = "default";
  if (j.contains("protocol")) base.protocol = parse_protocol(j.at("protocol"), "protocol");
  base.lambda = get_or<double>(j, "lambda", 0.1);
  if (!(base.lambda >= 0.0)) throw ConfigError("lambda must be >= 0");

  if (j.contains("arms")) {
    if (c.mode != Mode::kFinite)
      throw ConfigError("arms are only valid in finite mode");
    for (const json& a : j.at("arms")) {
      reject_unknown(a, {"name", "protocol", "lambda", "lambda_grid"}, "arm");
      ArmSpec arm;
      arm.name = a.at("name").get<std::string>();
      arm.protocol = a.contains("protocol") ? parse_protocol(a.at("protocol"), "arm " + arm.name)
                                            : base.protocol;
      arm.lambda = get_or<double>(a, "lambda", base.lambda);
      if (a.contains("lambda_grid")) {
        arm.lambda_grid = a.at("lambda_grid").get<std::vector<double>>();
        for (double l : arm.lambda_grid)
          if (!(l > 0.0)) throw ConfigError("lambda_grid entries must be positive");
      }
      c.arms.push_back(std::move(arm));
    }
    if (c.arms.empty()) throw ConfigError("arms must be nonempty");
    std::set<std::string> names;
    for (const auto& a : c.arms)
      if (!names.insert(a.name).second) throw ConfigError("duplicate arm name " + a.name);
  } else {
    base.name = (base.protocol.kind == ProtocolConfig::Kind::kSmith) ? "smith" : "kld-rl";
    c.arms.push_back(base);
  }

  c.population = get_or<std::size_t>(j, "population", 10);
  if (c.population < 1) throw ConfigError("population must be >= 1");
  if (j.contains("initial_strategy")) {
    const json& is = j.at("initial_strategy");
    if (is.is_string()) {
      if (is.get<std::string>() != "uniform-random")
        throw ConfigError("initial_strategy must be \"uniform-random\" or a count array");
    } else {
      c.initial_counts = is.get<std::vector<int>>();
    }
  }
  c.delay = get_or<int>(j, "delay", 10);
  if (c.delay < 0) throw ConfigError("delay must be a nonnegative integer");
  c.horizon = get_or<double>(j, "horizon", 1000.0);
  c.ode_step = get_or<double>(j, "ode_step", 0.01);
  c.sample_cadence = get_or<double>(j, "sample_cadence", 0.5);
  c.q0 = get_vec(j, "q0", c.q0);

  if (j.contains("network")) {
    const json& nw = j.at("network");
    reject_unknown(nw, {"connection_prob", "observer_fraction", "include_self"}, "network");
    c.connection_prob = get_or<double>(nw, "connection_prob", 0.2);
    c.observer_fraction = get_or<double>(nw, "observer_fraction", 0.1);
    c.include_self = get_or<bool>(nw, "include_self", false);
  }
  const std::string obs = get_or<std::string>(j, "payoff_observation", "estimated");
  if (obs == "exact")
    c.exact_payoff = true;
  else if (obs != "estimated")
    throw ConfigError("payoff_observation must be \"estimated\" or \"exact\"");

  if (j.contains("rng")) {
    const json& r = j.at("rng");
    reject_unknown(r, {"algorithm"}, "rng");
    c.rng_algorithm = get_or<std::string>(r, "algorithm", "xoshiro256++");
  }
  if (c.rng_algorithm != "xoshiro256++")
    throw ConfigError("rng.algorithm must be \"xoshiro256++\"");

  if (j.contains("meanfield")) {
    const json& m = j.at("meanfield");
    reject_unknown(m, {"x0"}, "meanfield");
    if (m.contains("x0")) {
      const json& x0 = m.at("x0");
      if (x0.is_string()) {
        const std::string s = x0.get<std::string>();
        if (s == "equilibrium")
          c.meanfield.x0_equilibrium = true;
        else if (s != "uniform")
          throw ConfigError("meanfield.x0 must be \"uniform\", \"equilibrium\" or an array");
      } else {
        c.meanfield.x0 = x0.get<Vec>();
      }
    }
  }

  if (j.contains("stationary")) {
    const json& s = j.at("stationary");
    reject_unknown(s, {"population", "x_star", "write_mu_csv", "monte_carlo"}, "stationary");
    c.stationary.population = get_or<std::size_t>(s, "population", c.population);
    if (s.contains("x_star")) {
      const json& xs = s.at("x_star");
      if (xs.is_string()) {
        if (xs.get<std::string>() != "equilibrium")
          throw ConfigError("stationary.x_star must be \"equilibrium\" or an array");
      } else {
        c.stationary.x_star = xs.get<Vec>();
      }
    }
    c.stationary.write_mu_csv = get_or<bool>(s, "write_mu_csv", false);
    if (s.contains("monte_carlo")) {
      const json& mc = s.at("monte_carlo");
      reject_unknown(mc, {"burn_in", "samples"}, "stationary.monte_carlo");
      c.stationary.monte_carlo = {get_or<std::size_t>(mc, "burn_in", 10000),
                                  get_or<std::size_t>(mc, "samples", 100000)};
    }
  }

  if (j.contains("verify")) {
    const json& v = j.at("verify");
    reject_unknown(v, {"target", "premise_samples", "premise_etas"}, "verify");
    c.verify.target = get_or<std::string>(v, "target", "theorem1-meanfield");
    if (c.verify.target != "theorem1-meanfield" && c.verify.target != "theorem1-finite" &&
        c.verify.target != "premises")
      throw ConfigError("verify.target must be theorem1-meanfield, theorem1-finite or premises");
    c.verify.premise_samples = get_or<std::size_t>(v, "premise_samples", 10000);
    if (v.contains("premise_etas")) c.verify.premise_etas = v.at("premise_etas").get<Vec>();
  }

  if (j.contains("sweep")) {
    const json& s = j.at("sweep");
    reject_unknown(s, {"eta", "lambda", "population", "delay"}, "sweep");
    if (s.contains("eta")) c.sweep.eta = s.at("eta").get<std::vector<double>>();
    if (s.contains("lambda")) c.sweep.lambda = s.at("lambda").get<std::vector<double>>();
    if (s.contains("population"))
      c.sweep.population = s.at("population").get<std::vector<std::size_t>>();
    if (s.contains("delay")) c.sweep.delay = s.at("delay").get<std::vector<int>>();
    const std::size_t product = std::max<std::size_t>(1, c.sweep.eta.size()) *
                                std::max<std::size_t>(1, c.sweep.lambda.size()) *
                                std::max<std::size_t>(1, c.sweep.population.size()) *
                                std::max<std::size_t>(1, c.sweep.delay.size());
    if (product > 10000) throw ConfigError("sweep axis product exceeds 1e4 points");
    if (!c.sweep.eta.empty() && c.arms.front().protocol.kind != ProtocolConfig::Kind::kKldRl)
      throw ConfigError("eta axis requires a kld-rl protocol");
  }
  if (c.mode == Mode::kSweep && j.contains("arms"))
    throw ConfigError("sweep mode does not accept arms");

  // basic numeric gates shared by the simulating modes
  if (!(c.horizon > 0.0)) throw ConfigError("horizon must be positive");
  if (!(c.ode_step > 0.0 && c.ode_step <= 0.1))
    throw ConfigError("ode_step must be in (0, 0.1]");
  if (!(c.sample_cadence > 0.0)) throw ConfigError("sample_cadence must be positive");
  if (c.q0.size() != c.game.n()) throw ConfigError("q0 length must match the task count");
  for (double e : c.q0)
    if (!(e >= 0.0)) throw ConfigError("q0 must be nonnegative");
  if (!(c.connection_prob > 0.0 && c.connection_prob <= 1.0))
    throw ConfigError("network.connection_prob must be in (0,1]");
  if (!(c.observer_fraction > 0.0 && c.observer_fraction <= 1.0))
    throw ConfigError("network.observer_fraction must be in (0,1]");
  return c;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return parse_config(j);
}

}  // namespace popdyn
