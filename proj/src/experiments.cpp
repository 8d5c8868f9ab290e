#include "mfc/experiments.hpp"

#include "mfc/baselines.hpp"
#include "mfc/policy_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

namespace mfc::experiments {

using Json = nlohmann::ordered_json;

namespace {

constexpr std::uint64_t kConcentrationTag = 0x636f6e63656e7472ull;
constexpr int kResolutionSweep[] = {5, 10, 20, 40};
constexpr double kSweepBudgetBytes = 256.0 * 1024 * 1024;

std::string join_path(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

void reject_unknown_keys(const Json& object, const std::string& path,
                         std::initializer_list<const char*> allowed) {
  if (!object.is_object())
    throw ConfigError((path.empty() ? std::string("<root>") : path) + ": expected an object");
  for (const auto& [key, value] : object.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* a) { return key == a; });
    if (!known) throw ConfigError(join_path(path, key) + ": unknown key");
  }
}

template <typename T>
T read_value(const Json& object, const std::string& key, const std::string& path, T fallback) {
  if (!object.contains(key)) return fallback;
  const Json& node = object.at(key);
  try {
    if constexpr (std::is_same_v<T, double>) {
      if (!node.is_number()) throw ConfigError(join_path(path, key) + ": expected a number");
    } else if constexpr (std::is_integral_v<T>) {
      if (!node.is_number_integer())
        throw ConfigError(join_path(path, key) + ": expected an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (node.is_number_integer() && !node.is_number_unsigned())
          throw ConfigError(join_path(path, key) + ": expected a nonnegative integer");
      }
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!node.is_string()) throw ConfigError(join_path(path, key) + ": expected a string");
    }
    return node.get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(join_path(path, key) + ": " + e.what());
  }
}

template <typename T>
std::vector<T> read_list(const Json& object, const std::string& key, const std::string& path,
                         std::vector<T> fallback, std::size_t broadcast = 0) {
  if (!object.contains(key)) return fallback;
  const Json& node = object.at(key);
  const std::string where = join_path(path, key);
  if (broadcast > 0 && node.is_number()) {
    Json wrapper = Json::object();
    wrapper["v"] = node;
    return std::vector<T>(broadcast, read_value<T>(wrapper, "v", where, T{}));
  }
  if (!node.is_array()) throw ConfigError(where + ": expected a list");
  std::vector<T> values;
  for (std::size_t i = 0; i < node.size(); ++i) {
    Json wrapper = Json::object();
    wrapper["v"] = node[i];
    values.push_back(read_value<T>(wrapper, "v", where + "[" + std::to_string(i) + "]", T{}));
  }
  return values;
}

std::vector<int> parse_key_list(const std::string& key, const std::string& where) {
  try {
    return queue::parse_index_list(key);
  } catch (const DomainError& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

void validate(const ExperimentConfig& c) {
  try {
    c.queue.validate();
  } catch (const DomainError& e) {
    throw ConfigError(std::string("queue: ") + e.what());
  }
  if (!(c.gamma > 0.0 && c.gamma < 1.0)) throw ConfigError("gamma: must lie in (0, 1)");
  if (c.grid_resolution < 1) throw ConfigError("solver.grid_resolution: must be >= 1");
  if (c.grid_cap < 1) throw ConfigError("solver.grid_cap: must be >= 1");
  if (!(c.solver_tol > 0.0)) throw ConfigError("solver.tol: must be > 0");
  if (c.episodes < 1) throw ConfigError("simulation.episodes: must be >= 1");
  if (!(c.tail_eps > 0.0)) throw ConfigError("simulation.tail_eps: must be > 0");
  if (c.n_list.empty()) throw ConfigError("simulation.n_list: must not be empty");
  for (auto n : c.n_list)
    if (n < 1) throw ConfigError("simulation.n_list: agent counts must be >= 1");
  if (c.concentration_trials < 1000) throw ConfigError("concentration.trials: must be >= 1000");
  for (auto n : c.concentration_n_list)
    if (n < 1) throw ConfigError("concentration.n_list: agent counts must be >= 1");
  for (double e : c.concentration_eps)
    if (!(e > 0.0)) throw ConfigError("concentration.eps: values must be > 0");

  const queue::QueueSpaces spaces(c.queue);
  try {
    build_mu0(c, spaces);
  } catch (const DomainError& e) {
    throw ConfigError(std::string("mu0: ") + e.what());
  }
  try {
    build_mu0_env(c, spaces);
  } catch (const DomainError& e) {
    throw ConfigError(std::string("mu0_env: ") + e.what());
  }
}

std::string csv_header_simulation() {
  return "policy_label,N,episodes,mean_return,std_error,mean_drops_per_step,horizon,seed\n";
}

void write_manifest(const ExperimentConfig& config, const RunOptions& options,
                    const std::string& command, const std::vector<std::string>& outputs) {
  Json manifest;
  manifest["tool"] = "mfc";
  manifest["version"] = kToolVersion;
  manifest["command"] = command;
  manifest["csv_schema_version"] = kCsvSchemaVersion;
  manifest["config_hash"] = config_hash(config);
  manifest["seed"] = config.seed;
  manifest["outputs"] = outputs;
  manifest["config"] = Json::parse(config_to_json(config));
  write_text_file(options.out_dir / ("manifest_" + command + ".json"), manifest.dump(1) + "\n");
}

EpisodeSpec episode_spec(const ExperimentConfig& config, std::int64_t num_agents) {
  EpisodeSpec spec;
  spec.num_agents = num_agents;
  spec.episodes = config.episodes;
  spec.tail_eps = config.tail_eps;
  spec.seed = simulation_seed(config.seed, num_agents);
  return spec;
}

}  // namespace

std::vector<std::pair<queue::AgentState, double>> default_mu0(int num_queues) {
  queue::QueueConfig layout = queue::QueueConfig::defaults(num_queues);
  const queue::QueueSpaces spaces(layout);
  std::vector<std::pair<queue::AgentState, double>> mu0;
  const auto full = spaces.full_access_index();
  const auto others = spaces.num_agent_states() - 1;
  for (Eigen::Index x = 0; x < spaces.num_agent_states(); ++x) {
    double mass;
    if (others == 0)
      mass = 1.0;
    else
      mass = x == full ? 0.6 : 0.4 / static_cast<double>(others);
    mu0.emplace_back(spaces.agent_state(x), mass);
  }
  return mu0;
}

ExperimentConfig parse_config(const std::string& text) {
  Json root;
  try {
    root = Json::parse(text.empty() ? std::string("{}") : text);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("<root>: malformed document: ") + e.what());
  }
  reject_unknown_keys(root, "", {"queue", "gamma", "mu0", "mu0_env", "solver", "simulation",
                                 "concentration", "output_dir", "seed"});
  ExperimentConfig c;

  const Json queue_node = root.value("queue", Json::object());
  reject_unknown_keys(queue_node, "queue", {"num_queues", "capacity", "arrival_rate",
                                            "service_rate", "dt", "drop_penalty", "trunc_eps"});
  const int m = read_value<int>(queue_node, "num_queues", "queue", 2);
  if (m < 1 || m > 16) throw ConfigError("queue.num_queues: must lie in [1, 16]");
  c.queue = queue::QueueConfig::defaults(m);
  const auto width = static_cast<std::size_t>(m);
  c.queue.capacity = read_list<int>(queue_node, "capacity", "queue", c.queue.capacity, width);
  c.queue.arrival_rate = read_value<double>(queue_node, "arrival_rate", "queue", c.queue.arrival_rate);
  c.queue.service_rate =
      read_list<double>(queue_node, "service_rate", "queue", c.queue.service_rate, width);
  c.queue.dt = read_value<double>(queue_node, "dt", "queue", c.queue.dt);
  c.queue.drop_penalty = read_value<double>(queue_node, "drop_penalty", "queue", c.queue.drop_penalty);
  c.queue.trunc_eps = read_value<double>(queue_node, "trunc_eps", "queue", c.queue.trunc_eps);

  c.gamma = read_value<double>(root, "gamma", "", c.gamma);

  if (root.contains("mu0")) {
    const Json& node = root.at("mu0");
    if (!node.is_object()) throw ConfigError("mu0: expected an object of access-set probabilities");
    for (const auto& [key, value] : node.items()) {
      const std::string where = join_path("mu0", key);
      if (!value.is_number()) throw ConfigError(where + ": expected a number");
      c.mu0.emplace_back(parse_key_list(key, where), value.get<double>());
    }
  } else {
    c.mu0 = default_mu0(m);
  }

  if (root.contains("mu0_env")) {
    const Json& node = root.at("mu0_env");
    if (node.is_string()) {
      c.mu0_env_kind = node.get<std::string>();
      if (c.mu0_env_kind != "empty" && c.mu0_env_kind != "uniform")
        throw ConfigError("mu0_env: expected \"empty\", \"uniform\" or an object");
    } else if (node.is_object()) {
      c.mu0_env_kind = "explicit";
      for (const auto& [key, value] : node.items()) {
        const std::string where = join_path("mu0_env", key);
        if (!value.is_number()) throw ConfigError(where + ": expected a number");
        c.mu0_env_points.emplace_back(parse_key_list(key, where), value.get<double>());
      }
    } else {
      throw ConfigError("mu0_env: expected \"empty\", \"uniform\" or an object");
    }
  }

  const Json solver = root.value("solver", Json::object());
  reject_unknown_keys(solver, "solver", {"grid_resolution", "grid_cap", "tol"});
  c.grid_resolution = read_value<int>(solver, "grid_resolution", "solver", c.grid_resolution);
  c.grid_cap = read_value<std::size_t>(solver, "grid_cap", "solver", c.grid_cap);
  c.solver_tol = read_value<double>(solver, "tol", "solver", c.solver_tol);

  const Json sim = root.value("simulation", Json::object());
  reject_unknown_keys(sim, "simulation", {"episodes", "tail_eps", "n_list"});
  c.episodes = read_value<std::int64_t>(sim, "episodes", "simulation", c.episodes);
  c.tail_eps = read_value<double>(sim, "tail_eps", "simulation", c.tail_eps);
  c.n_list = read_list<std::int64_t>(sim, "n_list", "simulation", c.n_list);

  const Json conc = root.value("concentration", Json::object());
  reject_unknown_keys(conc, "concentration", {"trials", "n_list", "eps"});
  c.concentration_trials =
      read_value<std::int64_t>(conc, "trials", "concentration", c.concentration_trials);
  c.concentration_n_list =
      read_list<std::int64_t>(conc, "n_list", "concentration", c.concentration_n_list);
  c.concentration_eps = read_list<double>(conc, "eps", "concentration", c.concentration_eps);

  c.output_dir = read_value<std::string>(root, "output_dir", "", c.output_dir);
  c.seed = read_value<std::uint64_t>(root, "seed", "", c.seed);

  validate(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return parse_config(text);
}

std::string config_to_json(const ExperimentConfig& c) {
  Json root;
  root["queue"] = {{"num_queues", c.queue.num_queues},
                   {"capacity", c.queue.capacity},
                   {"arrival_rate", c.queue.arrival_rate},
                   {"service_rate", c.queue.service_rate},
                   {"dt", c.queue.dt},
                   {"drop_penalty", c.queue.drop_penalty},
                   {"trunc_eps", c.queue.trunc_eps}};
  root["gamma"] = c.gamma;
  Json mu0 = Json::object();
  for (const auto& [access, p] : c.mu0) mu0[queue::format_index_list(access)] = p;
  root["mu0"] = std::move(mu0);
  if (c.mu0_env_kind == "explicit") {
    Json env = Json::object();
    for (const auto& [fill, p] : c.mu0_env_points) env[queue::format_index_list(fill)] = p;
    root["mu0_env"] = std::move(env);
  } else {
    root["mu0_env"] = c.mu0_env_kind;
  }
  root["solver"] = {{"grid_resolution", c.grid_resolution},
                    {"grid_cap", c.grid_cap},
                    {"tol", c.solver_tol}};
  root["simulation"] = {{"episodes", c.episodes}, {"tail_eps", c.tail_eps}, {"n_list", c.n_list}};
  root["concentration"] = {{"trials", c.concentration_trials},
                           {"n_list", c.concentration_n_list},
                           {"eps", c.concentration_eps}};
  root["output_dir"] = c.output_dir;
  root["seed"] = c.seed;
  return root.dump(1) + "\n";
}

std::string config_hash(const ExperimentConfig& config) {
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (unsigned char ch : config_to_json(config)) {
    hash ^= ch;
    hash *= 0x100000001b3ull;
  }
  char buffer[17];
  std::snprintf(buffer, sizeof(buffer), "%016llx", static_cast<unsigned long long>(hash));
  return buffer;
}

FiniteDist build_mu0(const ExperimentConfig& config, const queue::QueueSpaces& spaces) {
  Eigen::VectorXd mass = Eigen::VectorXd::Zero(spaces.num_agent_states());
  std::set<Eigen::Index> seen;
  for (const auto& [access, p] : config.mu0) {
    const auto x = spaces.agent_state_index(access);
    if (!seen.insert(x).second)
      throw DomainError("duplicate access set " + queue::format_index_list(access));
    mass[x] = p;
  }
  return FiniteDist(std::move(mass));
}

FiniteDist build_mu0_env(const ExperimentConfig& config, const queue::QueueSpaces& spaces) {
  const auto n = spaces.num_env_states();
  if (config.mu0_env_kind == "empty") return FiniteDist::point_mass(n, 0);
  if (config.mu0_env_kind == "uniform") return FiniteDist::uniform(n);
  Eigen::VectorXd mass = Eigen::VectorXd::Zero(n);
  for (const auto& [fill, p] : config.mu0_env_points) mass[spaces.env_state_index(fill)] += p;
  return FiniteDist(std::move(mass));
}

std::unique_ptr<queue::QueueModel> build_model(const ExperimentConfig& config) {
  const queue::QueueSpaces spaces(config.queue);
  return std::make_unique<queue::QueueModel>(config.queue, build_mu0(config, spaces),
                                             build_mu0_env(config, spaces), config.gamma);
}

SolveOutcome solve(const queue::QueueModel& model, const ExperimentConfig& config, int workers) {
  DecisionGrid grid(model, config.grid_resolution, config.grid_cap);
  const GridMdp mdp = build_grid_mdp(model, grid, workers);
  SolverOptions options;
  options.tol = config.solver_tol;
  options.workers = workers;
  ValueIterationResult vi = value_iteration(mdp, grid, options);
  ValueIterationResult refined = policy_iteration(mdp, grid, vi.policy_indices, workers);
  SolveOutcome outcome{std::move(grid), std::move(vi), std::move(refined)};
  outcome.objective_optimal = mf_objective(model, outcome.refined.policy);
  outcome.objective_jsq = mf_objective(model, queue::jsq_policy(model.spaces()));
  outcome.objective_uniform = mf_objective(model, queue::uniform_policy(model.spaces()));
  outcome.q_continuity = q_continuity_constant(outcome.refined.q, outcome.grid);
  return outcome;
}

NamedPolicy resolve_policy(const std::string& spec, const queue::QueueModel& model,
                           const ExperimentConfig& config, int workers) {
  if (spec == "optimal") return {spec, solve(model, config, workers).refined.policy};
  if (spec == "jsq") return {spec, queue::jsq_policy(model.spaces())};
  if (spec == "uniform") return {spec, queue::uniform_policy(model.spaces())};
  const std::filesystem::path path(spec);
  return {path.stem().string(), load_policy(path, model.spaces())};
}

std::uint64_t simulation_seed(std::uint64_t seed, std::int64_t num_agents) {
  return derive_seed(seed, static_cast<std::uint64_t>(num_agents));
}

std::string simulation_csv(const std::vector<SimulationRow>& rows) {
  std::string out = csv_header_simulation();
  for (const auto& row : rows) {
    out += row.policy_label + "," + std::to_string(row.num_agents) + "," +
           std::to_string(row.estimate.episodes) + "," + format_double(row.estimate.mean) + "," +
           format_double(row.estimate.std_error) + "," +
           format_double(row.estimate.mean_drops_per_step) + "," +
           std::to_string(row.estimate.horizon) + "," + std::to_string(row.seed) + "\n";
  }
  return out;
}

SolveOutcome cmd_solve(const ExperimentConfig& config, const RunOptions& options) {
  const auto model = build_model(config);
  SolveOutcome outcome = solve(*model, config, options.workers);
  const auto& spaces = model->spaces();
  save_policy(options.out_dir / "policy.json", outcome.refined.policy, spaces);
  std::ostringstream q_csv;
  write_q_csv(q_csv, outcome.refined.q, spaces);
  write_text_file(options.out_dir / "q_values.csv", q_csv.str());

  Json summary;
  summary["grid_resolution"] = config.grid_resolution;
  summary["grid_size"] = outcome.grid.size();
  summary["value_iteration_sweeps"] = outcome.value_iteration.iterations;
  summary["value_iteration_residual"] = outcome.value_iteration.residual;
  summary["residual_threshold"] = outcome.value_iteration.threshold;
  summary["policy_iteration_rounds"] = outcome.refined.iterations;
  summary["final_residual"] = outcome.refined.residual;
  summary["objective_optimal"] = outcome.objective_optimal;
  summary["objective_jsq"] = outcome.objective_jsq;
  summary["objective_uniform"] = outcome.objective_uniform;
  summary["reward_bound"] = model->reward_bound();
  summary["q_continuity_constant"] = outcome.q_continuity;
  write_text_file(options.out_dir / "solve_summary.json", summary.dump(1) + "\n");

  // J(pi*) against the grid resolution; oversized grids are reported, not solved
  std::string sweep = "K,grid_size,objective_optimal,status\n";
  const auto num_env = static_cast<double>(spaces.num_env_states());
  for (int k : kResolutionSweep) {
    if (k == config.grid_resolution) {
      sweep += std::to_string(k) + "," + std::to_string(outcome.grid.size()) + "," +
               format_double(outcome.objective_optimal) + ",ok\n";
      continue;
    }
    try {
      const DecisionGrid grid(*model, k, config.grid_cap);
      if (num_env * num_env * static_cast<double>(grid.size()) * sizeof(double) > kSweepBudgetBytes) {
        sweep += std::to_string(k) + "," + std::to_string(grid.size()) + ",,skipped_size\n";
        continue;
      }
      ExperimentConfig at_k = config;
      at_k.grid_resolution = k;
      const SolveOutcome o = solve(*model, at_k, options.workers);
      sweep += std::to_string(k) + "," + std::to_string(o.grid.size()) + "," +
               format_double(o.objective_optimal) + ",ok\n";
    } catch (const GridCapExceeded&) {
      sweep += std::to_string(k) + ",,,grid_cap_exceeded\n";
    }
  }
  write_text_file(options.out_dir / "solve_resolution.csv", sweep);
  write_manifest(config, options, "solve",
                 {"policy.json", "q_values.csv", "solve_summary.json", "solve_resolution.csv"});
  return outcome;
}

double cmd_evaluate(const ExperimentConfig& config, const std::string& policy_spec,
                    const RunOptions& options) {
  const auto model = build_model(config);
  const NamedPolicy named = resolve_policy(policy_spec, *model, config, options.workers);
  const Eigen::VectorXd values = policy_evaluation(*model, named.policy, config.solver_tol);
  const double objective = model->space().mu0_env.mass().dot(values);

  std::string summary = "policy_label,mf_objective\n" + named.label + "," + format_double(objective) + "\n";
  std::string per_state = "env_state,value\n";
  for (Eigen::Index s = 0; s < values.size(); ++s)
    per_state += "\"" + queue::format_index_list(model->spaces().env_state(s)) + "\"," +
                 format_double(values[s]) + "\n";
  write_text_file(options.out_dir / "evaluate.csv", summary);
  write_text_file(options.out_dir / "evaluate_values.csv", per_state);
  write_manifest(config, options, "evaluate", {"evaluate.csv", "evaluate_values.csv"});
  return objective;
}

SimulationRow cmd_simulate(const ExperimentConfig& config, const std::string& policy_spec,
                           std::int64_t num_agents, const RunOptions& options) {
  const auto model = build_model(config);
  const NamedPolicy named = resolve_policy(policy_spec, *model, config, options.workers);
  const EpisodeSpec spec = episode_spec(config, num_agents);
  SimulationRow row{named.label, num_agents,
                    estimate_jn(*model, lift_policy(named.policy, num_agents), spec, options.workers),
                    spec.seed};
  write_text_file(options.out_dir / "simulate.csv", simulation_csv({row}));
  write_manifest(config, options, "simulate", {"simulate.csv"});
  return row;
}

std::vector<SimulationRow> cmd_converge(const ExperimentConfig& config,
                                        const std::vector<std::string>& policy_specs,
                                        const RunOptions& options) {
  const auto model = build_model(config);
  std::vector<NamedPolicy> policies;
  for (const auto& spec : policy_specs)
    policies.push_back(resolve_policy(spec, *model, config, options.workers));

  std::string reference = "policy_label,mf_objective\n";
  for (const auto& p : policies)
    reference += p.label + "," + format_double(mf_objective(*model, p.policy)) + "\n";

  std::vector<SimulationRow> rows;
  std::string pareto =
      "N,best_label,best_mean,candidate_label,candidate_mean,candidate_std_error,within_2se\n";
  for (auto n : config.n_list) {
    const EpisodeSpec spec = episode_spec(config, n);
    std::size_t first_row = rows.size();
    for (const auto& p : policies)
      rows.push_back({p.label, n, estimate_jn(*model, lift_policy(p.policy, n), spec, options.workers),
                      spec.seed});
    // epsilon-Pareto report: the candidate is "optimal" when present, else the first policy
    std::size_t best = first_row;
    std::size_t candidate = first_row;
    for (std::size_t r = first_row; r < rows.size(); ++r) {
      if (rows[r].estimate.mean > rows[best].estimate.mean) best = r;
      if (rows[r].policy_label == "optimal") candidate = r;
    }
    const bool within = rows[best].estimate.mean - rows[candidate].estimate.mean <=
                        2.0 * rows[candidate].estimate.std_error;
    pareto += std::to_string(n) + "," + rows[best].policy_label + "," +
              format_double(rows[best].estimate.mean) + "," + rows[candidate].policy_label + "," +
              format_double(rows[candidate].estimate.mean) + "," +
              format_double(rows[candidate].estimate.std_error) + "," + (within ? "1" : "0") + "\n";
  }
  write_text_file(options.out_dir / "converge.csv", simulation_csv(rows));
  write_text_file(options.out_dir / "converge_reference.csv", reference);
  write_text_file(options.out_dir / "converge_pareto.csv", pareto);
  write_manifest(config, options, "converge",
                 {"converge.csv", "converge_reference.csv", "converge_pareto.csv"});
  return rows;
}

std::vector<ConcentrationRow> cmd_concentration(const ExperimentConfig& config,
                                                const RunOptions& options) {
  const auto model = build_model(config);
  const auto& space = model->space();
  const DecisionRule rule = DecisionRule::uniform(space.num_agent_states, space.num_actions);
  const std::uint64_t base = derive_seed(config.seed, kConcentrationTag);

  std::vector<ConcentrationRow> rows;
  std::string header = "N,trials,bound,estimate";
  for (double eps : config.concentration_eps)
    header += ",tail_freq_" + format_double(eps) + ",tail_bound_" + format_double(eps);
  std::string csv = header + ",pass\n";
  for (auto n : config.concentration_n_list) {
    const ConcentrationResult result =
        concentration_trial(space.mu0, rule, n, config.concentration_trials,
                            derive_seed(base, static_cast<std::uint64_t>(n)), options.workers);
    ConcentrationRow row;
    row.num_agents = n;
    row.trials = config.concentration_trials;
    row.bound = concentration_bound(space.num_agent_states, space.num_actions, n);
    row.estimate = result.mean_sq_l1();
    row.pass = row.estimate <= row.bound;
    csv += std::to_string(n) + "," + std::to_string(row.trials) + "," + format_double(row.bound) +
           "," + format_double(row.estimate);
    for (double eps : config.concentration_eps) {
      const double freq = result.tail_frequency(eps);
      const double bound = row.bound / (eps * eps);
      row.tail_frequency.push_back(freq);
      row.tail_bound.push_back(bound);
      row.pass = row.pass && freq <= bound + 0.01;
      csv += "," + format_double(freq) + "," + format_double(bound);
    }
    csv += std::string(",") + (row.pass ? "1" : "0") + "\n";
    rows.push_back(std::move(row));
  }
  write_text_file(options.out_dir / "concentration.csv", csv);
  write_manifest(config, options, "concentration", {"concentration.csv"});
  return rows;
}

std::vector<HeatmapRow> heatmap_rows(const StationaryPolicy& policy, const queue::QueueSpaces& spaces) {
  if (spaces.num_queues() != 2) throw DomainError("heatmap: only two-queue policies are supported");
  const auto dual = spaces.full_access_index();
  std::vector<HeatmapRow> rows;
  for (Eigen::Index s = 0; s < spaces.num_env_states(); ++s) {
    const auto fill = spaces.env_state(s);
    rows.push_back({fill[0], fill[1], policy.at(s)(dual, 0)});
  }
  return rows;
}

std::vector<HeatmapRow> cmd_heatmap(const ExperimentConfig& config, const std::string& policy_spec,
                                    const RunOptions& options) {
  std::unique_ptr<queue::QueueModel> model;
  NamedPolicy named;
  const std::filesystem::path path(policy_spec);
  if (policy_spec != "optimal" && policy_spec != "jsq" && policy_spec != "uniform") {
    // the document carries its own queue layout
    const std::string text = read_text_file(path);
    ExperimentConfig layout_config = config;
    layout_config.queue = policy_layout_from_json(text);
    if (layout_config.queue.num_queues != 2)
      throw DomainError("heatmap: only two-queue policies are supported");
    layout_config.mu0 = default_mu0(2);
    layout_config.mu0_env_kind = "empty";
    const queue::QueueSpaces spaces(layout_config.queue);
    named = {path.stem().string(), policy_from_json(text, spaces)};
    model = build_model(layout_config);
  } else {
    model = build_model(config);
    if (model->spaces().num_queues() != 2)
      throw DomainError("heatmap: only two-queue policies are supported");
    named = resolve_policy(policy_spec, *model, config, options.workers);
  }
  const auto rows = heatmap_rows(named.policy, model->spaces());
  std::string csv = "b0,b1,prob_queue0\n";
  for (const auto& row : rows)
    csv += std::to_string(row.b0) + "," + std::to_string(row.b1) + "," +
           format_double(row.prob_queue0) + "\n";
  write_text_file(options.out_dir / "heatmap.csv", csv);
  write_manifest(config, options, "heatmap", {"heatmap.csv"});
  return rows;
}

std::vector<AveragingRow> cmd_averaging(const ExperimentConfig& config, const RunOptions& options) {
  const auto model = build_model(config);
  std::vector<AveragingRow> rows;
  std::string csv =
      "N,episodes,tuple_mean,tuple_std_error,lifted_mean,lifted_std_error,gap,gap_std_error,"
      "horizon,seed\n";
  for (auto n : config.n_list) {
    const EpisodeSpec spec = episode_spec(config, n);
    const PolicyTuple tuple = queue::alternating_tuple(model->spaces(), n);
    const PolicyTuple lifted = lift_policy(average_policy(tuple), n);
    AveragingRow row;
    row.num_agents = n;
    row.tuple = estimate_jn(*model, tuple, spec, options.workers);
    row.lifted = estimate_jn(*model, lifted, spec, options.workers);
    row.gap = paired_gap(row.tuple, row.lifted);
    csv += std::to_string(n) + "," + std::to_string(spec.episodes) + "," +
           format_double(row.tuple.mean) + "," + format_double(row.tuple.std_error) + "," +
           format_double(row.lifted.mean) + "," + format_double(row.lifted.std_error) + "," +
           format_double(std::abs(row.gap.mean_difference)) + "," +
           format_double(row.gap.std_error) + "," + std::to_string(row.tuple.horizon) + "," +
           std::to_string(spec.seed) + "\n";
    rows.push_back(std::move(row));
  }
  write_text_file(options.out_dir / "averaging.csv", csv);
  write_manifest(config, options, "averaging", {"averaging.csv"});
  return rows;
}

}  // namespace mfc::experiments
