// Command line front end: solve, evaluate, simulate and the experiment suites.

#include "mfc/experiments.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitAssertion = 3;

}  // namespace

int main(int argc, char** argv) {
  using namespace mfc::experiments;

  CLI::App app{"Mean field control for many-scheduler queue assignment"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  int workers = 1;
  app.add_option("--config", config_path, "Experiment configuration (JSON)");
  app.add_option("--seed", seed, "Override the configured seed");
  app.add_option("--out", out_dir, "Output directory (overrides output_dir)");
  app.add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);

  std::string policy = "optimal";
  std::int64_t agents = 128;
  std::vector<std::string> policies{"optimal", "jsq", "uniform"};
  std::vector<std::int64_t> n_list;
  std::int64_t trials = 0;

  auto* solve = app.add_subcommand("solve", "Value iteration on the decision grid");
  auto* evaluate = app.add_subcommand("evaluate", "Mean field objective of a policy");
  evaluate->add_option("--policy", policy, "optimal | jsq | uniform | <policy.json>");
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo J^N of a lifted policy");
  simulate->add_option("--policy", policy, "optimal | jsq | uniform | <policy.json>");
  simulate->add_option("--agents,-N", agents, "Number of agents")->check(CLI::PositiveNumber);
  auto* converge = app.add_subcommand("converge", "J^N against N for several policies");
  converge->add_option("--policies", policies, "Policy labels or files");
  converge->add_option("--n-list", n_list, "Agent counts");
  auto* concentration = app.add_subcommand("concentration", "Empirical distribution concentration");
  concentration->add_option("--n-list", n_list, "Agent counts");
  concentration->add_option("--trials", trials, "Populations per agent count");
  auto* heatmap = app.add_subcommand("heatmap", "Dual-access routing probability per filling");
  heatmap->add_option("--policy", policy, "optimal | jsq | uniform | <policy.json>");
  auto* averaging = app.add_subcommand("averaging", "Heterogeneous tuple against its average policy");
  averaging->add_option("--n-list", n_list, "Agent counts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  ExperimentConfig config;
  try {
    config = config_path.empty() ? parse_config("") : load_config(config_path);
    if (seed) config.seed = *seed;
    if (!n_list.empty()) {
      if (*concentration)
        config.concentration_n_list = n_list;
      else
        config.n_list = n_list;
    }
    if (trials > 0) config.concentration_trials = trials;
    // re-validate overrides through the parser
    config = parse_config(config_to_json(config));
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  RunOptions options;
  options.out_dir = std::filesystem::path(out_dir.empty() ? config.output_dir : out_dir);
  options.workers = workers;

  try {
    if (*solve) {
      const auto outcome = cmd_solve(config, options);
      std::cout << "J(optimal) = " << outcome.objective_optimal
                << "  J(jsq) = " << outcome.objective_jsq
                << "  J(uniform) = " << outcome.objective_uniform << "\n"
                << "value iteration: " << outcome.value_iteration.iterations
                << " sweeps, residual " << outcome.value_iteration.residual << " (threshold "
                << outcome.value_iteration.threshold << ")\n";
    } else if (*evaluate) {
      std::cout << "J(" << policy << ") = " << cmd_evaluate(config, policy, options) << "\n";
    } else if (*simulate) {
      const auto row = cmd_simulate(config, policy, agents, options);
      std::cout << simulation_csv({row});
    } else if (*converge) {
      std::cout << simulation_csv(cmd_converge(config, policies, options));
    } else if (*concentration) {
      bool all_pass = true;
      for (const auto& row : cmd_concentration(config, options)) {
        std::cout << "N=" << row.num_agents << " bound=" << row.bound
                  << " estimate=" << row.estimate << (row.pass ? " PASS" : " FAIL") << "\n";
        all_pass = all_pass && row.pass;
      }
      if (!all_pass) return kExitAssertion;
    } else if (*heatmap) {
      for (const auto& row : cmd_heatmap(config, policy, options))
        std::cout << row.b0 << "," << row.b1 << "," << row.prob_queue0 << "\n";
    } else if (*averaging) {
      for (const auto& row : cmd_averaging(config, options))
        std::cout << "N=" << row.num_agents << " gap=" << std::abs(row.gap.mean_difference)
                  << " se=" << row.gap.std_error << "\n";
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const mfc::DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
