#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mfc/baselines.hpp"
#include "mfc/experiments.hpp"
#include "mfc/policy_io.hpp"
#include "oracles.hpp"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sys/wait.h>

using namespace mfc;
using namespace mfc::experiments;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("mfc_test_experiments_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::map<std::string, std::string> directory_bytes(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::directory_iterator(dir))
    files[entry.path().filename().string()] = read_text_file(entry.path());
  return files;
}

ExperimentConfig small_config() {
  ExperimentConfig c = parse_config("");
  c.episodes = 12;
  c.n_list = {2, 5};
  c.concentration_trials = 1000;
  c.concentration_n_list = {10, 40};
  c.seed = 9;
  return c;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(MFC_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("configuration defaults") {
  const ExperimentConfig c = parse_config("");
  CHECK(c.queue.num_queues == 2);
  CHECK(c.queue.arrival_rate == 5.0);
  CHECK(c.queue.capacity == std::vector<int>{5, 5});
  CHECK(c.queue.service_rate == std::vector<double>{3.0, 3.0});
  CHECK(c.queue.dt == 0.5);
  CHECK(c.gamma == 0.99);
  CHECK(c.grid_resolution == 20);
  CHECK(c.episodes == 500);
  CHECK(c.n_list == std::vector<std::int64_t>{2, 4, 8, 16, 32, 64, 128});
  CHECK(c.concentration_trials == 10000);

  const auto model = build_model(c);
  const auto& mu0 = model->space().mu0;
  CHECK(mu0[model->spaces().full_access_index()] == doctest::Approx(0.6));
  CHECK(mu0[model->spaces().agent_state_index({0})] == doctest::Approx(0.2));
  CHECK(model->space().mu0_env[model->spaces().env_state_index({0, 0})] == 1.0);
}

TEST_CASE("configuration parsing") {
  const ExperimentConfig c = parse_config(R"({
    "queue": {"num_queues": 3, "capacity": 4, "service_rate": [2, 3, 4], "arrival_rate": 7.5},
    "gamma": 0.95,
    "mu0": {"[0,1,2]": 0.5, "[0]": 0.5},
    "mu0_env": "uniform",
    "solver": {"grid_resolution": 4},
    "simulation": {"episodes": 10, "n_list": [3, 6]},
    "seed": 17
  })");
  CHECK(c.queue.capacity == std::vector<int>{4, 4, 4});
  CHECK(c.queue.service_rate == std::vector<double>{2, 3, 4});
  CHECK(c.gamma == 0.95);
  CHECK(c.grid_resolution == 4);
  CHECK(c.n_list == std::vector<std::int64_t>{3, 6});
  CHECK(c.seed == 17);
  const auto model = build_model(c);
  CHECK(model->space().mu0_env[0] == doctest::Approx(1.0 / 125.0));

  const ExperimentConfig e = parse_config(R"({"mu0_env": {"[2,3]": 0.25, "[0,0]": 0.75}})");
  const auto m = build_model(e);
  CHECK(m->space().mu0_env[m->spaces().env_state_index({2, 3})] == 0.25);

  // canonical JSON round-trip
  CHECK(config_to_json(parse_config(config_to_json(c))) == config_to_json(c));
  CHECK(config_hash(c) == config_hash(parse_config(config_to_json(c))));
  CHECK(config_hash(c) != config_hash(parse_config("")));
}

TEST_CASE("invalid configurations are rejected with their key path") {
  auto message = [](const std::string& text) -> std::string {
    try {
      parse_config(text);
    } catch (const ConfigError& e) {
      return e.what();
    }
    return "";
  };
  CHECK(message(R"({"gamma": 1.5})").find("gamma") != std::string::npos);
  CHECK(message(R"({"queue": {"arival_rate": 3}})").find("queue.arival_rate") != std::string::npos);
  CHECK(message(R"({"colour": 1})").find("colour") != std::string::npos);
  CHECK(message(R"({"mu0": {"[0]": 0.5}})") != "");
  CHECK(message(R"({"mu0": {"[0,7]": 1.0}})") != "");
  CHECK(message(R"({"concentration": {"trials": 10}})") != "");
  CHECK(message(R"({"simulation": {"n_list": [0]}})") != "");
  CHECK(message(R"({"queue": {"dt": -1}})") != "");
  CHECK(message(R"({"mu0_env": "sideways"})") != "");
  CHECK(message("{not json") != "");
  CHECK(message(R"({"queue": {"arrival_rate": 0}})") == "");
}

TEST_CASE("policy documents round-trip bit for bit") {
  const auto model = build_model(parse_config(""));
  const auto& spaces = model->spaces();
  RngStream rng(1, 0);
  std::vector<DecisionRule> rules;
  for (Eigen::Index s = 0; s < spaces.num_env_states(); ++s)
    rules.push_back(model->canonicalize(oracle::random_rule(3, 2, rng)));
  const StationaryPolicy pi(rules);
  const std::string text = policy_to_json(pi, spaces);
  const StationaryPolicy back = policy_from_json(text, spaces);
  CHECK(back == pi);
  CHECK(policy_to_json(back, spaces) == text);

  const fs::path dir = scratch("policy");
  save_policy(dir / "p.json", pi, spaces);
  CHECK(load_policy(dir / "p.json", spaces) == pi);
  CHECK(policy_layout_from_json(text).capacity == std::vector<int>{5, 5});

  const auto other = build_model(parse_config(R"({"queue": {"num_queues": 3}})"));
  CHECK_THROWS(policy_from_json(text, other->spaces()));

  for (double v : {0.1, 1.0 / 3.0, 5e-324, 0.6000000000000001, -19.12345678901234})
    CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
}

TEST_CASE("solve, evaluate and heatmap") {
  ExperimentConfig c = small_config();
  const fs::path dir = scratch("solve");
  const SolveOutcome outcome = cmd_solve(c, {dir, 1});
  CHECK(outcome.value_iteration.residual <= outcome.value_iteration.threshold);
  CHECK(outcome.objective_optimal >= outcome.objective_jsq - 1e-9);
  CHECK(outcome.objective_optimal >= outcome.objective_uniform - 1e-9);
  for (const char* f : {"policy.json", "q_values.csv", "solve_summary.json", "manifest_solve.json"})
    CHECK(fs::exists(dir / f));
  const std::string manifest = read_text_file(dir / "manifest_solve.json");
  CHECK(manifest.find("\"config_hash\"") != std::string::npos);
  CHECK(manifest.find("workers") == std::string::npos);

  // evaluating the saved document reproduces the solver objective
  const double from_file = cmd_evaluate(c, (dir / "policy.json").string(), {dir, 1});
  CHECK(from_file == doctest::Approx(outcome.objective_optimal).epsilon(1e-9));
  CHECK(read_text_file(dir / "evaluate.csv").rfind("policy_label,mf_objective\npolicy,", 0) == 0);

  const auto jsq = cmd_heatmap(c, "jsq", {dir, 1});
  CHECK(jsq.size() == 36);
  for (const auto& row : jsq) {
    if (row.b0 == 2 && row.b1 == 5) CHECK(row.prob_queue0 == 1.0);
    if (row.b0 == 3 && row.b1 == 3) CHECK(row.prob_queue0 == 0.5);
  }

  // solved policy routes to the emptier queue, up to one grid step
  const auto opt = cmd_heatmap(c, (dir / "policy.json").string(), {dir, 1});
  const double step = 1.0 / c.grid_resolution;
  for (const auto& a : opt)
    for (const auto& b : opt)
      if (a.b1 == b.b1 && a.b0 < b.b0) CHECK(a.prob_queue0 >= b.prob_queue0 - step);

  ExperimentConfig three = c;
  three.queue = queue::QueueConfig::defaults(3);
  three.mu0 = default_mu0(3);
  CHECK_THROWS_AS(cmd_heatmap(three, "jsq", {dir, 1}), DomainError);
}

TEST_CASE("coarse grids and JSQ ties") {
  ExperimentConfig c = small_config();
  c.grid_resolution = 2;
  const auto model = build_model(c);
  const SolveOutcome even = solve(*model, c, 1);
  CHECK(even.objective_optimal >= even.objective_jsq - 1e-9);
  c.grid_resolution = 1;
  const SolveOutcome vertices = solve(*model, c, 1);
  MESSAGE("K=1: J(opt)=" << vertices.objective_optimal << " J(jsq)=" << vertices.objective_jsq);
  CHECK(vertices.objective_optimal <= even.objective_optimal + 1e-9);
}

TEST_CASE("simulation commands") {
  ExperimentConfig c = small_config();
  const fs::path dir = scratch("simulate");
  const SimulationRow row = cmd_simulate(c, "jsq", 4, {dir, 1});
  CHECK(row.estimate.episodes == 12);
  CHECK(row.estimate.horizon == 1008);
  CHECK(row.seed == simulation_seed(9, 4));
  CHECK(read_text_file(dir / "simulate.csv")
            .rfind("policy_label,N,episodes,mean_return,std_error,mean_drops_per_step,horizon,seed\n", 0) == 0);

  SUBCASE("no arrivals: every estimate is zero") {
    ExperimentConfig quiet = c;
    quiet.queue.arrival_rate = 0.0;
    for (const auto& r : cmd_converge(quiet, {"jsq", "uniform"}, {dir, 1})) {
      CHECK(r.estimate.mean == 0.0);
      CHECK(r.estimate.std_error == 0.0);
    }
  }

  SUBCASE("policies share episode streams at a given N") {
    const auto rows = cmd_converge(c, {"jsq", "jsq"}, {dir, 1});
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].estimate.episode_returns == rows[1].estimate.episode_returns);
    CHECK(rows[0].seed != rows[2].seed);
  }

  SUBCASE("averaging reports a paired gap") {
    const auto rows = cmd_averaging(c, {dir, 1});
    REQUIRE(rows.size() == 2);
    for (const auto& r : rows) {
      CHECK(r.gap.mean_difference == doctest::Approx(r.tuple.mean - r.lifted.mean));
      CHECK(r.gap.std_error >= 0.0);
    }
  }
}

TEST_CASE("concentration command") {
  ExperimentConfig c = small_config();
  const fs::path dir = scratch("concentration");
  const auto rows = cmd_concentration(c, {dir, 1});
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].bound == doctest::Approx(0.9));
  for (const auto& r : rows) CHECK(r.pass);

  ExperimentConfig single = c;
  single.queue = queue::QueueConfig::defaults(1);
  single.mu0 = default_mu0(1);
  for (const auto& r : cmd_concentration(single, {dir, 1})) {
    CHECK(r.estimate == 0.0);
    CHECK(r.pass);
  }
}

TEST_CASE("outputs are byte-identical across repeats and worker counts") {
  const ExperimentConfig c = small_config();
  auto run_all = [&](const fs::path& dir, int workers) {
    const RunOptions o{dir, workers};
    cmd_solve(c, o);
    cmd_evaluate(c, "jsq", o);
    cmd_simulate(c, "optimal", 6, o);
    cmd_converge(c, {"optimal", "jsq"}, o);
    cmd_concentration(c, o);
    cmd_heatmap(c, "optimal", o);
    cmd_averaging(c, o);
    return directory_bytes(dir);
  };
  const auto one = run_all(scratch("w1"), 1);
  const auto again = run_all(scratch("w1b"), 1);
  const auto eight = run_all(scratch("w8"), 8);
  CHECK(one.size() == 20);
  CHECK(one == again);
  CHECK(one == eight);
}

TEST_CASE("command line exit codes") {
  const fs::path dir = scratch("cli");
  {
    std::ofstream(dir / "bad.json") << R"({"gamma": 1.5})";
    std::ofstream(dir / "ok.json") << R"({"solver": {"grid_resolution": 4}})";
  }
  CHECK(run_cli("solve --config " + (dir / "ok.json").string() + " --out " + (dir / "out").string()) == 0);
  CHECK(fs::exists(dir / "out" / "policy.json"));
  CHECK(run_cli("solve --config " + (dir / "bad.json").string()) == 2);
  CHECK(run_cli("solve --config " + (dir / "missing.json").string()) == 2);
  CHECK(run_cli("frobnicate") == 2);
  CHECK(run_cli("heatmap --policy " + (dir / "missing_policy.json").string() + " --out " +
                (dir / "out").string()) != 0);
  CHECK(run_cli("concentration --n-list 10 --trials 1000 --out " + (dir / "out").string()) == 0);
}
