#pragma once

#include "mfc/model.hpp"
#include "mfc/nagent_sim.hpp"
#include "mfc/queue_env.hpp"
#include "mfc/solver.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mfc::experiments {

inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr int kCsvSchemaVersion = 1;

/// Invalid or malformed configuration; the message carries the key path.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  queue::QueueConfig queue = queue::QueueConfig::defaults(2);
  double gamma = 0.99;
  /// Access-set probabilities for mu0.
  std::vector<std::pair<queue::AgentState, double>> mu0;
  /// "empty", "uniform", or "explicit" (then mu0_env_points applies).
  std::string mu0_env_kind = "empty";
  std::vector<std::pair<queue::EnvState, double>> mu0_env_points;
  int grid_resolution = 20;
  std::size_t grid_cap = DecisionGrid::kDefaultCap;
  double solver_tol = 1e-8;
  std::int64_t episodes = 500;
  double tail_eps = 0.01;
  std::vector<std::int64_t> n_list{2, 4, 8, 16, 32, 64, 128};
  std::int64_t concentration_trials = 10000;
  std::vector<std::int64_t> concentration_n_list{10, 100, 1000};
  std::vector<double> concentration_eps{0.1, 0.3};
  std::string output_dir = "out";
  std::uint64_t seed = 0;
};

/// Full-access probability 0.6, the rest uniform over the remaining sets.
std::vector<std::pair<queue::AgentState, double>> default_mu0(int num_queues);

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Canonical JSON of the effective configuration (every field explicit).
std::string config_to_json(const ExperimentConfig& config);
std::string config_hash(const ExperimentConfig& config);

FiniteDist build_mu0(const ExperimentConfig& config, const queue::QueueSpaces& spaces);
FiniteDist build_mu0_env(const ExperimentConfig& config, const queue::QueueSpaces& spaces);
std::unique_ptr<queue::QueueModel> build_model(const ExperimentConfig& config);

struct RunOptions {
  std::filesystem::path out_dir;
  int workers = 1;
};

struct SolveOutcome {
  DecisionGrid grid;
  ValueIterationResult value_iteration;
  ValueIterationResult refined;  // policy iteration started from the VI greedy policy
  double objective_optimal = 0.0;
  double objective_jsq = 0.0;
  double objective_uniform = 0.0;
  double q_continuity = 0.0;
};

/// Value iteration on the decision grid followed by exact policy iteration.
SolveOutcome solve(const queue::QueueModel& model, const ExperimentConfig& config, int workers);

/// A named policy: "optimal", "jsq", "uniform", or a policy document path.
struct NamedPolicy {
  std::string label;
  StationaryPolicy policy;
};
NamedPolicy resolve_policy(const std::string& spec, const queue::QueueModel& model,
                           const ExperimentConfig& config, int workers);

/// Seed key shared by every policy simulated at population size N.
std::uint64_t simulation_seed(std::uint64_t seed, std::int64_t num_agents);

struct SimulationRow {
  std::string policy_label;
  std::int64_t num_agents = 0;
  JNEstimate estimate;
  std::uint64_t seed = 0;
};
std::string simulation_csv(const std::vector<SimulationRow>& rows);

SolveOutcome cmd_solve(const ExperimentConfig& config, const RunOptions& options);
double cmd_evaluate(const ExperimentConfig& config, const std::string& policy_spec,
                    const RunOptions& options);
SimulationRow cmd_simulate(const ExperimentConfig& config, const std::string& policy_spec,
                           std::int64_t num_agents, const RunOptions& options);
std::vector<SimulationRow> cmd_converge(const ExperimentConfig& config,
                                        const std::vector<std::string>& policy_specs,
                                        const RunOptions& options);

struct ConcentrationRow {
  std::int64_t num_agents = 0;
  std::int64_t trials = 0;
  double bound = 0.0;
  double estimate = 0.0;
  std::vector<double> tail_frequency;  // per config eps
  std::vector<double> tail_bound;
  bool pass = false;
};
/// Concentration check under the uniform decision rule; pass requires the
/// squared-deviation bound with no slack and each tail frequency at most its
/// Chebyshev bound + 0.01.
std::vector<ConcentrationRow> cmd_concentration(const ExperimentConfig& config,
                                                const RunOptions& options);

struct HeatmapRow {
  int b0 = 0;
  int b1 = 0;
  double prob_queue0 = 0.0;
};
std::vector<HeatmapRow> heatmap_rows(const StationaryPolicy& policy, const queue::QueueSpaces& spaces);
std::vector<HeatmapRow> cmd_heatmap(const ExperimentConfig& config, const std::string& policy_spec,
                                    const RunOptions& options);

struct AveragingRow {
  std::int64_t num_agents = 0;
  JNEstimate tuple;
  JNEstimate lifted;
  PairedGap gap;
};
std::vector<AveragingRow> cmd_averaging(const ExperimentConfig& config, const RunOptions& options);

}  // namespace mfc::experiments
