#pragma once

#include "mfc/model.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

namespace mfc {

/// Raised when the decision grid would exceed its configured size cap.
class GridCapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Simplex-lattice discretization of the decision-rule space H.
///
/// Every agent state with s >= 2 decision actions gets all compositions of K
/// into s parts (scaled by 1/K); agent states with a single decision action
/// are pinned to it. Rules are the Cartesian product over the free agent
/// states, odometer order with the last free state varying fastest. Within a
/// state, compositions are in lexicographic order of their count vectors.
class DecisionGrid {
 public:
  static constexpr std::size_t kDefaultCap = 1'000'000;

  DecisionGrid(const MfcModel& model, int resolution, std::size_t cap = kDefaultCap);

  int resolution() const { return resolution_; }
  std::size_t size() const { return rules_.size(); }
  const DecisionRule& rule(std::size_t index) const { return rules_[index]; }
  const std::vector<DecisionRule>& rules() const { return rules_; }

  /// Grid index of a rule, if it lies on the lattice after canonicalization.
  std::optional<std::size_t> locate(const DecisionRule& rule, const MfcModel& model) const;
  /// Pairs of rules that differ by moving 1/K mass within one agent state.
  std::vector<std::pair<std::size_t, std::size_t>> adjacent_pairs() const;

 private:
  int resolution_;
  std::vector<Eigen::Index> free_states_;
  std::vector<std::vector<Eigen::Index>> free_supports_;
  std::vector<std::vector<std::vector<int>>> compositions_;  // per free state
  std::vector<std::vector<std::size_t>> coordinates_;        // per rule
  std::vector<DecisionRule> rules_;
};

/// Q(x0, h) over environment states (rows) and grid rules (columns).
struct QTable {
  Eigen::MatrixXd values;
};

/// Reward and transition rows of the grid-restricted MDP, computed once.
struct GridMdp {
  Eigen::MatrixXd rewards;              // env state x grid rule
  std::vector<Eigen::MatrixXd> kernels; // per env state: grid rule x next env state
  double gamma = 0.0;
  double reward_bound = 0.0;

  Eigen::Index num_env_states() const { return rewards.rows(); }
  Eigen::Index num_rules() const { return rewards.cols(); }
};

GridMdp build_grid_mdp(const MfcModel& model, const DecisionGrid& grid, int workers = 1);

/// r(x0, G(mu0, h)) + gamma sum P0(x~ | x0, G(mu0, h)) max_h~ Q(x~, h~)
double bellman_backup(const QTable& q, Eigen::Index env_state, const DecisionRule& rule,
                      const MfcModel& model);

/// BQ on every (x0, grid rule) cell.
QTable apply_bellman(const GridMdp& mdp, const QTable& q, int workers = 1);

/// Per env state, the grid index maximizing Q; ties go to the lowest index.
std::vector<std::size_t> greedy_indices(const QTable& q);
StationaryPolicy greedy_policy(const QTable& q, const DecisionGrid& grid);
StationaryPolicy policy_from_indices(const std::vector<std::size_t>& indices,
                                     const DecisionGrid& grid);

/// Stopping threshold on ||BQ - Q|| that bounds ||Q - Q*|| by tol / 2.
double residual_threshold(double tol, double gamma);

struct ValueIterationResult {
  QTable q;
  StationaryPolicy policy;
  std::vector<std::size_t> policy_indices;
  std::size_t iterations = 0;
  double residual = 0.0;
  double threshold = 0.0;
  std::vector<double> residual_history;
};

struct SolverOptions {
  double tol = 1e-8;
  int workers = 1;
  std::size_t max_iterations = 1'000'000;
};

ValueIterationResult value_iteration(const GridMdp& mdp, const DecisionGrid& grid,
                                     const SolverOptions& options);
ValueIterationResult value_iteration(const MfcModel& model, const DecisionGrid& grid,
                                     const SolverOptions& options);

/// Exact policy iteration on the grid MDP, started from `start`. Returns the
/// Q table of the final policy and its greedy indices.
ValueIterationResult policy_iteration(const GridMdp& mdp, const DecisionGrid& grid,
                                      std::vector<std::size_t> start, int workers = 1);

enum class EvaluationMethod { kDirect, kIterative };

/// V_pi by linear solve of (I - gamma P_pi) V = r_pi or by iterating B^pi.
Eigen::VectorXd policy_evaluation(const MfcModel& model, const StationaryPolicy& policy,
                                  double tol, EvaluationMethod method = EvaluationMethod::kDirect);

/// J(pi) = sum_x0 mu0_env(x0) V_pi(x0)
double mf_objective(const MfcModel& model, const StationaryPolicy& policy, double tol = 1e-10);

/// max |Q(x0, h) - Q(x0, h')| * K over adjacent grid rules; an empirical
/// continuity constant.
double q_continuity_constant(const QTable& q, const DecisionGrid& grid);

}  // namespace mfc
