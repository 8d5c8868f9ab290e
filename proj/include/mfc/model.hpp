#pragma once

#include "mfc/prob.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace mfc {

class RngStream;

/// Agent state space X, action space U, environment state space X0, the
/// agent state law mu0, the initial environment law and the discount.
struct SpaceSpec {
  Eigen::Index num_agent_states = 0;
  Eigen::Index num_actions = 0;
  Eigen::Index num_env_states = 0;
  FiniteDist mu0;
  FiniteDist mu0_env;
  double gamma = 0.99;

  /// Throws DomainError when any invariant fails.
  void validate() const;
};

/// h : X -> P(U), one probability row per agent state.
class DecisionRule {
 public:
  DecisionRule() = default;
  explicit DecisionRule(Eigen::MatrixXd table);

  static DecisionRule uniform(Eigen::Index num_agent_states, Eigen::Index num_actions);
  static DecisionRule constant_action(Eigen::Index num_agent_states, Eigen::Index num_actions,
                                      Eigen::Index action);

  const Eigen::MatrixXd& table() const { return table_; }
  Eigen::Index num_agent_states() const { return table_.rows(); }
  Eigen::Index num_actions() const { return table_.cols(); }
  double operator()(Eigen::Index x, Eigen::Index u) const { return table_(x, u); }

  friend bool operator==(const DecisionRule& a, const DecisionRule& b) {
    return a.table_ == b.table_;
  }

 private:
  Eigen::MatrixXd table_;
};

/// Joint probability over X x U (rows: agent states, columns: actions).
class StateActionDist {
 public:
  StateActionDist() = default;
  explicit StateActionDist(Eigen::MatrixXd table);

  const Eigen::MatrixXd& table() const { return table_; }
  double operator()(Eigen::Index x, Eigen::Index u) const { return table_(x, u); }
  Eigen::VectorXd state_marginal() const { return table_.rowwise().sum(); }

 private:
  Eigen::MatrixXd table_;
};

/// pi : X0 -> H, indexed by environment state.
class StationaryPolicy {
 public:
  StationaryPolicy() = default;
  explicit StationaryPolicy(std::vector<DecisionRule> rules);

  Eigen::Index num_env_states() const { return static_cast<Eigen::Index>(rules_.size()); }
  const DecisionRule& at(Eigen::Index env_state) const;
  const std::vector<DecisionRule>& rules() const { return rules_; }

  friend bool operator==(const StationaryPolicy& a, const StationaryPolicy& b) {
    return a.rules_ == b.rules_;
  }

 private:
  std::vector<DecisionRule> rules_;
};

/// One stationary policy per agent.
class PolicyTuple {
 public:
  explicit PolicyTuple(std::vector<StationaryPolicy> members);

  std::size_t size() const { return members_.size(); }
  const StationaryPolicy& operator[](std::size_t i) const { return members_[i]; }
  const std::vector<StationaryPolicy>& members() const { return members_; }

 private:
  std::vector<StationaryPolicy> members_;
};

/// Outcome of one stochastic environment transition.
struct EnvStepSample {
  Eigen::Index next_env_state = 0;
  std::int64_t realized_drops = 0;
};

/// The limiting MFC MDP: reward r(x0, G) and kernel P0(x0, G), on top of a
/// SpaceSpec. Environment states are addressed by canonical index.
class MfcModel {
 public:
  virtual ~MfcModel() = default;

  virtual const SpaceSpec& space() const = 0;
  virtual double reward(Eigen::Index env_state, const StateActionDist& joint) const = 0;
  /// Row P0(. | x0, G) as a mass vector over X0.
  virtual Eigen::VectorXd transition(Eigen::Index env_state, const StateActionDist& joint) const = 0;
  /// Sup-norm bound R on the reward.
  virtual double reward_bound() const = 0;
  virtual EnvStepSample sample_step(Eigen::Index env_state, const StateActionDist& joint,
                                    RngStream& rng) const = 0;
  /// Actions carrying a decision variable at agent state x; all actions by default.
  virtual std::vector<Eigen::Index> decision_support(Eigen::Index agent_state) const;
  /// Maps a decision rule to its representative with mass only on decision_support.
  virtual DecisionRule canonicalize(const DecisionRule& rule) const { return rule; }
};

/// G(mu, h)(x, u) = h(x, u) mu(x)
StateActionDist mean_field_joint(const FiniteDist& mu, const DecisionRule& h);

/// (1/N) sum_i delta_(x_i, u_i)
StateActionDist empirical_distribution(std::span<const Eigen::Index> agent_states,
                                       std::span<const Eigen::Index> actions,
                                       Eigen::Index num_agent_states, Eigen::Index num_actions);

using PerAgentReward =
    std::function<double(Eigen::Index agent_state, Eigen::Index env_state, const StateActionDist&)>;
using PopulationReward = std::function<double(Eigen::Index env_state, const StateActionDist&)>;

/// r(x0, G) = sum_x r~(x, x0, G) sum_u G(x, u)
PopulationReward per_agent_reward_adapter(PerAgentReward per_agent);

PolicyTuple lift_policy(const StationaryPolicy& policy, std::int64_t num_agents);
StationaryPolicy average_policy(const PolicyTuple& tuple);

}  // namespace mfc
