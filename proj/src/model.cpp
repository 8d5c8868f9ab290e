#include "mfc/model.hpp"

#include <numeric>
#include <string>

namespace mfc {

void SpaceSpec::validate() const {
  if (num_agent_states <= 0 || num_actions <= 0 || num_env_states <= 0)
    throw DomainError("SpaceSpec: all spaces must be nonempty");
  if (mu0.size() != num_agent_states) throw DomainError("SpaceSpec: mu0 size mismatch");
  if (mu0_env.size() != num_env_states) throw DomainError("SpaceSpec: mu0_env size mismatch");
  if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError("SpaceSpec: gamma must lie in (0, 1)");
}

DecisionRule::DecisionRule(Eigen::MatrixXd table) : table_(std::move(table)) {
  if (table_.rows() == 0 || table_.cols() == 0) throw DomainError("DecisionRule: empty table");
  for (Eigen::Index x = 0; x < table_.rows(); ++x)
    table_.row(x) = validated_simplex(table_.row(x).transpose(), "DecisionRule row").transpose();
}

DecisionRule DecisionRule::uniform(Eigen::Index num_agent_states, Eigen::Index num_actions) {
  return DecisionRule(Eigen::MatrixXd::Constant(num_agent_states, num_actions,
                                                1.0 / static_cast<double>(num_actions)));
}

DecisionRule DecisionRule::constant_action(Eigen::Index num_agent_states, Eigen::Index num_actions,
                                           Eigen::Index action) {
  if (action < 0 || action >= num_actions)
    throw DomainError("DecisionRule::constant_action: action out of range");
  Eigen::MatrixXd table = Eigen::MatrixXd::Zero(num_agent_states, num_actions);
  table.col(action).setOnes();
  return DecisionRule(std::move(table));
}

StateActionDist::StateActionDist(Eigen::MatrixXd table) : table_(std::move(table)) {
  if (table_.size() == 0) throw DomainError("StateActionDist: empty table");
  Eigen::Map<Eigen::VectorXd> flat(table_.data(), table_.size());
  flat = validated_simplex(flat, "StateActionDist");
}

StationaryPolicy::StationaryPolicy(std::vector<DecisionRule> rules) : rules_(std::move(rules)) {
  if (rules_.empty()) throw DomainError("StationaryPolicy: no environment states");
  for (const auto& rule : rules_) {
    if (rule.num_agent_states() != rules_.front().num_agent_states() ||
        rule.num_actions() != rules_.front().num_actions())
      throw DomainError("StationaryPolicy: inconsistent decision rule shapes");
  }
}

const DecisionRule& StationaryPolicy::at(Eigen::Index env_state) const {
  if (env_state < 0 || env_state >= num_env_states())
    throw DomainError("StationaryPolicy: env state out of range");
  return rules_[static_cast<std::size_t>(env_state)];
}

PolicyTuple::PolicyTuple(std::vector<StationaryPolicy> members) : members_(std::move(members)) {
  if (members_.empty()) throw DomainError("PolicyTuple: needs at least one member");
  const auto& first = members_.front();
  for (const auto& m : members_) {
    if (m.num_env_states() != first.num_env_states() ||
        m.at(0).num_agent_states() != first.at(0).num_agent_states() ||
        m.at(0).num_actions() != first.at(0).num_actions())
      throw DomainError("PolicyTuple: members defined on different spaces");
  }
}

std::vector<Eigen::Index> MfcModel::decision_support(Eigen::Index) const {
  std::vector<Eigen::Index> all(static_cast<std::size_t>(space().num_actions));
  std::iota(all.begin(), all.end(), Eigen::Index{0});
  return all;
}

StateActionDist mean_field_joint(const FiniteDist& mu, const DecisionRule& h) {
  if (mu.size() != h.num_agent_states())
    throw DomainError("mean_field_joint: mu and h disagree on the agent state space");
  return StateActionDist(mu.mass().asDiagonal() * h.table());
}

StateActionDist empirical_distribution(std::span<const Eigen::Index> agent_states,
                                       std::span<const Eigen::Index> actions,
                                       Eigen::Index num_agent_states, Eigen::Index num_actions) {
  if (agent_states.empty()) throw DomainError("empirical_distribution: no agents");
  if (agent_states.size() != actions.size())
    throw DomainError("empirical_distribution: state/action count mismatch");
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(num_agent_states, num_actions);
  for (std::size_t i = 0; i < agent_states.size(); ++i) {
    const auto x = agent_states[i];
    const auto u = actions[i];
    if (x < 0 || x >= num_agent_states || u < 0 || u >= num_actions)
      throw DomainError("empirical_distribution: index out of range");
    counts(x, u) += 1.0;
  }
  return StateActionDist(counts / static_cast<double>(agent_states.size()));
}

PopulationReward per_agent_reward_adapter(PerAgentReward per_agent) {
  return [per_agent = std::move(per_agent)](Eigen::Index env_state, const StateActionDist& joint) {
    const Eigen::VectorXd marginal = joint.state_marginal();
    double total = 0.0;
    for (Eigen::Index x = 0; x < marginal.size(); ++x)
      total += per_agent(x, env_state, joint) * marginal[x];
    return total;
  };
}

PolicyTuple lift_policy(const StationaryPolicy& policy, std::int64_t num_agents) {
  if (num_agents < 1) throw DomainError("lift_policy: need at least one agent");
  return PolicyTuple(std::vector<StationaryPolicy>(static_cast<std::size_t>(num_agents), policy));
}

StationaryPolicy average_policy(const PolicyTuple& tuple) {
  const auto& first = tuple[0];
  const double weight = 1.0 / static_cast<double>(tuple.size());
  std::vector<DecisionRule> rules;
  rules.reserve(static_cast<std::size_t>(first.num_env_states()));
  for (Eigen::Index s = 0; s < first.num_env_states(); ++s) {
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(first.at(s).num_agent_states(),
                                                first.at(s).num_actions());
    for (const auto& member : tuple.members()) sum += member.at(s).table();
    rules.emplace_back(sum * weight);
  }
  return StationaryPolicy(std::move(rules));
}

}  // namespace mfc
