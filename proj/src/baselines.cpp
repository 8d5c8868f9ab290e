#include "mfc/baselines.hpp"

#include <algorithm>

namespace mfc::queue {

StationaryPolicy jsq_policy(const QueueSpaces& spaces) {
  const int m = spaces.num_queues();
  std::vector<DecisionRule> rules;
  rules.reserve(static_cast<std::size_t>(spaces.num_env_states()));
  for (Eigen::Index s = 0; s < spaces.num_env_states(); ++s) {
    const EnvState fillings = spaces.env_state(s);
    Eigen::MatrixXd table = Eigen::MatrixXd::Zero(spaces.num_agent_states(), m);
    for (Eigen::Index x = 0; x < spaces.num_agent_states(); ++x) {
      const AgentState& access = spaces.agent_state(x);
      int shortest = fillings[static_cast<std::size_t>(access.front())];
      for (int j : access) shortest = std::min(shortest, fillings[static_cast<std::size_t>(j)]);
      const auto ties = std::count_if(access.begin(), access.end(), [&](int j) {
        return fillings[static_cast<std::size_t>(j)] == shortest;
      });
      for (int j : access)
        if (fillings[static_cast<std::size_t>(j)] == shortest) table(x, j) = 1.0 / static_cast<double>(ties);
    }
    rules.emplace_back(std::move(table));
  }
  return StationaryPolicy(std::move(rules));
}

StationaryPolicy uniform_policy(const QueueSpaces& spaces) {
  const int m = spaces.num_queues();
  Eigen::MatrixXd table = Eigen::MatrixXd::Zero(spaces.num_agent_states(), m);
  for (Eigen::Index x = 0; x < spaces.num_agent_states(); ++x) {
    const AgentState& access = spaces.agent_state(x);
    for (int j : access) table(x, j) = 1.0 / static_cast<double>(access.size());
  }
  return StationaryPolicy(std::vector<DecisionRule>(
      static_cast<std::size_t>(spaces.num_env_states()), DecisionRule(std::move(table))));
}

StationaryPolicy fixed_action_policy(const QueueSpaces& spaces, int action) {
  return StationaryPolicy(std::vector<DecisionRule>(
      static_cast<std::size_t>(spaces.num_env_states()),
      DecisionRule::constant_action(spaces.num_agent_states(), spaces.num_queues(), action)));
}

PolicyTuple alternating_tuple(const QueueSpaces& spaces, std::int64_t num_agents) {
  if (num_agents < 1) throw DomainError("alternating_tuple: need at least one agent");
  std::vector<StationaryPolicy> fixed;
  for (int j = 0; j < spaces.num_queues(); ++j) fixed.push_back(fixed_action_policy(spaces, j));
  std::vector<StationaryPolicy> members;
  members.reserve(static_cast<std::size_t>(num_agents));
  for (std::int64_t i = 0; i < num_agents; ++i)
    members.push_back(fixed[static_cast<std::size_t>(i % spaces.num_queues())]);
  return PolicyTuple(std::move(members));
}

}  // namespace mfc::queue
