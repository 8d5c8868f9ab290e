#pragma once

#include "mfc/model.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace mfc::queue {

/// M parallel finite FIFO queues fed by a Poisson packet stream.
struct QueueConfig {
  int num_queues = 2;
  std::vector<int> capacity{5, 5};
  double arrival_rate = 5.0;          // lambda, packets per second
  std::vector<double> service_rate{3.0, 3.0};  // beta per queue, per second
  double dt = 0.5;                    // synchronization interval
  double drop_penalty = 1.0;          // c_d
  double trunc_eps = 1e-12;

  /// Default parameters for the given queue count (lambda = 3M - 1).
  static QueueConfig defaults(int num_queues = 2);
  void validate() const;
};

/// Buffer fillings [b_0, ..., b_{M-1}].
using EnvState = std::vector<int>;
/// Sorted, nonempty set of accessible queue indices.
using AgentState = std::vector<int>;

/// Canonical enumeration of X (lexicographic access lists) and X0
/// (lexicographic fillings, last queue fastest).
class QueueSpaces {
 public:
  explicit QueueSpaces(const QueueConfig& config);

  int num_queues() const { return num_queues_; }
  Eigen::Index num_agent_states() const { return static_cast<Eigen::Index>(agent_states_.size()); }
  Eigen::Index num_env_states() const { return num_env_states_; }

  const AgentState& agent_state(Eigen::Index index) const;
  Eigen::Index agent_state_index(const AgentState& access) const;
  EnvState env_state(Eigen::Index index) const;
  Eigen::Index env_state_index(const EnvState& fillings) const;

  /// Index of the agent state with access to every queue.
  Eigen::Index full_access_index() const;

 private:
  int num_queues_;
  std::vector<int> capacity_;
  std::vector<AgentState> agent_states_;
  Eigen::Index num_env_states_;
};

std::string format_index_list(const std::vector<int>& values);
/// Parses "[a,b,...]" (whitespace tolerated).
std::vector<int> parse_index_list(const std::string& text);

/// Destination law of a packet routed by an agent at `access` choosing `action`:
/// the chosen queue if accessible, otherwise uniform over the accessible ones.
Eigen::VectorXd routing_kernel(const AgentState& access, int action, int num_queues);

/// p_j = sum_{x,u} G(x,u) routing_kernel(x,u)(j)
Eigen::VectorXd aggregate_routing(const QueueSpaces& spaces, const StateActionDist& joint);

/// Poisson(rate) truncated at the smallest K with P(X > K) < trunc_eps, renormalized.
FiniteDist truncated_poisson(double rate, double trunc_eps);

struct QueueTransition {
  Eigen::VectorXd next_level;  // over {0, ..., capacity}
  double expected_drops = 0.0;
};

/// Departures first, then arrivals; overflow beyond capacity is dropped.
QueueTransition queue_transition(int level, int capacity, const FiniteDist& arrivals,
                                 const FiniteDist& departures);
QueueTransition queue_transition(int level, int capacity, double arrival_rate,
                                 double service_rate, double trunc_eps = 1e-12);

/// Single-step MFC model of the scheduling problem.
class QueueModel final : public MfcModel {
 public:
  QueueModel(QueueConfig config, FiniteDist mu0, FiniteDist mu0_env, double gamma);

  const SpaceSpec& space() const override { return space_; }
  const QueueSpaces& spaces() const { return spaces_; }
  const QueueConfig& config() const { return config_; }

  double reward(Eigen::Index env_state, const StateActionDist& joint) const override;
  Eigen::VectorXd transition(Eigen::Index env_state, const StateActionDist& joint) const override;
  double reward_bound() const override;
  EnvStepSample sample_step(Eigen::Index env_state, const StateActionDist& joint,
                            RngStream& rng) const override;
  std::vector<Eigen::Index> decision_support(Eigen::Index agent_state) const override;
  DecisionRule canonicalize(const DecisionRule& rule) const override;

  /// Per-queue expected drops at x0 under routing law p.
  Eigen::VectorXd expected_drops(const EnvState& fillings, const Eigen::VectorXd& routing) const;
  /// Reward and transition row from a routing law directly.
  double reward_from_routing(const EnvState& fillings, const Eigen::VectorXd& routing) const;
  Eigen::VectorXd transition_from_routing(const EnvState& fillings,
                                          const Eigen::VectorXd& routing) const;

 private:
  QueueConfig config_;
  QueueSpaces spaces_;
  SpaceSpec space_;
  std::vector<FiniteDist> departures_;
};

}  // namespace mfc::queue
