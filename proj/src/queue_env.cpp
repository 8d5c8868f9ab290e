#include "mfc/queue_env.hpp"

#include "mfc/rng.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

namespace mfc::queue {

QueueConfig QueueConfig::defaults(int num_queues) {
  QueueConfig config;
  config.num_queues = num_queues;
  config.capacity.assign(static_cast<std::size_t>(num_queues), 5);
  config.service_rate.assign(static_cast<std::size_t>(num_queues), 3.0);
  config.arrival_rate = 3.0 * num_queues - 1.0;
  return config;
}

void QueueConfig::validate() const {
  if (num_queues < 1) throw DomainError("QueueConfig: need at least one queue");
  if (num_queues > 16) throw DomainError("QueueConfig: at most 16 queues are supported");
  if (capacity.size() != static_cast<std::size_t>(num_queues))
    throw DomainError("QueueConfig: capacity list length must equal the queue count");
  if (service_rate.size() != static_cast<std::size_t>(num_queues))
    throw DomainError("QueueConfig: service rate list length must equal the queue count");
  for (int b : capacity)
    if (b < 1) throw DomainError("QueueConfig: buffer capacities must be >= 1");
  for (double beta : service_rate)
    if (!(beta > 0.0)) throw DomainError("QueueConfig: service rates must be > 0");
  if (!(arrival_rate >= 0.0)) throw DomainError("QueueConfig: arrival rate must be >= 0");
  if (!(dt > 0.0)) throw DomainError("QueueConfig: dt must be > 0");
  if (!(drop_penalty >= 0.0)) throw DomainError("QueueConfig: drop penalty must be >= 0");
  if (!(trunc_eps > 0.0 && trunc_eps <= 1e-6))
    throw DomainError("QueueConfig: trunc_eps must lie in (0, 1e-6]");
}

QueueSpaces::QueueSpaces(const QueueConfig& config)
    : num_queues_(config.num_queues), capacity_(config.capacity), num_env_states_(1) {
  for (unsigned mask = 1; mask < (1u << num_queues_); ++mask) {
    AgentState access;
    for (int j = 0; j < num_queues_; ++j)
      if (mask & (1u << j)) access.push_back(j);
    agent_states_.push_back(std::move(access));
  }
  std::sort(agent_states_.begin(), agent_states_.end());
  for (int b : capacity_) num_env_states_ *= (b + 1);
}

const AgentState& QueueSpaces::agent_state(Eigen::Index index) const {
  if (index < 0 || index >= num_agent_states()) throw DomainError("agent state index out of range");
  return agent_states_[static_cast<std::size_t>(index)];
}

Eigen::Index QueueSpaces::agent_state_index(const AgentState& access) const {
  const auto it = std::lower_bound(agent_states_.begin(), agent_states_.end(), access);
  if (it == agent_states_.end() || *it != access)
    throw DomainError("unknown agent state " + format_index_list(access));
  return it - agent_states_.begin();
}

EnvState QueueSpaces::env_state(Eigen::Index index) const {
  if (index < 0 || index >= num_env_states_) throw DomainError("env state index out of range");
  EnvState fillings(static_cast<std::size_t>(num_queues_));
  for (int j = num_queues_ - 1; j >= 0; --j) {
    const int radix = capacity_[static_cast<std::size_t>(j)] + 1;
    fillings[static_cast<std::size_t>(j)] = static_cast<int>(index % radix);
    index /= radix;
  }
  return fillings;
}

Eigen::Index QueueSpaces::env_state_index(const EnvState& fillings) const {
  if (fillings.size() != static_cast<std::size_t>(num_queues_))
    throw DomainError("env state " + format_index_list(fillings) + " has the wrong length");
  Eigen::Index index = 0;
  for (std::size_t j = 0; j < fillings.size(); ++j) {
    if (fillings[j] < 0 || fillings[j] > capacity_[j])
      throw DomainError("env state " + format_index_list(fillings) + " exceeds buffer bounds");
    index = index * (capacity_[j] + 1) + fillings[j];
  }
  return index;
}

Eigen::Index QueueSpaces::full_access_index() const {
  AgentState all(static_cast<std::size_t>(num_queues_));
  for (int j = 0; j < num_queues_; ++j) all[static_cast<std::size_t>(j)] = j;
  return agent_state_index(all);
}

std::string format_index_list(const std::vector<int>& values) {
  std::string out = "[";
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += ',';
    out += std::to_string(values[i]);
  }
  return out + "]";
}

std::vector<int> parse_index_list(const std::string& text) {
  std::string compact;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) compact += c;
  if (compact.size() < 2 || compact.front() != '[' || compact.back() != ']')
    throw DomainError("malformed index list '" + text + "'");
  std::vector<int> values;
  const std::string body = compact.substr(1, compact.size() - 2);
  if (body.empty()) return values;
  std::stringstream stream(body);
  std::string item;
  while (std::getline(stream, item, ',')) {
    if (item.empty() || !std::all_of(item.begin(), item.end(), [](char c) {
          return std::isdigit(static_cast<unsigned char>(c));
        }))
      throw DomainError("malformed index list '" + text + "'");
    values.push_back(std::stoi(item));
  }
  return values;
}

Eigen::VectorXd routing_kernel(const AgentState& access, int action, int num_queues) {
  if (action < 0 || action >= num_queues) throw DomainError("routing_kernel: action out of range");
  Eigen::VectorXd law = Eigen::VectorXd::Zero(num_queues);
  if (std::find(access.begin(), access.end(), action) != access.end()) {
    law[action] = 1.0;
    return law;
  }
  const double share = 1.0 / static_cast<double>(access.size());
  for (int j : access) law[j] = share;
  return law;
}

Eigen::VectorXd aggregate_routing(const QueueSpaces& spaces, const StateActionDist& joint) {
  const int m = spaces.num_queues();
  if (joint.table().rows() != spaces.num_agent_states() || joint.table().cols() != m)
    throw DomainError("aggregate_routing: joint has the wrong shape");
  Eigen::VectorXd routing = Eigen::VectorXd::Zero(m);
  for (Eigen::Index x = 0; x < joint.table().rows(); ++x) {
    const AgentState& access = spaces.agent_state(x);
    double inaccessible = 0.0;
    for (int u = 0; u < m; ++u) {
      const double mass = joint(x, u);
      if (std::find(access.begin(), access.end(), u) != access.end())
        routing[u] += mass;
      else
        inaccessible += mass;
    }
    if (inaccessible > 0.0) {
      const double share = inaccessible / static_cast<double>(access.size());
      for (int j : access) routing[j] += share;
    }
  }
  return routing;
}

FiniteDist truncated_poisson(double rate, double trunc_eps) {
  if (!(rate >= 0.0)) throw DomainError("truncated_poisson: rate must be >= 0");
  if (!(trunc_eps > 0.0 && trunc_eps < 1.0))
    throw DomainError("truncated_poisson: trunc_eps must lie in (0, 1)");
  if (rate == 0.0) return FiniteDist::point_mass(1, 0);

  std::vector<double> pmf;
  const double log_rate = std::log(rate);
  const bool log_space = rate > 600.0;
  double term = std::exp(-rate);
  double cdf = 0.0;
  for (int k = 0;; ++k) {
    if (log_space)
      term = std::exp(k * log_rate - rate - std::lgamma(k + 1.0));
    else if (k > 0)
      term *= rate / k;
    pmf.push_back(term);
    cdf += term;
    if (1.0 - cdf < trunc_eps) break;
    // rounding floor of the accumulated cdf; the tail is long gone by here
    if (k > rate + 40.0 * std::sqrt(rate) + 100.0) break;
  }
  Eigen::VectorXd mass = Eigen::Map<Eigen::VectorXd>(pmf.data(), static_cast<Eigen::Index>(pmf.size()));
  return FiniteDist(mass / mass.sum());
}

QueueTransition queue_transition(int level, int capacity, const FiniteDist& arrivals,
                                 const FiniteDist& departures) {
  if (capacity < 0 || level < 0 || level > capacity)
    throw DomainError("queue_transition: level outside [0, capacity]");
  // post-departure level
  Eigen::VectorXd after_service = Eigen::VectorXd::Zero(level + 1);
  for (Eigen::Index d = 0; d < departures.size(); ++d)
    after_service[std::max<Eigen::Index>(level - d, 0)] += departures[d];

  QueueTransition result;
  result.next_level = Eigen::VectorXd::Zero(capacity + 1);
  for (Eigen::Index b = 0; b <= level; ++b) {
    const double pb = after_service[b];
    if (pb == 0.0) continue;
    for (Eigen::Index a = 0; a < arrivals.size(); ++a) {
      const double mass = pb * arrivals[a];
      const Eigen::Index total = b + a;
      if (total > capacity) {
        result.next_level[capacity] += mass;
        result.expected_drops += mass * static_cast<double>(total - capacity);
      } else {
        result.next_level[total] += mass;
      }
    }
  }
  return result;
}

QueueTransition queue_transition(int level, int capacity, double arrival_rate,
                                 double service_rate, double trunc_eps) {
  return queue_transition(level, capacity, truncated_poisson(arrival_rate, trunc_eps),
                          truncated_poisson(service_rate, trunc_eps));
}

QueueModel::QueueModel(QueueConfig config, FiniteDist mu0, FiniteDist mu0_env, double gamma)
    : config_(std::move(config)), spaces_((config_.validate(), config_)) {
  space_.num_agent_states = spaces_.num_agent_states();
  space_.num_actions = config_.num_queues;
  space_.num_env_states = spaces_.num_env_states();
  space_.mu0 = std::move(mu0);
  space_.mu0_env = std::move(mu0_env);
  space_.gamma = gamma;
  space_.validate();
  for (double beta : config_.service_rate)
    departures_.push_back(truncated_poisson(beta * config_.dt, config_.trunc_eps));
}

Eigen::VectorXd QueueModel::expected_drops(const EnvState& fillings,
                                           const Eigen::VectorXd& routing) const {
  Eigen::VectorXd drops(config_.num_queues);
  for (int j = 0; j < config_.num_queues; ++j) {
    const auto arrivals =
        truncated_poisson(config_.arrival_rate * config_.dt * routing[j], config_.trunc_eps);
    drops[j] = queue_transition(fillings[static_cast<std::size_t>(j)],
                                config_.capacity[static_cast<std::size_t>(j)], arrivals,
                                departures_[static_cast<std::size_t>(j)])
                   .expected_drops;
  }
  return drops;
}

double QueueModel::reward_from_routing(const EnvState& fillings,
                                       const Eigen::VectorXd& routing) const {
  return -config_.drop_penalty * expected_drops(fillings, routing).sum();
}

Eigen::VectorXd QueueModel::transition_from_routing(const EnvState& fillings,
                                                    const Eigen::VectorXd& routing) const {
  Eigen::VectorXd joint = Eigen::VectorXd::Ones(1);
  for (int j = 0; j < config_.num_queues; ++j) {
    const auto arrivals =
        truncated_poisson(config_.arrival_rate * config_.dt * routing[j], config_.trunc_eps);
    const Eigen::VectorXd marginal =
        queue_transition(fillings[static_cast<std::size_t>(j)],
                         config_.capacity[static_cast<std::size_t>(j)], arrivals,
                         departures_[static_cast<std::size_t>(j)])
            .next_level;
    // mixed-radix product, later queues vary fastest
    Eigen::VectorXd next(joint.size() * marginal.size());
    for (Eigen::Index i = 0; i < joint.size(); ++i)
      next.segment(i * marginal.size(), marginal.size()) = joint[i] * marginal;
    joint = std::move(next);
  }
  return joint;
}

double QueueModel::reward(Eigen::Index env_state, const StateActionDist& joint) const {
  return reward_from_routing(spaces_.env_state(env_state), aggregate_routing(spaces_, joint));
}

Eigen::VectorXd QueueModel::transition(Eigen::Index env_state, const StateActionDist& joint) const {
  return transition_from_routing(spaces_.env_state(env_state), aggregate_routing(spaces_, joint));
}

double QueueModel::reward_bound() const {
  return config_.drop_penalty * config_.arrival_rate * config_.dt;
}

EnvStepSample QueueModel::sample_step(Eigen::Index env_state, const StateActionDist& joint,
                                      RngStream& rng) const {
  const EnvState fillings = spaces_.env_state(env_state);
  const Eigen::VectorXd routing = aggregate_routing(spaces_, joint);
  EnvState next(fillings.size());
  EnvStepSample out;
  for (int j = 0; j < config_.num_queues; ++j) {
    const auto jj = static_cast<std::size_t>(j);
    const std::int64_t served = rng.poisson(config_.service_rate[jj] * config_.dt);
    const std::int64_t arrived = rng.poisson(config_.arrival_rate * config_.dt * routing[j]);
    const std::int64_t level = std::max<std::int64_t>(fillings[jj] - served, 0) + arrived;
    const std::int64_t cap = config_.capacity[jj];
    next[jj] = static_cast<int>(std::min(level, cap));
    out.realized_drops += std::max<std::int64_t>(level - cap, 0);
  }
  out.next_env_state = spaces_.env_state_index(next);
  return out;
}

std::vector<Eigen::Index> QueueModel::decision_support(Eigen::Index agent_state) const {
  const AgentState& access = spaces_.agent_state(agent_state);
  return {access.begin(), access.end()};
}

DecisionRule QueueModel::canonicalize(const DecisionRule& rule) const {
  const int m = config_.num_queues;
  if (rule.num_agent_states() != spaces_.num_agent_states() || rule.num_actions() != m)
    throw DomainError("canonicalize: decision rule has the wrong shape");
  Eigen::MatrixXd table = Eigen::MatrixXd::Zero(rule.num_agent_states(), m);
  for (Eigen::Index x = 0; x < rule.num_agent_states(); ++x) {
    const AgentState& access = spaces_.agent_state(x);
    for (int u = 0; u < m; ++u)
      table.row(x) += rule(x, u) * routing_kernel(access, u, m).transpose();
  }
  return DecisionRule(std::move(table));
}

}  // namespace mfc::queue
