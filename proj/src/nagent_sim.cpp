#include "mfc/nagent_sim.hpp"

#include "mfc/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace mfc {

std::int64_t horizon_for(double gamma, double reward_bound, double tail_eps) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError("horizon_for: gamma must lie in (0, 1)");
  if (!(tail_eps > 0.0)) throw DomainError("horizon_for: tail_eps must be > 0");
  if (reward_bound <= 0.0) return 1;
  const double t = std::log(tail_eps * (1.0 - gamma) / reward_bound) / std::log(gamma);
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(t)));
}

std::vector<Eigen::Index> sample_population(const FiniteDist& mu0, std::int64_t num_agents,
                                            RngStream& rng) {
  if (num_agents < 1) throw DomainError("sample_population: need at least one agent");
  std::vector<Eigen::Index> states(static_cast<std::size_t>(num_agents));
  for (auto& x : states) x = sample(mu0, rng);
  return states;
}

StepRecord simulate_step(const MfcModel& model, Eigen::Index env_state, const PolicyTuple& tuple,
                         RngStream& rng) {
  const auto& space = model.space();
  if (tuple[0].num_env_states() != space.num_env_states ||
      tuple[0].at(0).num_agent_states() != space.num_agent_states ||
      tuple[0].at(0).num_actions() != space.num_actions)
    throw DomainError("simulate_step: policy tuple does not match the model's spaces");

  const auto agent_states = sample_population(space.mu0, static_cast<std::int64_t>(tuple.size()), rng);
  std::vector<Eigen::Index> actions(agent_states.size());
  for (std::size_t i = 0; i < agent_states.size(); ++i) {
    const auto& rule = tuple[i].at(env_state).table();
    actions[i] = sample_index(rule.row(agent_states[i]), rng.uniform());
  }

  StepRecord record;
  record.env_before = env_state;
  record.empirical =
      empirical_distribution(agent_states, actions, space.num_agent_states, space.num_actions);
  record.reward = model.reward(env_state, record.empirical);
  const EnvStepSample next = model.sample_step(env_state, record.empirical, rng);
  record.env_after = next.next_env_state;
  record.realized_drops = next.realized_drops;
  return record;
}

JNEstimate estimate_jn(const MfcModel& model, const PolicyTuple& tuple, const EpisodeSpec& spec,
                       int workers) {
  if (spec.num_agents < 1) throw DomainError("estimate_jn: need at least one agent");
  if (spec.episodes < 1) throw DomainError("estimate_jn: need at least one episode");
  if (static_cast<std::int64_t>(tuple.size()) != spec.num_agents)
    throw DomainError("estimate_jn: tuple size differs from the agent count");
  const auto& space = model.space();
  JNEstimate estimate;
  estimate.episodes = spec.episodes;
  estimate.horizon = spec.horizon > 0 ? spec.horizon
                                      : horizon_for(space.gamma, model.reward_bound(), spec.tail_eps);

  const auto episodes = static_cast<std::size_t>(spec.episodes);
  std::vector<double> returns(episodes, 0.0);
  std::vector<std::int64_t> drops(episodes, 0);
  parallel_for(episodes, workers, [&](std::size_t e) {
    RngStream rng(spec.seed, e);
    Eigen::Index env = sample(space.mu0_env, rng);
    double discount = 1.0;
    double total = 0.0;
    std::int64_t dropped = 0;
    for (std::int64_t t = 0; t < estimate.horizon; ++t) {
      const StepRecord step = simulate_step(model, env, tuple, rng);
      total += discount * step.reward;
      dropped += step.realized_drops;
      discount *= space.gamma;
      env = step.env_after;
    }
    returns[e] = total;
    drops[e] = dropped;
  });

  double sum = 0.0;
  std::int64_t drop_sum = 0;
  for (std::size_t e = 0; e < episodes; ++e) {
    sum += returns[e];
    drop_sum += drops[e];
  }
  const double n = static_cast<double>(episodes);
  estimate.mean = sum / n;
  if (episodes > 1) {
    double squares = 0.0;
    for (double r : returns) squares += (r - estimate.mean) * (r - estimate.mean);
    estimate.std_error = std::sqrt(squares / (n - 1.0) / n);
  }
  estimate.mean_drops_per_step =
      static_cast<double>(drop_sum) / (n * static_cast<double>(estimate.horizon));
  estimate.episode_returns = std::move(returns);
  return estimate;
}

PairedGap paired_gap(const JNEstimate& a, const JNEstimate& b) {
  if (a.episode_returns.size() != b.episode_returns.size() || a.episode_returns.empty())
    throw DomainError("paired_gap: estimates cover different episode sets");
  const std::size_t n = a.episode_returns.size();
  PairedGap gap;
  for (std::size_t e = 0; e < n; ++e) gap.mean_difference += a.episode_returns[e] - b.episode_returns[e];
  gap.mean_difference /= static_cast<double>(n);
  if (n > 1) {
    double squares = 0.0;
    for (std::size_t e = 0; e < n; ++e) {
      const double d = a.episode_returns[e] - b.episode_returns[e] - gap.mean_difference;
      squares += d * d;
    }
    gap.std_error = std::sqrt(squares / static_cast<double>(n - 1) / static_cast<double>(n));
  }
  return gap;
}

ConcentrationResult::ConcentrationResult(double mean_sq_l1, std::vector<double> deviations,
                                         Eigen::MatrixXd mean_joint)
    : mean_sq_l1_(mean_sq_l1), deviations_(std::move(deviations)), mean_joint_(std::move(mean_joint)) {
  std::sort(deviations_.begin(), deviations_.end());
}

double ConcentrationResult::tail_frequency(double eps) const {
  if (deviations_.empty()) return 0.0;
  const auto first = std::lower_bound(deviations_.begin(), deviations_.end(), eps);
  return static_cast<double>(deviations_.end() - first) / static_cast<double>(deviations_.size());
}

double concentration_bound(Eigen::Index num_agent_states, Eigen::Index num_actions,
                           std::int64_t num_agents) {
  const double cells = static_cast<double>(num_agent_states * num_actions);
  return cells * cells / (4.0 * static_cast<double>(num_agents));
}

ConcentrationResult concentration_trial(const FiniteDist& mu0, const std::vector<DecisionRule>& rules,
                                        std::int64_t num_agents, std::int64_t trials,
                                        std::uint64_t seed, int workers) {
  if (num_agents < 1) throw DomainError("concentration_trial: need at least one agent");
  if (trials < 2) throw DomainError("concentration_trial: need at least two trials");
  if (rules.empty()) throw DomainError("concentration_trial: no decision rules");
  const auto num_states = rules.front().num_agent_states();
  const auto num_actions = rules.front().num_actions();
  if (mu0.size() != num_states) throw DomainError("concentration_trial: mu0 size mismatch");

  const auto count = static_cast<std::size_t>(trials);
  std::vector<Eigen::MatrixXd> samples(count);
  parallel_for(count, workers, [&](std::size_t k) {
    RngStream rng(seed, k);
    const auto states = sample_population(mu0, num_agents, rng);
    std::vector<Eigen::Index> actions(states.size());
    for (std::size_t i = 0; i < states.size(); ++i)
      actions[i] = sample_index(rules[i % rules.size()].table().row(states[i]), rng.uniform());
    samples[k] = empirical_distribution(states, actions, num_states, num_actions).table();
  });

  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(num_states, num_actions);
  for (const auto& g : samples) mean += g;
  mean /= static_cast<double>(count);

  std::vector<double> deviations(count);
  double sum_sq = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    deviations[k] = l1_distance(samples[k], mean);
    sum_sq += deviations[k] * deviations[k];
  }
  return ConcentrationResult(sum_sq / static_cast<double>(count), std::move(deviations),
                             std::move(mean));
}

ConcentrationResult concentration_trial(const FiniteDist& mu0, const DecisionRule& rule,
                                        std::int64_t num_agents, std::int64_t trials,
                                        std::uint64_t seed, int workers) {
  return concentration_trial(mu0, std::vector<DecisionRule>{rule}, num_agents, trials, seed, workers);
}

}  // namespace mfc
