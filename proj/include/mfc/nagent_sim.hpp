#pragma once

#include "mfc/model.hpp"
#include "mfc/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace mfc {

/// Configuration of the Monte Carlo J^N estimator.
struct EpisodeSpec {
  std::int64_t num_agents = 1;
  std::int64_t horizon = 0;  // 0: derive from tail_eps
  std::int64_t episodes = 500;
  double tail_eps = 0.01;
  std::uint64_t seed = 0;
};

/// Smallest T with gamma^T R / (1 - gamma) <= tail_eps. R = 0 gives T = 1.
std::int64_t horizon_for(double gamma, double reward_bound, double tail_eps);

struct StepRecord {
  Eigen::Index env_before = 0;
  Eigen::Index env_after = 0;
  StateActionDist empirical;
  double reward = 0.0;
  std::int64_t realized_drops = 0;
};

/// N i.i.d. draws from mu0.
std::vector<Eigen::Index> sample_population(const FiniteDist& mu0, std::int64_t num_agents,
                                            RngStream& rng);

/// One synchronous step of the N-agent system under a policy tuple.
StepRecord simulate_step(const MfcModel& model, Eigen::Index env_state, const PolicyTuple& tuple,
                         RngStream& rng);

struct JNEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  double mean_drops_per_step = 0.0;
  std::int64_t horizon = 0;
  std::int64_t episodes = 0;
  std::vector<double> episode_returns;  // in episode order
};

/// Mean of truncated discounted returns sum_{t<T} gamma^t r_t over episodes.
/// Episode e draws from RngStream(spec.seed, e).
JNEstimate estimate_jn(const MfcModel& model, const PolicyTuple& tuple, const EpisodeSpec& spec,
                       int workers = 1);

/// Paired difference of two estimates that share episode streams.
struct PairedGap {
  double mean_difference = 0.0;  // a - b
  double std_error = 0.0;
};
PairedGap paired_gap(const JNEstimate& a, const JNEstimate& b);

/// Monte Carlo check of the concentration of G^N around its mean.
class ConcentrationResult {
 public:
  ConcentrationResult(double mean_sq_l1, std::vector<double> deviations, Eigen::MatrixXd mean_joint);

  /// Estimate of E ||G^N - E G^N||_1^2.
  double mean_sq_l1() const { return mean_sq_l1_; }
  /// Empirical P(||G^N - E G^N||_1 >= eps).
  double tail_frequency(double eps) const;
  const Eigen::MatrixXd& mean_joint() const { return mean_joint_; }
  std::size_t trials() const { return deviations_.size(); }

 private:
  double mean_sq_l1_;
  std::vector<double> deviations_;  // sorted ascending
  Eigen::MatrixXd mean_joint_;
};

/// |X|^2 |U|^2 / (4N)
double concentration_bound(Eigen::Index num_agent_states, Eigen::Index num_actions,
                           std::int64_t num_agents);

/// Draws `trials` populations of size N under fixed rules (one per agent,
/// cycled if fewer than N) and measures ||G^N - mean||_1. Trial k uses
/// RngStream(seed, k).
ConcentrationResult concentration_trial(const FiniteDist& mu0, const std::vector<DecisionRule>& rules,
                                        std::int64_t num_agents, std::int64_t trials,
                                        std::uint64_t seed, int workers = 1);
ConcentrationResult concentration_trial(const FiniteDist& mu0, const DecisionRule& rule,
                                        std::int64_t num_agents, std::int64_t trials,
                                        std::uint64_t seed, int workers = 1);

}  // namespace mfc
