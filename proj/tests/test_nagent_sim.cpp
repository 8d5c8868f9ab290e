#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mfc/baselines.hpp"
#include "mfc/nagent_sim.hpp"
#include "mfc/queue_env.hpp"
#include "mfc/solver.hpp"
#include "oracles.hpp"

using namespace mfc;
using namespace mfc::queue;

namespace {

QueueModel make_model(const QueueConfig& c) {
  const QueueSpaces spaces(c);
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(spaces.num_agent_states());
  mu[spaces.full_access_index()] = 0.6;
  const double rest = 0.4 / static_cast<double>(spaces.num_agent_states() - 1);
  for (Eigen::Index x = 0; x < mu.size(); ++x)
    if (x != spaces.full_access_index()) mu[x] = rest;
  return QueueModel(c, FiniteDist(mu), FiniteDist::point_mass(spaces.num_env_states(), 0), 0.99);
}

/// Cauchy-Schwarz: E||G - EG||_1^2 <= |X||U| sum_{x,u} p(1-p)/N for i.i.d. agents.
double variance_bound(const FiniteDist& mu, const DecisionRule& h, std::int64_t n) {
  double s = 0.0;
  for (Eigen::Index x = 0; x < h.num_agent_states(); ++x)
    for (Eigen::Index u = 0; u < h.num_actions(); ++u) {
      const double p = mu[x] * h(x, u);
      s += p * (1.0 - p);
    }
  return static_cast<double>(h.num_agent_states() * h.num_actions()) * s / static_cast<double>(n);
}

}  // namespace

TEST_CASE("horizon from the tail bound") {
  CHECK(horizon_for(0.99, 2.5, 0.01) == 1008);
  CHECK(horizon_for(0.99, 0.0, 0.01) == 1);
  CHECK(horizon_for(0.5, 1.0, 1.0) == 1);
  // definition: smallest T with gamma^T R / (1 - gamma) <= eps
  for (double g : {0.5, 0.9, 0.99}) {
    for (double r : {0.1, 2.5, 40.0}) {
      const auto t = horizon_for(g, r, 0.01);
      CHECK(std::pow(g, static_cast<double>(t)) * r / (1 - g) <= 0.01 * (1 + 1e-12));
      if (t > 1) CHECK(std::pow(g, static_cast<double>(t - 1)) * r / (1 - g) > 0.01);
    }
  }
  CHECK_THROWS_AS(horizon_for(1.0, 1.0, 0.01), DomainError);
}

TEST_CASE("sample_population") {
  RngStream rng(1, 0);
  for (auto x : sample_population(FiniteDist::point_mass(3, 1), 50, rng)) CHECK(x == 1);
  const FiniteDist mu(Eigen::Vector3d(0.2, 0.6, 0.2));
  const auto pop = sample_population(mu, 100000, rng);
  Eigen::Vector3d freq = Eigen::Vector3d::Zero();
  for (auto x : pop) freq[x] += 1.0;
  CHECK(l1_distance(freq / 100000.0, mu.mass()) <= 0.02);
  CHECK_THROWS_AS(sample_population(mu, 0, rng), DomainError);
}

TEST_CASE("simulate_step") {
  const QueueModel model = make_model(QueueConfig::defaults(2));
  const StationaryPolicy jsq = jsq_policy(model.spaces());

  SUBCASE("a single agent yields a point-mass empirical law") {
    RngStream rng(2, 0);
    for (int i = 0; i < 50; ++i) {
      const StepRecord step = simulate_step(model, 0, lift_policy(jsq, 1), rng);
      CHECK(step.empirical.table().maxCoeff() == 1.0);
      CHECK(step.empirical.table().sum() == 1.0);
      CHECK(step.env_before == 0);
    }
  }

  SUBCASE("large populations track the mean-field joint") {
    RngStream rng(2, 1);
    const auto s = model.spaces().env_state_index({3, 1});
    const StepRecord step = simulate_step(model, s, lift_policy(jsq, 10000), rng);
    const StateActionDist target = mean_field_joint(model.space().mu0, jsq.at(s));
    CHECK(l1_distance(step.empirical.table(), target.table()) <= 0.05);
    CHECK(step.reward == doctest::Approx(model.reward(s, step.empirical)));
  }

  SUBCASE("no arrivals: no reward, empty queues stay empty") {
    QueueConfig quiet = QueueConfig::defaults(2);
    quiet.arrival_rate = 0.0;
    const QueueModel silent = make_model(quiet);
    RngStream rng(2, 2);
    const StepRecord step = simulate_step(silent, 0, lift_policy(jsq, 5), rng);
    CHECK(step.reward == 0.0);
    CHECK(step.env_after == 0);
    CHECK(step.realized_drops == 0);
  }

  SUBCASE("space mismatch") {
    const QueueModel three = make_model(QueueConfig::defaults(3));
    RngStream rng(2, 3);
    CHECK_THROWS_AS(simulate_step(three, 0, lift_policy(jsq, 2), rng), DomainError);
  }
}

TEST_CASE("estimate_jn") {
  const QueueModel model = make_model(QueueConfig::defaults(2));
  const StationaryPolicy jsq = jsq_policy(model.spaces());

  SUBCASE("no arrivals: exactly zero") {
    QueueConfig quiet = QueueConfig::defaults(2);
    quiet.arrival_rate = 0.0;
    const QueueModel silent = make_model(quiet);
    EpisodeSpec spec;
    spec.num_agents = 4;
    spec.episodes = 20;
    const JNEstimate est = estimate_jn(silent, lift_policy(jsq, 4), spec);
    CHECK(est.mean == 0.0);
    CHECK(est.std_error == 0.0);
    CHECK(est.horizon == 1);
  }

  SUBCASE("bit-identical across worker counts") {
    EpisodeSpec spec;
    spec.num_agents = 8;
    spec.episodes = 16;
    spec.horizon = 50;
    spec.seed = 42;
    const JNEstimate one = estimate_jn(model, lift_policy(jsq, 8), spec, 1);
    const JNEstimate many = estimate_jn(model, lift_policy(jsq, 8), spec, 8);
    CHECK(one.episode_returns == many.episode_returns);
    CHECK(one.mean == many.mean);
    CHECK(one.std_error == many.std_error);
  }

  SUBCASE("standard error matches the sample standard deviation") {
    EpisodeSpec spec;
    spec.num_agents = 4;
    spec.episodes = 30;
    spec.horizon = 40;
    const JNEstimate est = estimate_jn(model, lift_policy(jsq, 4), spec);
    double mean = 0.0;
    for (double r : est.episode_returns) mean += r;
    mean /= 30.0;
    double ss = 0.0;
    for (double r : est.episode_returns) ss += (r - mean) * (r - mean);
    CHECK(est.mean == doctest::Approx(mean));
    CHECK(est.std_error == doctest::Approx(std::sqrt(ss / 29.0 / 30.0)));
    CHECK(est.horizon == 40);
  }

  SUBCASE("a large population approaches the mean-field objective") {
    const double j = mf_objective(model, jsq);
    EpisodeSpec spec;
    spec.num_agents = 10000;
    spec.episodes = 40;
    spec.seed = 7;
    const JNEstimate est = estimate_jn(model, lift_policy(jsq, 10000), spec);
    MESSAGE("J(jsq)=" << j << "  J^N=" << est.mean << " +- " << est.std_error);
    CHECK(std::abs(est.mean - j) <= 3.0 * est.std_error + 2.0 * spec.tail_eps);
  }
}

TEST_CASE("paired_gap") {
  JNEstimate a, b;
  a.episode_returns = {1.0, 2.0, 3.0, 4.0};
  b.episode_returns = {0.5, 1.5, 2.5, 3.0};
  a.episodes = b.episodes = 4;
  const PairedGap g = paired_gap(a, b);
  // differences 0.5, 0.5, 0.5, 1.0: mean 0.625, sample var 0.0625
  CHECK(g.mean_difference == doctest::Approx(0.625));
  CHECK(g.std_error == doctest::Approx(std::sqrt(0.0625 / 4.0)));
  b.episode_returns.pop_back();
  CHECK_THROWS_AS(paired_gap(a, b), DomainError);
}

TEST_CASE("concentration of the empirical joint") {
  CHECK(concentration_bound(3, 2, 10) == doctest::Approx(0.9));
  CHECK(concentration_bound(3, 2, 1000) == doctest::Approx(0.009));

  const FiniteDist mu(Eigen::Vector3d(0.2, 0.6, 0.2));
  const DecisionRule h = DecisionRule::uniform(3, 2);

  SUBCASE("degenerate law gives zero deviation") {
    const auto r = concentration_trial(FiniteDist::point_mass(3, 1),
                                       DecisionRule::constant_action(3, 2, 0), 10, 1000, 1);
    CHECK(r.mean_sq_l1() == 0.0);
    CHECK(r.tail_frequency(0.1) == 0.0);
  }

  SUBCASE("bound and variance oracle") {
    for (std::int64_t n : {10, 100, 1000}) {
      const auto r = concentration_trial(mu, h, n, 10000, 2);
      CHECK(r.trials() == 10000);
      CHECK(r.mean_sq_l1() <= concentration_bound(3, 2, n));
      CHECK(r.mean_sq_l1() <= 1.05 * variance_bound(mu, h, n));
      for (double eps : {0.1, 0.3})
        CHECK(r.tail_frequency(eps) <= concentration_bound(3, 2, n) / (eps * eps) + 0.01);
      CHECK(l1_distance(r.mean_joint(), mean_field_joint(mu, h).table()) <= 0.02);
    }
  }

  SUBCASE("quadrupling N divides the squared deviation by about four") {
    const double a = concentration_trial(mu, h, 25, 10000, 3).mean_sq_l1();
    const double b = concentration_trial(mu, h, 100, 10000, 3).mean_sq_l1();
    CHECK(a / b >= 4.0 / 1.5);
    CHECK(a / b <= 4.0 * 1.5);
  }

  SUBCASE("deterministic in worker count") {
    const auto one = concentration_trial(mu, h, 50, 2000, 4, 1);
    const auto many = concentration_trial(mu, h, 50, 2000, 4, 8);
    CHECK(one.mean_sq_l1() == many.mean_sq_l1());
    CHECK(one.mean_joint() == many.mean_joint());
  }

  SUBCASE("tail frequency is a non-increasing step function") {
    const auto r = concentration_trial(mu, h, 20, 2000, 5);
    double prev = 1.0;
    for (double eps = 0.0; eps <= 1.0; eps += 0.05) {
      const double f = r.tail_frequency(eps);
      CHECK(f <= prev);
      CHECK(f >= 0.0);
      prev = f;
    }
    CHECK(r.tail_frequency(0.0) == 1.0);
  }

  CHECK_THROWS_AS(concentration_trial(mu, h, 10, 1, 0), DomainError);
}
