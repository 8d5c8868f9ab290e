#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mfc/baselines.hpp"
#include "mfc/queue_env.hpp"

using namespace mfc;
using namespace mfc::queue;

namespace {

double route0(const StationaryPolicy& pi, const QueueSpaces& spaces, const EnvState& fill) {
  return pi.at(spaces.env_state_index(fill))(spaces.full_access_index(), 0);
}

}  // namespace

TEST_CASE("jsq examples") {
  const QueueSpaces spaces(QueueConfig::defaults(2));
  const StationaryPolicy jsq = jsq_policy(spaces);
  CHECK(jsq.num_env_states() == 36);
  CHECK(route0(jsq, spaces, {2, 5}) == 1.0);
  CHECK(route0(jsq, spaces, {5, 2}) == 0.0);
  CHECK(route0(jsq, spaces, {3, 3}) == 0.5);
  CHECK(route0(jsq, spaces, {0, 0}) == 0.5);
  // single-access agents have no choice
  const auto only1 = spaces.agent_state_index({1});
  CHECK(jsq.at(spaces.env_state_index({0, 5}))(only1, 1) == 1.0);

  const QueueSpaces three(QueueConfig::defaults(3));
  const StationaryPolicy jsq3 = jsq_policy(three);
  const DecisionRule& h = jsq3.at(three.env_state_index({1, 1, 4}));
  const auto all = three.full_access_index();
  CHECK(h(all, 0) == 0.5);
  CHECK(h(all, 1) == 0.5);
  CHECK(h(all, 2) == 0.0);
  const auto pair02 = three.agent_state_index({0, 2});
  CHECK(h(pair02, 0) == 1.0);
}

TEST_CASE("jsq is monotone in the fillings") {
  const QueueSpaces spaces(QueueConfig::defaults(2));
  const StationaryPolicy jsq = jsq_policy(spaces);
  for (int b1 = 0; b1 <= 5; ++b1) {
    double prev = 2.0;
    for (int b0 = 0; b0 <= 5; ++b0) {
      const double p = route0(jsq, spaces, {b0, b1});
      CHECK(p <= prev);
      prev = p;
    }
  }
}

TEST_CASE("uniform and fixed-action policies") {
  const QueueSpaces spaces(QueueConfig::defaults(2));
  const StationaryPolicy uni = uniform_policy(spaces);
  for (Eigen::Index s = 0; s < 36; ++s) {
    CHECK(uni.at(s)(spaces.full_access_index(), 0) == 0.5);
    CHECK(uni.at(s)(spaces.agent_state_index({0}), 0) == 1.0);
  }
  // uniform mu0 over access sets splits traffic evenly
  const StateActionDist g = mean_field_joint(FiniteDist::uniform(3), uni.at(0));
  const Eigen::VectorXd p = aggregate_routing(spaces, g);
  CHECK(p[0] == doctest::Approx(0.5));

  const StationaryPolicy fixed = fixed_action_policy(spaces, 1);
  CHECK(fixed.at(7)(spaces.full_access_index(), 1) == 1.0);
  CHECK_THROWS_AS(fixed_action_policy(spaces, 2), DomainError);
}

TEST_CASE("alternating tuple") {
  const QueueSpaces spaces(QueueConfig::defaults(2));
  const PolicyTuple tuple = alternating_tuple(spaces, 5);
  CHECK(tuple.size() == 5);
  for (std::size_t i = 0; i < 5; ++i)
    CHECK(tuple[i].at(0)(spaces.full_access_index(), static_cast<Eigen::Index>(i % 2)) == 1.0);
  const StationaryPolicy avg = average_policy(alternating_tuple(spaces, 4));
  CHECK(avg.at(3)(spaces.full_access_index(), 0) == 0.5);
  CHECK_THROWS_AS(alternating_tuple(spaces, 0), DomainError);
}
