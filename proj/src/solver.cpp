#include "mfc/solver.hpp"

#include "mfc/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace mfc {

namespace {

void append_compositions(int remaining, std::size_t parts, std::vector<int>& prefix,
                         std::vector<std::vector<int>>& out) {
  if (prefix.size() + 1 == parts) {
    prefix.push_back(remaining);
    out.push_back(prefix);
    prefix.pop_back();
    return;
  }
  for (int c = 0; c <= remaining; ++c) {
    prefix.push_back(c);
    append_compositions(remaining - c, parts, prefix, out);
    prefix.pop_back();
  }
}

std::vector<std::vector<int>> compositions(int total, std::size_t parts) {
  std::vector<std::vector<int>> out;
  std::vector<int> prefix;
  append_compositions(total, parts, prefix, out);
  return out;
}

// C(K + s - 1, s - 1), saturating at the cap + 1
std::size_t composition_count(int k, std::size_t parts, std::size_t cap) {
  long double count = 1.0L;
  for (std::size_t i = 1; i < parts; ++i) {
    count = count * static_cast<long double>(k + static_cast<int>(i)) / static_cast<long double>(i);
    if (count > static_cast<long double>(cap)) return cap + 1;
  }
  return static_cast<std::size_t>(std::llround(count));
}

Eigen::VectorXd row_max(const QTable& q) { return q.values.rowwise().maxCoeff(); }

double sup_norm_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace

DecisionGrid::DecisionGrid(const MfcModel& model, int resolution, std::size_t cap)
    : resolution_(resolution) {
  if (resolution < 1) throw DomainError("DecisionGrid: resolution must be >= 1");
  const auto& space = model.space();

  std::size_t total = 1;
  std::vector<std::vector<Eigen::Index>> supports;
  for (Eigen::Index x = 0; x < space.num_agent_states; ++x) {
    supports.push_back(model.decision_support(x));
    const auto& support = supports.back();
    if (support.empty()) throw DomainError("DecisionGrid: empty decision support");
    if (support.size() < 2) continue;
    free_states_.push_back(x);
    free_supports_.push_back(support);
    const std::size_t count = composition_count(resolution, support.size(), cap);
    if (count > cap || total > cap / count)
      throw GridCapExceeded("decision grid exceeds the cap of " + std::to_string(cap) +
                            " rules; lower the resolution or raise the cap");
    total *= count;
  }

  for (const auto& support : free_supports_)
    compositions_.push_back(compositions(resolution, support.size()));

  Eigen::MatrixXd base = Eigen::MatrixXd::Zero(space.num_agent_states, space.num_actions);
  for (Eigen::Index x = 0; x < space.num_agent_states; ++x) {
    const auto& support = supports[static_cast<std::size_t>(x)];
    if (support.size() == 1) base(x, support.front()) = 1.0;
  }

  rules_.reserve(total);
  coordinates_.reserve(total);
  std::vector<std::size_t> coordinate(free_states_.size(), 0);
  const double scale = 1.0 / static_cast<double>(resolution);
  for (std::size_t r = 0; r < total; ++r) {
    Eigen::MatrixXd table = base;
    for (std::size_t d = 0; d < free_states_.size(); ++d) {
      const auto& counts = compositions_[d][coordinate[d]];
      for (std::size_t a = 0; a < counts.size(); ++a)
        table(free_states_[d], free_supports_[d][a]) = counts[a] * scale;
    }
    rules_.emplace_back(std::move(table));
    coordinates_.push_back(coordinate);
    for (std::size_t d = free_states_.size(); d-- > 0;) {
      if (++coordinate[d] < compositions_[d].size()) break;
      coordinate[d] = 0;
    }
  }
}

std::optional<std::size_t> DecisionGrid::locate(const DecisionRule& rule,
                                                const MfcModel& model) const {
  const DecisionRule canonical = model.canonicalize(rule);
  const auto& table = canonical.table();
  if (!rules_.empty() && (table.rows() != rules_.front().num_agent_states() ||
                          table.cols() != rules_.front().num_actions()))
    return std::nullopt;

  // pinned agent states must match the base rule
  std::vector<bool> is_free(static_cast<std::size_t>(table.rows()), false);
  for (auto x : free_states_) is_free[static_cast<std::size_t>(x)] = true;
  for (Eigen::Index x = 0; x < table.rows(); ++x) {
    if (is_free[static_cast<std::size_t>(x)]) continue;
    if ((table.row(x) - rules_.front().table().row(x)).cwiseAbs().maxCoeff() > 1e-12)
      return std::nullopt;
  }

  std::size_t index = 0;
  for (std::size_t d = 0; d < free_states_.size(); ++d) {
    std::vector<int> counts;
    double on_support = 0.0;
    for (auto u : free_supports_[d]) {
      const double scaled = table(free_states_[d], u) * resolution_;
      const double rounded = std::round(scaled);
      if (std::abs(scaled - rounded) > 1e-9) return std::nullopt;
      counts.push_back(static_cast<int>(rounded));
      on_support += table(free_states_[d], u);
    }
    if (std::abs(on_support - 1.0) > 1e-12) return std::nullopt;
    const auto& options = compositions_[d];
    const auto it = std::find(options.begin(), options.end(), counts);
    if (it == options.end()) return std::nullopt;
    index = index * options.size() + static_cast<std::size_t>(it - options.begin());
  }
  return index;
}

std::vector<std::pair<std::size_t, std::size_t>> DecisionGrid::adjacent_pairs() const {
  // per free state: composition pairs one unit move apart
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> moves(free_states_.size());
  std::vector<std::size_t> stride(free_states_.size(), 1);
  for (std::size_t d = free_states_.size(); d-- > 0;) {
    if (d + 1 < free_states_.size()) stride[d] = stride[d + 1] * compositions_[d + 1].size();
    const auto& options = compositions_[d];
    for (std::size_t a = 0; a < options.size(); ++a) {
      for (std::size_t b = a + 1; b < options.size(); ++b) {
        int distance = 0;
        for (std::size_t k = 0; k < options[a].size(); ++k)
          distance += std::abs(options[a][k] - options[b][k]);
        if (distance == 2) moves[d].emplace_back(a, b);
      }
    }
  }
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t r = 0; r < rules_.size(); ++r) {
    for (std::size_t d = 0; d < free_states_.size(); ++d) {
      for (const auto& [a, b] : moves[d]) {
        if (coordinates_[r][d] != a) continue;
        pairs.emplace_back(r, r + (b - a) * stride[d]);
      }
    }
  }
  return pairs;
}

GridMdp build_grid_mdp(const MfcModel& model, const DecisionGrid& grid, int workers) {
  const auto& space = model.space();
  const auto num_env = space.num_env_states;
  const auto num_rules = static_cast<Eigen::Index>(grid.size());
  const long double bytes = static_cast<long double>(num_env) * num_env * num_rules * sizeof(double);
  if (bytes > 4.0L * 1024 * 1024 * 1024)
    throw GridCapExceeded("grid MDP transition tables would need more than 4 GiB");

  std::vector<StateActionDist> joints;
  joints.reserve(grid.size());
  for (const auto& rule : grid.rules()) joints.push_back(mean_field_joint(space.mu0, rule));

  GridMdp mdp;
  mdp.gamma = space.gamma;
  mdp.reward_bound = model.reward_bound();
  mdp.rewards.resize(num_env, num_rules);
  mdp.kernels.assign(static_cast<std::size_t>(num_env), Eigen::MatrixXd());
  parallel_for(static_cast<std::size_t>(num_env), workers, [&](std::size_t s) {
    const auto env = static_cast<Eigen::Index>(s);
    Eigen::MatrixXd kernel(num_rules, num_env);
    for (Eigen::Index g = 0; g < num_rules; ++g) {
      const auto& joint = joints[static_cast<std::size_t>(g)];
      mdp.rewards(env, g) = model.reward(env, joint);
      kernel.row(g) = model.transition(env, joint).transpose();
    }
    mdp.kernels[s] = std::move(kernel);
  });
  return mdp;
}

double bellman_backup(const QTable& q, Eigen::Index env_state, const DecisionRule& rule,
                      const MfcModel& model) {
  const auto& space = model.space();
  if (q.values.rows() != space.num_env_states)
    throw DomainError("bellman_backup: Q table has the wrong number of env states");
  const StateActionDist joint = mean_field_joint(space.mu0, rule);
  const Eigen::VectorXd next = model.transition(env_state, joint);
  return model.reward(env_state, joint) + space.gamma * next.dot(row_max(q));
}

QTable apply_bellman(const GridMdp& mdp, const QTable& q, int workers) {
  if (q.values.rows() != mdp.num_env_states() || q.values.cols() != mdp.num_rules())
    throw DomainError("apply_bellman: Q table shape does not match the grid MDP");
  const Eigen::VectorXd continuation = row_max(q);
  QTable out{Eigen::MatrixXd(q.values.rows(), q.values.cols())};
  parallel_for(static_cast<std::size_t>(mdp.num_env_states()), workers, [&](std::size_t s) {
    const auto env = static_cast<Eigen::Index>(s);
    out.values.row(env) =
        mdp.rewards.row(env) + mdp.gamma * (mdp.kernels[s] * continuation).transpose();
  });
  return out;
}

std::vector<std::size_t> greedy_indices(const QTable& q) {
  std::vector<std::size_t> best(static_cast<std::size_t>(q.values.rows()), 0);
  for (Eigen::Index s = 0; s < q.values.rows(); ++s) {
    Eigen::Index arg = 0;
    for (Eigen::Index g = 1; g < q.values.cols(); ++g)
      if (q.values(s, g) > q.values(s, arg)) arg = g;
    best[static_cast<std::size_t>(s)] = static_cast<std::size_t>(arg);
  }
  return best;
}

StationaryPolicy policy_from_indices(const std::vector<std::size_t>& indices,
                                     const DecisionGrid& grid) {
  std::vector<DecisionRule> rules;
  rules.reserve(indices.size());
  for (auto g : indices) rules.push_back(grid.rule(g));
  return StationaryPolicy(std::move(rules));
}

StationaryPolicy greedy_policy(const QTable& q, const DecisionGrid& grid) {
  return policy_from_indices(greedy_indices(q), grid);
}

double residual_threshold(double tol, double gamma) {
  if (!(tol > 0.0)) throw DomainError("solver tolerance must be > 0");
  return tol * (1.0 - gamma) / (2.0 * gamma);
}

ValueIterationResult value_iteration(const GridMdp& mdp, const DecisionGrid& grid,
                                     const SolverOptions& options) {
  ValueIterationResult result;
  result.threshold = residual_threshold(options.tol, mdp.gamma);
  QTable q{Eigen::MatrixXd::Zero(mdp.num_env_states(), mdp.num_rules())};
  for (;;) {
    QTable next = apply_bellman(mdp, q, options.workers);
    result.residual = sup_norm_diff(next.values, q.values);
    result.residual_history.push_back(result.residual);
    q = std::move(next);
    ++result.iterations;
    if (result.residual <= result.threshold) break;
    if (result.iterations >= options.max_iterations)
      throw std::runtime_error("value_iteration: no convergence within the iteration limit");
  }
  result.policy_indices = greedy_indices(q);
  result.policy = policy_from_indices(result.policy_indices, grid);
  result.q = std::move(q);
  return result;
}

ValueIterationResult value_iteration(const MfcModel& model, const DecisionGrid& grid,
                                     const SolverOptions& options) {
  residual_threshold(options.tol, model.space().gamma);
  return value_iteration(build_grid_mdp(model, grid, options.workers), grid, options);
}

ValueIterationResult policy_iteration(const GridMdp& mdp, const DecisionGrid& grid,
                                      std::vector<std::size_t> start, int workers) {
  const auto num_env = mdp.num_env_states();
  if (static_cast<Eigen::Index>(start.size()) != num_env)
    throw DomainError("policy_iteration: start policy has the wrong number of env states");
  ValueIterationResult result;
  std::vector<std::size_t> current = std::move(start);
  constexpr std::size_t kMaxRounds = 1000;
  for (;;) {
    Eigen::MatrixXd transition(num_env, num_env);
    Eigen::VectorXd reward(num_env);
    for (Eigen::Index s = 0; s < num_env; ++s) {
      const auto g = static_cast<Eigen::Index>(current[static_cast<std::size_t>(s)]);
      transition.row(s) = mdp.kernels[static_cast<std::size_t>(s)].row(g);
      reward[s] = mdp.rewards(s, g);
    }
    const Eigen::MatrixXd system =
        Eigen::MatrixXd::Identity(num_env, num_env) - mdp.gamma * transition;
    const Eigen::VectorXd value = system.partialPivLu().solve(reward);

    QTable q{Eigen::MatrixXd(num_env, mdp.num_rules())};
    parallel_for(static_cast<std::size_t>(num_env), workers, [&](std::size_t s) {
      const auto env = static_cast<Eigen::Index>(s);
      q.values.row(env) = mdp.rewards.row(env) + mdp.gamma * (mdp.kernels[s] * value).transpose();
    });
    ++result.iterations;
    auto improved = greedy_indices(q);
    const bool stable = improved == current;
    result.q = std::move(q);
    if (stable || result.iterations >= kMaxRounds) {
      current = std::move(improved);
      break;
    }
    current = std::move(improved);
  }
  const QTable applied = apply_bellman(mdp, result.q, workers);
  result.residual = sup_norm_diff(applied.values, result.q.values);
  result.residual_history.push_back(result.residual);
  result.policy_indices = greedy_indices(result.q);
  result.policy = policy_from_indices(result.policy_indices, grid);
  return result;
}

namespace {

struct PolicyChain {
  Eigen::VectorXd reward;
  Eigen::MatrixXd transition;
};

PolicyChain policy_chain(const MfcModel& model, const StationaryPolicy& policy) {
  const auto& space = model.space();
  const auto num_env = space.num_env_states;
  if (policy.num_env_states() != num_env)
    throw DomainError("policy_evaluation: policy is not defined on every env state");
  PolicyChain chain{Eigen::VectorXd(num_env), Eigen::MatrixXd(num_env, num_env)};
  for (Eigen::Index s = 0; s < num_env; ++s) {
    const StateActionDist joint = mean_field_joint(space.mu0, policy.at(s));
    chain.reward[s] = model.reward(s, joint);
    chain.transition.row(s) = model.transition(s, joint).transpose();
  }
  return chain;
}

}  // namespace

Eigen::VectorXd policy_evaluation(const MfcModel& model, const StationaryPolicy& policy,
                                  double tol, EvaluationMethod method) {
  const double gamma = model.space().gamma;
  const double threshold = residual_threshold(tol, gamma);
  const PolicyChain chain = policy_chain(model, policy);
  const auto n = chain.reward.size();
  if (method == EvaluationMethod::kDirect) {
    const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n) - gamma * chain.transition;
    return system.partialPivLu().solve(chain.reward);
  }
  Eigen::VectorXd value = Eigen::VectorXd::Zero(n);
  for (;;) {
    Eigen::VectorXd next = chain.reward + gamma * chain.transition * value;
    const double residual = (next - value).cwiseAbs().maxCoeff();
    value = std::move(next);
    if (residual <= threshold) return value;
  }
}

double mf_objective(const MfcModel& model, const StationaryPolicy& policy, double tol) {
  return model.space().mu0_env.mass().dot(policy_evaluation(model, policy, tol));
}

double q_continuity_constant(const QTable& q, const DecisionGrid& grid) {
  double worst = 0.0;
  for (const auto& [a, b] : grid.adjacent_pairs()) {
    const auto ia = static_cast<Eigen::Index>(a);
    const auto ib = static_cast<Eigen::Index>(b);
    worst = std::max(worst, (q.values.col(ia) - q.values.col(ib)).cwiseAbs().maxCoeff());
  }
  return worst * grid.resolution();
}

}  // namespace mfc
