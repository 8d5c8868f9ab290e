#include "mfc/policy_io.hpp"

#include <json.hpp>

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mfc {

using Json = nlohmann::ordered_json;

namespace {

constexpr const char* kPolicyFormat = "mfc-stationary-policy";
constexpr int kPolicyVersion = 1;

}  // namespace

std::string format_double(double value) {
  char buffer[64];
  const auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  if (ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
  return std::string(buffer, end);
}

std::string policy_to_json(const StationaryPolicy& policy, const queue::QueueSpaces& spaces) {
  if (policy.num_env_states() != spaces.num_env_states())
    throw DomainError("policy_to_json: policy does not cover the queue spaces");
  Json doc;
  doc["format"] = kPolicyFormat;
  doc["version"] = kPolicyVersion;
  doc["num_queues"] = spaces.num_queues();
  std::vector<int> capacity;
  const auto top = spaces.env_state(spaces.num_env_states() - 1);
  capacity.assign(top.begin(), top.end());
  doc["capacity"] = capacity;
  Json body = Json::object();
  for (Eigen::Index s = 0; s < spaces.num_env_states(); ++s) {
    const auto& rule = policy.at(s);
    Json rows = Json::object();
    for (Eigen::Index x = 0; x < spaces.num_agent_states(); ++x) {
      Json probs = Json::array();
      for (Eigen::Index u = 0; u < rule.num_actions(); ++u) probs.push_back(rule(x, u));
      rows[queue::format_index_list(spaces.agent_state(x))] = std::move(probs);
    }
    body[queue::format_index_list(spaces.env_state(s))] = std::move(rows);
  }
  doc["policy"] = std::move(body);
  return doc.dump(1) + "\n";
}

queue::QueueConfig policy_layout_from_json(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::exception& e) {
    throw DomainError(std::string("policy document: ") + e.what());
  }
  if (!doc.is_object() || doc.value("format", "") != kPolicyFormat)
    throw DomainError("policy document: missing or unknown format tag");
  if (doc.value("version", 0) != kPolicyVersion)
    throw DomainError("policy document: unsupported version");
  queue::QueueConfig layout = queue::QueueConfig::defaults(doc.at("num_queues").get<int>());
  layout.capacity = doc.at("capacity").get<std::vector<int>>();
  return layout;
}

StationaryPolicy policy_from_json(const std::string& text, const queue::QueueSpaces& spaces) {
  const queue::QueueConfig layout = policy_layout_from_json(text);
  const Json doc = Json::parse(text);
  if (layout.num_queues != spaces.num_queues() ||
      queue::QueueSpaces(layout).num_env_states() != spaces.num_env_states())
    throw DomainError("policy document: queue layout differs from the configured one");

  const Json& body = doc.at("policy");
  if (!body.is_object() || static_cast<Eigen::Index>(body.size()) != spaces.num_env_states())
    throw DomainError("policy document: expected one entry per env state");
  std::vector<DecisionRule> rules(static_cast<std::size_t>(spaces.num_env_states()));
  std::vector<bool> seen(rules.size(), false);
  for (const auto& [env_key, rows] : body.items()) {
    const Eigen::Index s = spaces.env_state_index(queue::parse_index_list(env_key));
    if (seen[static_cast<std::size_t>(s)])
      throw DomainError("policy document: duplicate env state " + env_key);
    seen[static_cast<std::size_t>(s)] = true;
    if (!rows.is_object() || static_cast<Eigen::Index>(rows.size()) != spaces.num_agent_states())
      throw DomainError("policy document: env state " + env_key + " lacks agent states");
    Eigen::MatrixXd table = Eigen::MatrixXd::Constant(spaces.num_agent_states(),
                                                      spaces.num_queues(), -1.0);
    for (const auto& [agent_key, probs] : rows.items()) {
      const Eigen::Index x = spaces.agent_state_index(queue::parse_index_list(agent_key));
      const auto values = probs.get<std::vector<double>>();
      if (static_cast<int>(values.size()) != spaces.num_queues())
        throw DomainError("policy document: wrong action count at " + env_key + "/" + agent_key);
      for (std::size_t u = 0; u < values.size(); ++u)
        table(x, static_cast<Eigen::Index>(u)) = values[u];
    }
    rules[static_cast<std::size_t>(s)] = DecisionRule(std::move(table));
  }
  return StationaryPolicy(std::move(rules));
}

void save_policy(const std::filesystem::path& path, const StationaryPolicy& policy,
                 const queue::QueueSpaces& spaces) {
  write_text_file(path, policy_to_json(policy, spaces));
}

StationaryPolicy load_policy(const std::filesystem::path& path, const queue::QueueSpaces& spaces) {
  return policy_from_json(read_text_file(path), spaces);
}

void write_q_csv(std::ostream& out, const QTable& q, const queue::QueueSpaces& spaces) {
  out << "env_state,grid_index,q_value\n";
  for (Eigen::Index s = 0; s < q.values.rows(); ++s) {
    const std::string env = "\"" + queue::format_index_list(spaces.env_state(s)) + "\"";
    for (Eigen::Index g = 0; g < q.values.cols(); ++g)
      out << env << ',' << g << ',' << format_double(q.values(s, g)) << '\n';
  }
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

}  // namespace mfc
