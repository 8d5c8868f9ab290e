#pragma once

#include "mfc/model.hpp"
#include "mfc/queue_env.hpp"
#include "mfc/solver.hpp"

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace mfc {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

/// Policy document: JSON object keyed by env state "[b0,b1,...]", each value
/// an object keyed by agent state "[i,j,...]" holding the action probabilities.
std::string policy_to_json(const StationaryPolicy& policy, const queue::QueueSpaces& spaces);
StationaryPolicy policy_from_json(const std::string& text, const queue::QueueSpaces& spaces);

/// Queue layout recorded in a policy document (num_queues, capacity).
queue::QueueConfig policy_layout_from_json(const std::string& text);

void save_policy(const std::filesystem::path& path, const StationaryPolicy& policy,
                 const queue::QueueSpaces& spaces);
StationaryPolicy load_policy(const std::filesystem::path& path, const queue::QueueSpaces& spaces);

/// CSV rows "env_state,grid_index,q_value".
void write_q_csv(std::ostream& out, const QTable& q, const queue::QueueSpaces& spaces);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace mfc
