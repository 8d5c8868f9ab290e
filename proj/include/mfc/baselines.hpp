#pragma once

#include "mfc/model.hpp"
#include "mfc/queue_env.hpp"

namespace mfc::queue {

/// Join-Shortest-Queue as an upper-level policy: uniform over the accessible
/// queues with the smallest filling.
StationaryPolicy jsq_policy(const QueueSpaces& spaces);

/// Uniform over accessible queues, independent of the fillings.
StationaryPolicy uniform_policy(const QueueSpaces& spaces);

/// Same action everywhere (inaccessible choices are resampled by routing).
StationaryPolicy fixed_action_policy(const QueueSpaces& spaces, int action);

/// N members, member i always choosing queue (i mod M).
PolicyTuple alternating_tuple(const QueueSpaces& spaces, std::int64_t num_agents);

}  // namespace mfc::queue
