#pragma once

#include <cstddef>
#include <functional>

namespace atekit {

/// Worker cap from ATE_TOOLKIT_THREADS (0 or unset = hardware concurrency).
std::size_t worker_count();

/// Runs fn(0..n-1) on up to worker_count() threads. Callers write results into
/// pre-sized slots indexed by task, so output never depends on scheduling.
/// Nested calls run serially on the calling worker. If any task throws, the
/// exception from the lowest task index is rethrown after all tasks finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace atekit
