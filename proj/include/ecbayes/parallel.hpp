#pragma once

#include <cstddef>
#include <functional>

namespace ecbayes {

/// Resolves a requested worker count; 0 means hardware concurrency.
unsigned resolve_workers(unsigned requested);

/// Runs body(task) for task in [0, tasks) on up to `workers` threads.
/// Tasks are claimed dynamically, so bodies must write only to
/// task-indexed outputs for results to be independent of scheduling.
void parallel_for(std::size_t tasks, unsigned workers,
                  const std::function<void(std::size_t)>& body);

/// Fixed block size used when partitioning draws into independent streams.
inline constexpr std::size_t kDrawBlock = 4096;

}  // namespace ecbayes
