#pragma once

#include <cstddef>
#include <functional>

namespace umr {

/// Worker count from UMR_WORKERS, falling back to the hardware concurrency.
std::size_t default_workers();

/// Runs fn(task, worker) for task in [0, tasks) on up to `workers` threads.
/// Tasks are claimed dynamically; callers that need reproducible output must
/// write into per-task slots (or per-worker state merged under a total order).
void parallel_for(std::size_t tasks, std::size_t workers,
                  const std::function<void(std::size_t task, std::size_t worker)>& fn);

}  // namespace umr
