#pragma once

#include <cstddef>
#include <functional>

namespace detox {

int default_worker_count();

// Runs fn(i) for i in [0, n) on up to `workers` threads. Work items are
// independent; callers that need ordered output write into index i of a
// preallocated buffer, so results do not depend on scheduling. The first
// exception thrown by any worker is rethrown on the calling thread.
void parallel_for(std::size_t n, int workers,
                  const std::function<void(std::size_t)>& fn);

}  // namespace detox
