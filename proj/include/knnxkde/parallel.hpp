#pragma once

#include <cstddef>
#include <functional>

namespace knnxkde {

/// Worker count from IMPUTE_THREADS if set and positive, else the hardware
/// concurrency (at least 1).
std::size_t default_thread_count();

/// Run fn(i) for i in [0, n) on up to `threads` workers. Work items are
/// claimed dynamically. The first exception thrown by any item is rethrown
/// on the calling thread after all workers join.
void parallel_for(std::size_t n, std::size_t threads,
                  const std::function<void(std::size_t)>& fn);

} // namespace knnxkde
