#pragma once

#include <cstddef>
#include <functional>

namespace actsub {

// Worker count: ACTSUB_THREADS if set to a positive integer, otherwise the
// hardware concurrency (at least 1).
std::size_t worker_count();

// Runs body(i) for i in [0, count). Iterations are split into contiguous
// chunks, one per worker; body must only write state owned by index i, so
// results never depend on the thread count. The first exception thrown by
// any chunk is rethrown on the calling thread.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace actsub
