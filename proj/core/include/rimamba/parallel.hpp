#pragma once

#include <cstddef>
#include <functional>

namespace rimamba {

/// Worker count from RIMAMBA_THREADS, else the hardware concurrency (>= 1).
std::size_t default_threads();

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Each index runs
/// exactly once; callers write results by index so output order never
/// depends on scheduling. The exception from the lowest failing index is
/// rethrown after all workers finish.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

}  // namespace rimamba
