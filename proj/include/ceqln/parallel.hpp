#pragma once

#include <cstddef>
#include <functional>

namespace ceqln {

// Worker count: CEQLN_THREADS if set to a positive integer, else the hardware
// concurrency, never more than `tasks`.
std::size_t worker_count(std::size_t tasks);

// Runs body(i) for i in [0, count). Each index runs exactly once; callers write
// results into per-index slots so reductions stay in index order. The first
// exception by index is rethrown after all workers finish.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace ceqln
