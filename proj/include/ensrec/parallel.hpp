#pragma once

#include <cstddef>
#include <functional>

namespace ensrec {

// Worker count for `requested`; 0 or less means all hardware threads.
int resolve_threads(int requested);

// Runs body(i) for i in [0, count) on up to `threads` workers. The first
// exception thrown by any body is rethrown after all workers stop. Results
// must be written to per-index slots to stay independent of scheduling.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body);

}  // namespace ensrec
