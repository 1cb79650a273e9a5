#pragma once

#include <cstddef>
#include <functional>

namespace tieinfer {

// Thread count from TIEINFER_THREADS, else hardware concurrency (at least 1).
int default_threads();

// Runs body(i) for i in [0, n) on up to `threads` workers, in contiguous
// chunks. body must only write to per-index state; callers reduce results in
// index order afterwards, so output never depends on scheduling.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body);

}  // namespace tieinfer
