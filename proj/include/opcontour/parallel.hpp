#pragma once

#include <cstddef>
#include <functional>

namespace opcontour {

/// Process-wide worker count for parallel loops. 1 = sequential.
void set_thread_count(int n);
int thread_count();

/// Runs fn(i) for i in [0, n). Iterations must be independent; callers that
/// accumulate do so into preallocated per-index slots and reduce in fixed
/// order afterwards, so results are identical for any thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace opcontour
