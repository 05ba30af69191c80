#pragma once

#include <cstddef>
#include <functional>

namespace mfplan {

// Process-wide worker count used by data-parallel loops (default 1).
void set_thread_count(int n);
int thread_count();

// Runs body(i) for i in [0, n). Iterations are split into contiguous blocks,
// one per worker; the body must not depend on execution order.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace mfplan
