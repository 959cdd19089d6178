#pragma once

#include <functional>

namespace rto {

/// Worker cap for parallel loops; 1 runs everything on the calling thread.
void set_thread_count(int threads);
int thread_count();

/// Runs body(i) for i in [0, n). Iterations must be independent; the first
/// exception thrown by any iteration is rethrown after all workers join.
void parallel_for(int n, const std::function<void(int)>& body);

}  // namespace rto
