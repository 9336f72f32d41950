#pragma once

#include <cstddef>
#include <functional>

namespace shapelab {

/// Process-wide worker count used by Monte Carlo loops (default 1).
/// Affects speed only: every loop writes into index-addressed slots.
void set_worker_count(int workers);
int worker_count();

/// Calls body(i) for i in [0, n) across worker_count() threads. The first
/// exception thrown by any body is rethrown on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace shapelab
