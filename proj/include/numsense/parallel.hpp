#pragma once

#include <cstddef>
#include <functional>

namespace numsense {

/// Worker count: NUMSENSE_WORKERS if set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
unsigned worker_count();

/// Calls body(i) for i in [0, count) across worker_count() threads. The first
/// exception thrown by any call is rethrown after all workers finish. Callers
/// must make body(i) independent of scheduling order.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace numsense
