#pragma once

#include <cstddef>
#include <functional>

namespace rdslin {

/// Worker count: hardware concurrency capped by RDSLIN_THREADS when set.
[[nodiscard]] int worker_count();

/// Runs body(i) for i in [0, n). Each index is visited exactly once, so
/// results written to slot i are independent of scheduling. The first
/// exception thrown by any worker is rethrown on the caller.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace rdslin
