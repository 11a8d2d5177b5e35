#pragma once

#include <cstddef>
#include <functional>

namespace compare_kit {

// Worker count: COMPARE_KIT_THREADS when set to a positive integer,
// otherwise the hardware concurrency.
int worker_count();

// Runs body(i) for i in [0, n) across worker_count() threads. The first
// exception thrown by any body is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace compare_kit
