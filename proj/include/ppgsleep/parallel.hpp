#pragma once

#include <cstddef>
#include <functional>

namespace ppgsleep {

// Runs body(i) for i in [0, n) on up to `jobs` threads (0 = hardware
// concurrency). Each index runs exactly once; if any calls throw, the
// exception of the lowest index is rethrown after all workers finish.
void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& body);

}  // namespace ppgsleep
