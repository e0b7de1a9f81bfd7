#ifndef HDIVRED_PARALLEL_HPP
#define HDIVRED_PARALLEL_HPP

#include <cstdint>
#include <functional>

namespace hdivred {

/// Thread count from HDIVRED_NUM_THREADS; default 1.
int thread_count();

/// Runs fn(i) for i in [0, n). Element-local work only; callers must keep
/// any cross-element accumulation in a fixed serial order so results do not
/// depend on the thread count.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& fn);

}  // namespace hdivred

#endif
