#ifndef RATIO_PARALLEL_HPP
#define RATIO_PARALLEL_HPP

#include <functional>
#include <thread>
#include <vector>

namespace ratio {

/// Global worker count for sample-level parallelism. Results are always
/// written to per-index slots and reduced in index order, so the thread
/// count never changes any output.
int worker_threads();
void set_worker_threads(int count);

/// Run fn(i) for i in [0, count) across the configured workers with static
/// chunking.
void parallel_for(long count, const std::function<void(long)>& fn);

} // namespace ratio

#endif
