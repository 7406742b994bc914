#include "ratio/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <stdexcept>

namespace ratio {

namespace {
std::atomic<int> g_workers{1};
}

int worker_threads() { return g_workers.load(); }

void set_worker_threads(int count) {
    if (count < 1) throw std::invalid_argument("worker thread count must be positive");
    g_workers.store(count);
}

void parallel_for(long count, const std::function<void(long)>& fn) {
    int workers = std::min<long>(g_workers.load(), count);
    if (workers <= 1) {
        for (long i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    long chunk = (count + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        long begin = w * chunk;
        long end = std::min(count, begin + chunk);
        pool.emplace_back([&, begin, end] {
            try {
                for (long i = begin; i < end && !failed.load(); ++i) fn(i);
            } catch (...) {
                if (!failed.exchange(true)) error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

} // namespace ratio
