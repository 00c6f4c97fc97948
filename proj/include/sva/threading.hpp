#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace sva {

/// Resolve a worker-count request: 0 means "use what the hardware offers".
inline unsigned resolve_threads(unsigned requested) {
    if (requested != 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

/// Run fn(begin, end) over contiguous chunks of [first, last) on `threads`
/// workers. Chunking is static, so any output written to disjoint slots is
/// identical for every thread count. The first exception thrown by a worker
/// is rethrown on the calling thread.
template <typename Fn>
void parallel_chunks(std::size_t first, std::size_t last, unsigned threads, Fn&& fn) {
    const std::size_t total = last - first;
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(resolve_threads(threads), std::max<std::size_t>(total, 1)));
    if (workers <= 1 || total <= 1) {
        if (total > 0) fn(first, last);
        return;
    }
    const std::size_t chunk = (total + workers - 1) / workers;
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (unsigned w = 0; w < workers; ++w) {
        const std::size_t lo = first + w * chunk;
        const std::size_t hi = std::min(last, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&, w, lo, hi] {
            try {
                fn(lo, hi);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& err : errors) {
        if (err) std::rethrow_exception(err);
    }
}

}  // namespace sva
