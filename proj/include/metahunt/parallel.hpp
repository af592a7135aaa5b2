#pragma once

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <string>
#include <thread>
#include <vector>

namespace metahunt {

/// Worker cap: METAHUNT_THREADS when set (>=1), else hardware concurrency.
inline unsigned max_threads() {
    if (const char* env = std::getenv("METAHUNT_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return unsigned(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? hw : 1;
}

/// Runs fn(i) for i in [0, n). Tasks must be independent and write only to
/// their own slots; chunking is deterministic so results never depend on
/// scheduling. If tasks throw, the exception with the smallest index is
/// rethrown after all workers join.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    const unsigned threads = unsigned(std::min<std::size_t>(max_threads(), n));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::size_t> error_index(threads, n);
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&, t]() {
            for (std::size_t i = t; i < n; i += threads) {
                try {
                    fn(i);
                } catch (...) {
                    if (!errors[t]) {
                        errors[t] = std::current_exception();
                        error_index[t] = i;
                    }
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    std::size_t first = n;
    std::exception_ptr eptr;
    for (unsigned t = 0; t < threads; ++t)
        if (errors[t] && error_index[t] < first) {
            first = error_index[t];
            eptr = errors[t];
        }
    if (eptr) std::rethrow_exception(eptr);
}

} // namespace metahunt
