#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace bellman_sharp {

/// --threads flag, BELLMAN_SHARP_THREADS env var, hardware concurrency,
/// in that order.
inline int resolve_threads(int requested = 0) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("BELLMAN_SHARP_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

/// Static-partition parallel for, fn(index, worker).  Index i is processed by
/// exactly one worker and results must be written to per-index slots, so the
/// outcome does not depend on the thread count.  `worker` is in [0, threads)
/// and identifies the scratch slot the callee may use.
template <class Fn>
void parallel_for(long n, Fn fn, int threads = 0) {
    const int t = static_cast<int>(std::min<long>(resolve_threads(threads), std::max(1L, n)));
    if (t <= 1 || n <= 1) {
        for (long i = 0; i < n; ++i) fn(i, 0);
        return;
    }
    std::vector<std::thread> pool;
    std::exception_ptr first_error;
    std::mutex err_mutex;
    pool.reserve(t);
    for (int w = 0; w < t; ++w) {
        const long lo = n * w / t;
        const long hi = n * (w + 1) / t;
        pool.emplace_back([&, lo, hi, w] {
            try {
                for (long i = lo; i < hi; ++i) fn(i, w);
            } catch (...) {
                std::lock_guard<std::mutex> g(err_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace bellman_sharp
