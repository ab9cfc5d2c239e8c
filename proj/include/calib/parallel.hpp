#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace calib {

namespace detail {
inline unsigned& thread_cap_storage() {
    static unsigned cap = [] {
        unsigned hw = std::max(1u, std::thread::hardware_concurrency());
        if (const char* env = std::getenv("CALIB_THREADS")) {
            long v = std::strtol(env, nullptr, 10);
            if (v >= 1) return static_cast<unsigned>(std::min<long>(v, 256));
        }
        return hw;
    }();
    return cap;
}
inline bool& in_parallel_region() {
    thread_local bool flag = false;
    return flag;
}
}  // namespace detail

/// Upper bound on worker threads (CALIB_THREADS env var, else hardware).
inline unsigned max_threads() { return detail::thread_cap_storage(); }
inline void set_max_threads(unsigned n) { detail::thread_cap_storage() = std::max(1u, n); }

/// Runs fn(i) for i in [0, n). Tasks must be independent; any determinism
/// must come from per-index state (seeds derived from i). Nested calls run
/// sequentially. Exceptions are captured and the first one rethrown.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    const unsigned workers =
        detail::in_parallel_region() ? 1u
                                     : std::min<std::size_t>(max_threads(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::exception_ptr first_error;
    std::mutex error_mutex;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            detail::in_parallel_region() = true;
            try {
                for (std::size_t i = w; i < n; i += workers) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace calib
