#pragma once

#include <atomic>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace edgegap {

namespace detail {
inline std::atomic<int> g_threads{0};
}

// Process-wide worker count, settable from the CLI (--threads).
inline int default_threads() {
    const int n = detail::g_threads.load();
    if (n > 0) return n;
    return std::max(1u, std::thread::hardware_concurrency());
}
inline void set_default_threads(int n) { detail::g_threads.store(n); }

// Order-independent parallel map over [0, n): each index is processed exactly
// once; results must be written to per-index slots so the outcome is
// deterministic regardless of scheduling.
template <typename Fn>
void parallel_for(int n, Fn&& fn, int threads = 0) {
    if (threads <= 0) threads = default_threads();
    threads = std::min(threads, n);
    if (threads <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr first_error = nullptr;
    std::mutex err_mutex;
    pool.reserve(threads);
    for (int w = 0; w < threads; ++w)
        pool.emplace_back([&] {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        });
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace edgegap
