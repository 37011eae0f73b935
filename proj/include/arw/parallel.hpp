#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace arw {

// Runs body(trial) for trial = 0..n-1 across `width` threads. Each trial must
// be self-contained (own seed, own buffers indexed by trial), which makes the
// result independent of the scheduling, so any width produces identical
// output.
template <class Body>
void run_trials(int64_t n, int width, Body&& body) {
    if (width <= 1 || n <= 1) {
        for (int64_t t = 0; t < n; ++t) body(t);
        return;
    }
    std::atomic<int64_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const int64_t t = next.fetch_add(1, std::memory_order_relaxed);
            if (t >= n) return;
            try {
                body(t);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                next.store(n, std::memory_order_relaxed);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const int workers = static_cast<int>(std::min<int64_t>(width, n));
    pool.reserve(static_cast<size_t>(workers));
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace arw
