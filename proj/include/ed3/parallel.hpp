#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ed3 {

/// Runs fn(i) for i in [0, n) on up to `workers` threads. Work items are claimed from a shared
/// counter, so callers must write results into per-index slots. If any call throws, the
/// exception from the lowest failing index is rethrown after all threads join.
template <typename Fn>
void parallel_for(std::size_t n, unsigned workers, Fn &&fn) {
    workers = std::max(1u, workers);
    if (workers == 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr error;
    std::size_t error_index = n;
    {
        std::vector<std::jthread> threads;
        const auto count = static_cast<unsigned>(std::min<std::size_t>(workers, n));
        threads.reserve(count);
        for (unsigned t = 0; t < count; ++t) {
            threads.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        std::lock_guard lock(error_mutex);
                        if (i < error_index) {
                            error_index = i;
                            error = std::current_exception();
                        }
                    }
                }
            });
        }
    }
    if (error) std::rethrow_exception(error);
}

}  // namespace ed3
