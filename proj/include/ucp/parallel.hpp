#pragma once

// Static-partition parallel loop. Work items write to disjoint slots and any
// reduction is done afterwards in index order, so results never depend on the
// worker count.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ucp {

namespace detail {
inline std::atomic<int>& worker_count_ref()
{
    static std::atomic<int> count{1};
    return count;
}
} // namespace detail

inline void set_worker_count(int k) { detail::worker_count_ref() = std::max(1, k); }
inline int worker_count() { return detail::worker_count_ref(); }

/// Calls fn(i) for i in [0, n). The first exception thrown by any worker is
/// rethrown on the calling thread (lowest index wins, for determinism).
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn)
{
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(worker_count()), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i)
            fn(i);
        return;
    }

    std::mutex mutex;
    std::exception_ptr first_error;
    std::size_t first_index = n;

    auto run_block = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mutex);
                if (i < first_index) {
                    first_index = i;
                    first_error = std::current_exception();
                }
                return;
            }
        }
    };

    std::vector<std::thread> threads;
    threads.reserve(workers - 1);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 1; w < workers; ++w) {
        const std::size_t begin = std::min(n, w * chunk);
        const std::size_t end = std::min(n, begin + chunk);
        threads.emplace_back(run_block, begin, end);
    }
    run_block(0, std::min(n, chunk));
    for (auto& t : threads)
        t.join();
    if (first_error)
        std::rethrow_exception(first_error);
}

} // namespace ucp
