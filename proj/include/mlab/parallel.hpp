#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace mlab {

inline std::size_t resolve_threads(std::size_t requested)
{
    if (requested == 0) {
        requested = std::max(1u, std::thread::hardware_concurrency());
    }
    return requested;
}

// Runs body(i) for i in [0, n) on a pool of workers pulling indices from an
// atomic counter. Callers write results into slot i, so the outcome does not
// depend on the schedule. The first exception thrown is rethrown.
template <class F>
void parallel_for(std::size_t n, std::size_t threads, F&& body)
{
    threads = std::min(resolve_threads(threads), std::max<std::size_t>(n, 1));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            body(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mu;
    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) {
                return;
            }
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mu);
                if (!error) {
                    error = std::current_exception();
                }
                next.store(n);
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back(worker);
    }
    for (auto& th : pool) {
        th.join();
    }
    if (error) {
        std::rethrow_exception(error);
    }
}

}  // namespace mlab
