// Minimal fork-join helper: run fn(i) for i in [0, n) on a fixed number of
// worker threads. Work items are claimed from an atomic counter, results are
// written by index by the callers themselves, and the first exception thrown
// by any worker is rethrown on the calling thread.
#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace lpspin {

template <class Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
    if (workers < 1) workers = 1;
    if (n == 0) return;
    if (workers == 1 || n == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error = nullptr;
    std::mutex error_mutex;
    auto worker = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::size_t nthreads = static_cast<std::size_t>(workers);
    if (nthreads > n) nthreads = n;
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace lpspin
