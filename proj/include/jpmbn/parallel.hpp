#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace jpmbn {

/// Number of worker threads to use when the caller passes 0.
inline std::size_t default_thread_count() {
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/// Runs body(chunk) for chunk in [0, n_chunks) on up to `threads` workers.
/// Chunks are claimed dynamically; callers write results into per-chunk slots
/// and merge them in chunk order, so output never depends on the thread count.
template <class Body>
void parallel_chunks(std::size_t n_chunks, std::size_t threads, Body&& body) {
    if (threads == 0) threads = default_thread_count();
    threads = std::min(threads, n_chunks);
    if (threads <= 1) {
        for (std::size_t c = 0; c < n_chunks; ++c) body(c);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t c; (c = next.fetch_add(1)) < n_chunks;) {
                try {
                    body(c);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                    next = n_chunks;
                }
            }
        });
    }
    pool.clear();
    if (error) std::rethrow_exception(error);
}

}  // namespace jpmbn
