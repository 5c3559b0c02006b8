#pragma once

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace labelsmith {

/// Worker cap for per-image loops: hardware concurrency, bounded by the
/// LABELSMITH_THREADS environment variable when set.
inline unsigned max_threads() {
    unsigned n = std::thread::hardware_concurrency();
    if (n == 0) n = 1;
    if (const char* env = std::getenv("LABELSMITH_THREADS")) {
        const long cap = std::strtol(env, nullptr, 10);
        if (cap >= 1 && static_cast<unsigned>(cap) < n) n = static_cast<unsigned>(cap);
    }
    return n;
}

/// Run fn(0..n-1) across threads. Callers write results into per-index
/// slots, so output stays deterministic regardless of scheduling.
template <typename F>
void parallel_for(std::size_t n, F&& fn) {
    const std::size_t workers = std::min<std::size_t>(max_threads(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    }
    for (std::thread& worker : pool) worker.join();
}

}  // namespace labelsmith
