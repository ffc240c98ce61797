#pragma once
#include <atomic>
#include <cstdint>
#include <thread>
#include <vector>

namespace qcd {

inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    const unsigned hc = std::thread::hardware_concurrency();
    return hc ? static_cast<int>(hc) : 1;
}

// Run fn(i) for i in [0, n). Each index must write only its own output slot;
// with that discipline results are independent of the thread count.
template <typename Fn>
void parallel_for(std::int64_t n, int threads, Fn&& fn) {
    if (n <= 0) return;
    const int t = std::min<std::int64_t>(resolve_threads(threads), n);
    if (t <= 1) {
        for (std::int64_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::int64_t> next{0};
    constexpr std::int64_t chunk = 16;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(t));
    for (int w = 0; w < t; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::int64_t lo = next.fetch_add(chunk);
                if (lo >= n) return;
                const std::int64_t hi = std::min(n, lo + chunk);
                for (std::int64_t i = lo; i < hi; ++i) fn(i);
            }
        });
    }
    for (auto& th : pool) th.join();
}

} // namespace qcd
