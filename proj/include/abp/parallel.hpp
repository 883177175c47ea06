#ifndef ABP_PARALLEL_HPP
#define ABP_PARALLEL_HPP

#include <atomic>
#include <functional>
#include <thread>
#include <vector>

namespace abp {

// Runs fn(i) for i in [0, n) on up to `threads` workers (<=1 means the
// calling thread). Tasks must be independent; each i is executed exactly
// once. Joins before returning.
inline void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
    if (n <= 0) return;
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads <= 1 || n == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    const int workers = std::min(threads, n);
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t) {
        pool.emplace_back([&]() {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= n) return;
                fn(i);
            }
        });
    }
    for (std::thread& th : pool) th.join();
}

}  // namespace abp

#endif
