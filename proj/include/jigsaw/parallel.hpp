#pragma once

#include <algorithm>
#include <functional>
#include <thread>
#include <vector>

namespace jigsaw {

/// Runs fn(begin, end) over contiguous chunks of [0, n). Results must be
/// written to disjoint, pre-sized storage; the chunking is deterministic, so
/// outputs do not depend on the thread count.
inline void parallel_for(int n, int threads, const std::function<void(int, int)>& fn) {
    threads = std::max(1, std::min(threads, n));
    if (threads == 1 || n <= 1) {
        fn(0, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    const int chunk = (n + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        const int begin = t * chunk;
        const int end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&fn, begin, end] { fn(begin, end); });
    }
    for (auto& th : pool) th.join();
}

}  // namespace jigsaw
