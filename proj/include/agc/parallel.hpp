#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace agc {

// Runs fn(begin, end) over [0, n) split across up to `threads` workers.
// Chunks are disjoint, so writers to disjoint slots need no locking.
inline void parallel_for(size_t n, unsigned threads,
                         const std::function<void(size_t, size_t)>& fn) {
    if (n == 0) return;
    unsigned t = std::max(1u, threads);
    t = unsigned(std::min<size_t>(t, n));
    if (t == 1) {
        fn(0, n);
        return;
    }
    size_t chunk = (n + t - 1) / t;
    std::vector<std::thread> workers;
    workers.reserve(t - 1);
    for (unsigned i = 1; i < t; ++i) {
        size_t b = i * chunk;
        size_t e = std::min(n, b + chunk);
        if (b >= e) break;
        workers.emplace_back([&fn, b, e] { fn(b, e); });
    }
    fn(0, std::min(n, chunk));
    for (auto& w : workers) w.join();
}

}  // namespace agc
