#pragma once

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace nesp {

// Thread budget: hardware concurrency capped by the NE_THREADS env variable.
inline int max_threads() {
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw <= 0) hw = 1;
    if (const char* env = std::getenv("NE_THREADS")) {
        const int cap = std::atoi(env);
        if (cap > 0) hw = std::min(hw, cap);
    }
    return hw;
}

inline int resolve_threads(int requested) {
    if (requested == 1) return 1;
    const int cap = max_threads();
    if (requested <= 0) return cap;
    return std::min(requested, cap);
}

// Splits [begin, end) into contiguous chunks, one per worker. Each chunk is
// processed left to right, so per-index results do not depend on the thread
// count; only work whose output is written per index should go through here.
template <typename Fn>
void parallel_for(std::size_t begin, std::size_t end, int threads, Fn&& fn) {
    const std::size_t total = end > begin ? end - begin : 0;
    const int t = std::min<std::size_t>(resolve_threads(threads), std::max<std::size_t>(total, 1));
    if (t <= 1 || total < 2) {
        for (std::size_t i = begin; i < end; ++i) fn(i);
        return;
    }
    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(t));
    const std::size_t chunk = (total + t - 1) / t;
    for (int w = 0; w < t; ++w) {
        const std::size_t lo = begin + chunk * static_cast<std::size_t>(w);
        const std::size_t hi = std::min(end, lo + chunk);
        if (lo >= hi) break;
        workers.emplace_back([lo, hi, &fn]() {
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& w : workers) w.join();
}

} // namespace nesp
