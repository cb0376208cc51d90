#ifndef PILOTWAVE_PARALLEL_HPP
#define PILOTWAVE_PARALLEL_HPP

#include <cstdint>
#include <thread>
#include <vector>

namespace pilotwave {

/// Runs fn(i) for i in [0, n) on `threads` workers (0 = hardware count).
/// Each index is processed exactly once; fn must write only to its own slot,
/// which makes the result independent of the schedule.
template <class Fn>
void parallel_for_index(std::int64_t n, int threads, Fn&& fn) {
    if (n <= 0) return;
    unsigned hw = std::thread::hardware_concurrency();
    std::int64_t nw = threads > 0 ? threads : (hw > 0 ? static_cast<int>(hw) : 1);
    if (nw > n) nw = n;
    if (nw <= 1) {
        for (std::int64_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(nw));
    for (std::int64_t w = 0; w < nw; ++w) {
        pool.emplace_back([w, n, nw, &fn] {
            for (std::int64_t i = w; i < n; i += nw) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

} // namespace pilotwave

#endif
