#pragma once

#include <atomic>
#include <thread>
#include <vector>

namespace efn {

// Deterministic parallel map: fn(i) must write only to slot i of its output.
template <typename Fn>
void parallel_for(size_t n, Fn&& fn) {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    const size_t n_threads = std::min<size_t>(hw, n);
    if (n_threads <= 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<size_t> next{0};
    std::vector<std::thread> threads;
    threads.reserve(n_threads);
    for (size_t t = 0; t < n_threads; ++t) {
        threads.emplace_back([&]() {
            for (;;) {
                const size_t i = next.fetch_add(1);
                if (i >= n) return;
                fn(i);
            }
        });
    }
    for (auto& th : threads) th.join();
}

}  // namespace efn
