#pragma once

#include <atomic>
#include <functional>
#include <thread>
#include <vector>

namespace advqa {

// Runs fn(0..n_tasks-1) on up to n_workers threads. fn must handle its own
// exceptions; an escaped one terminates, as with any detached worker logic.
inline void parallel_for(int n_tasks, int n_workers,
                         const std::function<void(int)>& fn) {
    if (n_tasks <= 0) return;
    const int workers = std::max(1, std::min(n_workers, n_tasks));
    if (workers == 1) {
        for (int i = 0; i < n_tasks; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n_tasks; i = next.fetch_add(1)) {
                fn(i);
            }
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace advqa
