#pragma once

#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace lczgrid {

// Worker count resolution: explicit value > LCZGRID_THREADS > hardware.
inline int resolve_workers(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("LCZGRID_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

// Runs fn(i) for i in [0, n) across `workers` threads. Each index is handled
// exactly once and results must be committed by index into preallocated
// storage, so the outcome is identical for any worker count. The first
// exception thrown by any worker is rethrown on the caller's thread.
template <class Fn>
void parallel_for_index(std::int64_t n, int workers, Fn&& fn) {
    workers = std::max(1, std::min<std::int64_t>(workers, n));
    if (workers == 1 || n <= 1) {
        for (std::int64_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (int t = 0; t < workers; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (std::int64_t i = t; i < n; i += workers) fn(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace lczgrid
