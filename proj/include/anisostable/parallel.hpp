#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace anisostable {

// Worker count for parallel maps; 0 means hardware concurrency.
void set_threads(unsigned n);
unsigned threads();

// Calls fn(i) for i in [0, n) on up to threads() workers. Work is handed out in
// index order but fn must not depend on which worker runs it; results written
// to per-index slots are therefore identical for any thread count.
template <class F>
void parallel_for(std::size_t n, F&& fn) {
    unsigned t = std::min<std::size_t>(threads(), n);
    if (t <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    auto work = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mu);
                if (!err) err = std::current_exception();
                next = n;
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned k = 0; k < t; ++k) pool.emplace_back(work);
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace anisostable
