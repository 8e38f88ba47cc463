#pragma once

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "emgram/types.hpp"

namespace emgram {

/// Run fn(i) for i in [0, count) on up to `threads` workers. Tasks must write
/// to disjoint slots; the caller performs any reduction afterwards in a fixed
/// order, which keeps results byte-identical for any worker count.
template <typename Fn>
void parallel_for(Index count, int threads, Fn&& fn) {
    if (threads <= 1 || count <= 1) {
        for (Index i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<Index> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&]() {
        for (;;) {
            const Index i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    const int nworkers = static_cast<int>(std::min<Index>(threads, count));
    std::vector<std::thread> pool;
    pool.reserve(nworkers);
    for (int w = 0; w < nworkers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace emgram
