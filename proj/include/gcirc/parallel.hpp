#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace gcirc {

/// Worker count: $GCIRC_THREADS if set to a positive integer, otherwise the
/// hardware concurrency.
inline unsigned default_thread_count()
{
    if (const char* env = std::getenv("GCIRC_THREADS")) {
        try {
            const long n = std::stol(env);
            if (n > 0)
                return static_cast<unsigned>(n);
        } catch (...) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Calls fn(i) for i in [0, n).  `fn` must not throw and must only write to
/// its own slot; results are therefore independent of scheduling.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn, unsigned threads = default_thread_count())
{
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i)
            fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned w = 0; w < threads; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++)
                fn(i);
        });
    for (auto& t : pool)
        t.join();
}

} // namespace gcirc
