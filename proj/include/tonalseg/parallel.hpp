#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace tonalseg {

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. Results must be
/// written to per-index slots by the caller; the returned vector holds the
/// exception (if any) raised for each index.
template <typename Fn>
std::vector<std::exception_ptr> parallel_for(std::size_t n, unsigned jobs, Fn&& fn) {
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };

    const std::size_t threads = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(n, 1));
    if (threads == 1) {
        worker();
        return errors;
    }
    {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    return errors;
}

/// Rethrows the first recorded exception, if any.
inline void rethrow_first(const std::vector<std::exception_ptr>& errors) {
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace tonalseg
