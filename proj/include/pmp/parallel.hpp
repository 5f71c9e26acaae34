#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace pmp {

/// Worker count for internal parallel loops. PMP_NUM_THREADS overrides the
/// default of 1; "0" selects std::thread::hardware_concurrency().
inline std::size_t thread_count() {
    const char* env = std::getenv("PMP_NUM_THREADS");
    if (!env || !*env) return 1;
    try {
        const long v = std::stol(env);
        if (v == 0) return std::max(1U, std::thread::hardware_concurrency());
        if (v > 0) return static_cast<std::size_t>(v);
    } catch (...) {
    }
    return 1;
}

/// Runs body(begin, end) over contiguous chunks of [0, n). Each index is
/// handled by exactly one chunk, so results do not depend on the thread count
/// as long as body writes only to its own indices.
template <typename Body>
void parallel_for(std::size_t n, Body&& body) {
    const std::size_t workers = std::min(thread_count(), std::max<std::size_t>(n, 1));
    if (workers <= 1) {
        body(std::size_t{0}, n);
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 1; w < workers; ++w) {
        const std::size_t b = std::min(n, w * chunk);
        const std::size_t e = std::min(n, b + chunk);
        pool.emplace_back([&body, b, e] { body(b, e); });
    }
    body(std::size_t{0}, std::min(n, chunk));
}

}  // namespace pmp
