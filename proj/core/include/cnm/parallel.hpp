#pragma once

#include <cstddef>
#include <functional>

namespace cnm {

// Global worker cap. Defaults to the hardware concurrency; the CLI lowers it
// via --threads. Results never depend on the cap: work is chunked by index
// with boundaries derived from n alone, and workers only write disjoint slots.
int max_threads();
void set_max_threads(int n);

// Runs fn(begin, end) over a deterministic chunking of [0, n).
void parallel_for_chunks(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

// Element-wise convenience wrapper.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    parallel_for_chunks(n, [&fn](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) fn(i);
    });
}

}  // namespace cnm
