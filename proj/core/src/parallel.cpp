#include "cnm/parallel.hpp"

#include <atomic>
#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace cnm {

namespace {
std::atomic<int> g_max_threads{0};  // 0 = unset, use hardware

int hardware_threads() {
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}
}  // namespace

int max_threads() {
    const int v = g_max_threads.load(std::memory_order_relaxed);
    return v > 0 ? v : hardware_threads();
}

void set_max_threads(int n) {
    g_max_threads.store(n > 0 ? n : 0, std::memory_order_relaxed);
}

void parallel_for_chunks(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn) {
    if (n == 0) return;

    // Chunk layout depends only on n, never on the worker count.
    const std::size_t chunk = std::max<std::size_t>(1, n / 256);
    const std::size_t n_chunks = (n + chunk - 1) / chunk;

    const int workers = std::min<int>(max_threads(), static_cast<int>(n_chunks));
    if (workers <= 1) {
        fn(0, n);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto body = [&] {
        for (;;) {
            const std::size_t c = next.fetch_add(1, std::memory_order_relaxed);
            if (c >= n_chunks) break;
            const std::size_t begin = c * chunk;
            const std::size_t end = std::min(n, begin + chunk);
            try {
                fn(begin, end);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers) - 1);
    for (int t = 1; t < workers; ++t) pool.emplace_back(body);
    body();
    for (auto& th : pool) th.join();

    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace cnm
