#include "libra/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <thread>
#include <vector>

namespace libra {

namespace {

int g_threads = 0;

int resolve_default() {
    if (const char* env = std::getenv("LIBRA_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

}  // namespace

void set_thread_count(int n) { g_threads = n > 0 ? n : 0; }

int thread_count() { return g_threads > 0 ? g_threads : resolve_default(); }

void parallel_for(std::int64_t begin, std::int64_t end,
                  const std::function<void(std::int64_t, std::int64_t)>& fn) {
    const std::int64_t total = end - begin;
    if (total <= 0) return;

    const int workers = thread_count();
    // Threading only pays off for reasonably sized ranges.
    if (workers <= 1 || total < 4) {
        fn(begin, end);
        return;
    }

    const int n = static_cast<int>(std::min<std::int64_t>(workers, total));
    const std::int64_t chunk = (total + n - 1) / n;

    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n) - 1);
    std::exception_ptr first_error;
    std::atomic_flag error_set = ATOMIC_FLAG_INIT;

    auto run = [&](std::int64_t lo, std::int64_t hi) {
        try {
            fn(lo, hi);
        } catch (...) {
            if (!error_set.test_and_set()) first_error = std::current_exception();
        }
    };

    for (int i = 1; i < n; ++i) {
        const std::int64_t lo = begin + i * chunk;
        const std::int64_t hi = std::min(end, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back(run, lo, hi);
    }
    run(begin, std::min(end, begin + chunk));
    for (auto& t : pool) t.join();

    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace libra
