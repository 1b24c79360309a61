#pragma once

#include <cstdint>
#include <functional>

namespace libra {

// Worker count used by parallel_for. 0 = pick from LIBRA_THREADS env var,
// falling back to hardware_concurrency.
void set_thread_count(int n);
int thread_count();

// Splits [begin, end) into contiguous chunks, one per worker. Exceptions
// thrown by `fn` are captured and rethrown on the calling thread. Small
// ranges run inline.
void parallel_for(std::int64_t begin, std::int64_t end,
                  const std::function<void(std::int64_t, std::int64_t)>& fn);

}  // namespace libra
