#pragma once

#include <cstdint>
#include <functional>

namespace bellman {

/// Thread count used when a config asks for 0 threads: the
/// BELLMAN_FD_THREADS environment variable if set, otherwise the
/// hardware concurrency (at least 1).
int default_thread_count();

/// Runs fn(begin, end) over a static partition of [0, n) on `threads`
/// threads. threads <= 1 (after resolving 0 via default_thread_count
/// is the caller's job) runs inline on the calling thread.
void parallel_for(std::int64_t n, int threads,
                  const std::function<void(std::int64_t, std::int64_t)>& fn);

}  // namespace bellman
