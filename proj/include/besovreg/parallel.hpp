#pragma once

#include <cstddef>
#include <functional>

namespace besovreg {

// Default worker count: BESOVREG_THREADS if set and positive, otherwise the
// hardware concurrency (at least 1).
unsigned default_thread_count();

// Runs body(i) for i in [0, count) on up to `threads` workers using a shared
// atomic counter. Results must be written to per-index slots; iteration order
// is unspecified. Exceptions from workers are rethrown on the caller thread.
void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace besovreg
