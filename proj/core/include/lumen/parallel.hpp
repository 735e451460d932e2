#pragma once

#include <cstddef>
#include <functional>

namespace lumen {

// Resolves a worker count: the LUMEN_THREADS environment variable wins,
// then `requested`; 0 means hardware concurrency.
int effective_threads(int requested);

// Runs fn(i) for i in [0, count) across `threads` workers. Callers write
// results into per-index slots, so the outcome is independent of scheduling.
// Exceptions from workers are rethrown on the calling thread.
void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t)>& fn);

}  // namespace lumen
