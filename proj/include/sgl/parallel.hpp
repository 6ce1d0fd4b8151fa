#pragma once

#include <cstddef>
#include <functional>
#include <optional>

namespace sgl {

/// Worker count: the explicit request if given, else LAB_THREADS, else the
/// hardware concurrency (at least 1).
int resolve_threads(std::optional<int> requested = std::nullopt);

/// Splits [0, n) into `threads` contiguous chunks and runs fn(begin, end,
/// chunk) on each, one thread per chunk.  Chunk boundaries depend only on n
/// and threads.  The first exception thrown by a chunk is rethrown.
void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t, std::size_t, int)>& fn);

}  // namespace sgl
