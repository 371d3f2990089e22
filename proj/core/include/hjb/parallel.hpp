#pragma once

#include <cstddef>
#include <functional>

namespace hjb {

/// Runs task(i) for i in [0, count) on `workers` threads pulling from a shared
/// index queue. Results must be written to per-index slots by the caller, so
/// output is identical for any worker count. The first exception thrown by a
/// task is rethrown on the calling thread after all workers join.
void parallel_for(std::size_t count, unsigned workers,
                  const std::function<void(std::size_t)>& task);

/// Worker count resolution: explicit > HJB_WORKERS env var > 1.
unsigned resolve_workers(int requested);

}  // namespace hjb
