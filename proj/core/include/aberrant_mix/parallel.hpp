#pragma once

#include <cstddef>
#include <functional>

namespace aberrant_mix {

/// Worker count: ABERRANT_MIX_THREADS when set to a positive integer,
/// otherwise the hardware concurrency (at least 1).
int thread_count();

/// Runs body(i) for i in [0, count) on up to thread_count() threads. Each
/// index runs exactly once; callers write results into per-index slots so
/// output never depends on scheduling. The first exception thrown by any
/// body is rethrown after all workers finish. Calls made from inside a
/// worker run serially.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace aberrant_mix
