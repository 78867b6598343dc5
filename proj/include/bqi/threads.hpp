#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace bqi {

/// Process-wide worker cap. Resolution order: set_thread_count() (CLI flag),
/// then the BQI_THREADS environment variable, then hardware concurrency.
int thread_count();
void set_thread_count(int n);

/// Run fn(i) for i in [0, n). Work items are claimed from a shared counter;
/// callers must write results into per-index slots so the output is
/// independent of scheduling. Falls back to a plain loop when only one
/// worker is available or the range is small.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& fn);

}  // namespace bqi
