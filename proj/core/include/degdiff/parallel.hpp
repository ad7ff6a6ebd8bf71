#pragma once

#include <cstddef>
#include <functional>

namespace degdiff {

/// Worker count: the last set_thread_count() value if positive, else
/// DEGDIFF_THREADS, else the hardware concurrency.
unsigned thread_count();
void set_thread_count(unsigned n);

/// Calls body(i) for every i in [0, n) across thread_count() workers. Work is
/// handed out in contiguous chunks; results must be written to slots indexed
/// by i so the outcome does not depend on scheduling. The first exception
/// thrown by any body is rethrown after all workers stop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, std::size_t chunk = 0);

}  // namespace degdiff
