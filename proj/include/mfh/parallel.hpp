#pragma once

#include <cstddef>
#include <functional>

namespace mfh {

/// Worker count used by every parallel loop. Defaults to HERMITE_THREADS when
/// set, otherwise std::thread::hardware_concurrency().
int thread_count();
void set_thread_count(int n);

/// Runs body(i) for i in [0, n) on thread_count() workers. Work is split into
/// contiguous blocks, so any per-index output is independent of scheduling.
/// The first exception thrown by a worker is rethrown on the caller.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

/// Sum of values[0..n) by pairwise reduction in a fixed order.
double pairwise_sum(const double* values, std::size_t n);

}  // namespace mfh
