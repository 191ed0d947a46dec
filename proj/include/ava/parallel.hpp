#pragma once

#include <cstdint>
#include <functional>

namespace ava {

// Number of worker threads for our own loops and for Eigen's GEMM.
int thread_count();
void set_thread_count(int n);

// Parallel loop with disjoint writes. Deterministic: the partition does not
// feed any reduction.
void par_for(int64_t n, const std::function<void(int64_t)>& fn);

// Deterministic parallel sum: fixed chunking independent of thread count,
// partials combined in chunk order.
double par_sum(int64_t n, const std::function<double(int64_t)>& fn);

}  // namespace ava
