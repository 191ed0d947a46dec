#include "ava/parallel.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <thread>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ava {

namespace {
int g_threads = []() {
  int n = int(std::thread::hardware_concurrency());
  return std::clamp(n, 1, 8);
}();
}  // namespace

int thread_count() { return g_threads; }

void set_thread_count(int n) {
  g_threads = std::max(1, n);
#ifdef _OPENMP
  omp_set_num_threads(g_threads);
#endif
  Eigen::setNbThreads(g_threads);
}

void par_for(int64_t n, const std::function<void(int64_t)>& fn) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(g_threads)
#endif
  for (int64_t i = 0; i < n; ++i) fn(i);
}

double par_sum(int64_t n, const std::function<double(int64_t)>& fn) {
  constexpr int64_t kChunk = 4096;
  const int64_t chunks = (n + kChunk - 1) / kChunk;
  std::vector<double> partial(size_t(chunks), 0.0);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(g_threads)
#endif
  for (int64_t c = 0; c < chunks; ++c) {
    double s = 0.0;
    const int64_t hi = std::min(n, (c + 1) * kChunk);
    for (int64_t i = c * kChunk; i < hi; ++i) s += fn(i);
    partial[size_t(c)] = s;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

}  // namespace ava
