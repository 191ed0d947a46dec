#include "ava/encoding.hpp"

#include <atomic>
#include <cmath>

namespace ava {

namespace {
std::atomic<uint64_t> g_clamped{0};
constexpr double kFrequencies[4] = {1.0, 2.0, 4.0, 8.0};
}  // namespace

std::array<double, kPosEncDim> positional_encoding(const Vec3& X, const CanonicalBox& box) {
  const Vec3 u = box.to_unit(X);
  std::array<double, kPosEncDim> out;
  int j = 0;
  for (int c = 0; c < 3; ++c) {
    double v = u[c];
    if (v < -1.0 || v > 1.0) {
      v = std::clamp(v, -1.0, 1.0);
      g_clamped.fetch_add(1, std::memory_order_relaxed);
    }
    for (double f : kFrequencies) {
      out[j++] = std::sin(EIGEN_PI * f * v);
      out[j++] = std::cos(EIGEN_PI * f * v);
    }
  }
  return out;
}

uint64_t encoding_clamp_count() { return g_clamped.load(); }
void reset_encoding_clamp_count() { g_clamped.store(0); }

}  // namespace ava
