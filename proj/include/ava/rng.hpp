#pragma once

#include "ava/common.hpp"

#include <cmath>
#include <string_view>

namespace ava {

// Deterministic splitmix64 stream. All project randomness is derived from a
// root seed through named streams so parallel task order never changes
// results and no global RNG exists.
class RngStream {
 public:
  explicit RngStream(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // [0, 1)
  double uniform() {
    return double(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // [0, n)
  int uniform_int(int n) {
    return int(next_u64() % uint64_t(n));
  }

  // Marsaglia polar method; fully pinned (std::normal_distribution is
  // implementation-defined).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = uniform(-1.0, 1.0);
      v = uniform(-1.0, 1.0);
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
  }

  Vec3 normal_vec3() {
    return Vec3(normal(), normal(), normal());
  }

  Vec3 unit_vec3() {
    Vec3 v;
    double n;
    do {
      v = normal_vec3();
      n = v.norm();
    } while (n < 1e-12);
    return v / n;
  }

 private:
  uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// FNV-1a, used for stream derivation and content hashing.
inline uint64_t fnv1a(const void* data, size_t n, uint64_t h = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline uint64_t fnv1a(std::string_view s, uint64_t h = 0xcbf29ce484222325ull) {
  return fnv1a(s.data(), s.size(), h);
}

// Derives an independent stream from (root, name, indices).
inline RngStream derive_stream(uint64_t root, std::string_view name,
                               std::initializer_list<uint64_t> indices = {}) {
  uint64_t h = fnv1a(name);
  h = fnv1a(&root, sizeof root, h);
  for (uint64_t ix : indices) h = fnv1a(&ix, sizeof ix, h);
  return RngStream(h);
}

}  // namespace ava
