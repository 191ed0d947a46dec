#pragma once

#include "ava/common.hpp"

namespace ava {

// Axis-aligned cube the canonical body lives in; coordinates are mapped to
// [-1,1]^3 before frequency encoding and field sampling.
struct CanonicalBox {
  Vec3 center = Vec3::Zero();
  double half_extent = 1.0;

  Vec3 to_unit(const Vec3& x) const { return (x - center) / half_extent; }
  Vec3 from_unit(const Vec3& u) const { return center + half_extent * u; }
  Vec3 lo() const { return center - Vec3::Constant(half_extent); }
  double side() const { return 2.0 * half_extent; }
};

// 24-d positional encoding: per coordinate c in {x,y,z} and frequency
// f in {1,2,4,8}, emit sin(pi f c) then cos(pi f c), coordinate-major.
// Out-of-box coordinates are clamped to [-1,1] and counted.
std::array<double, kPosEncDim> positional_encoding(const Vec3& X, const CanonicalBox& box);

// Diagnostics: how many coordinates have been clamped so far (process-wide).
uint64_t encoding_clamp_count();
void reset_encoding_clamp_count();

}  // namespace ava
