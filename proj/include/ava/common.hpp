#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ava {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Quat = Eigen::Quaterniond;

// Joint count of the articulated body model. Fixed across the project.
constexpr int kJoints = 24;
// Pixel-aligned feature width produced by the image encoder.
constexpr int kFeatureDim = 256;
// Positional-encoding width: 3 coords x 4 frequencies x (sin, cos).
constexpr int kPosEncDim = 24;
// Fusion token: feature + visibility normal.
constexpr int kTokenDim = kFeatureDim + 3;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : Error { using Error::Error; };
struct UsageError : Error { using Error::Error; };
struct ShapeMismatchError : Error { using Error::Error; };
struct EmptySurfaceError : Error { using Error::Error; };
struct EmptyInputError : Error { using Error::Error; };
struct DegenerateMeshError : Error { using Error::Error; };
struct NonWatertightError : Error { using Error::Error; };
struct DegenerateBodyError : Error { using Error::Error; };
struct SelfIntersectingError : Error { using Error::Error; };
struct NoVisibleViewError : Error { using Error::Error; };
struct DivergenceError : Error { using Error::Error; };
struct NonFiniteGradientError : Error { using Error::Error; };
struct NonConvergentError : Error { using Error::Error; };

}  // namespace ava
