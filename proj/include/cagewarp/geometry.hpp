// Copyright The cagewarp Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <array>

namespace cagewarp {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Rgb = Eigen::Vector3d;

using Dims3 = std::array<int, 3>;

/// Axis-aligned box with inclusive bounds.
struct Aabb {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  Vec3 extent() const { return max - min; }
  Vec3 center() const { return 0.5 * (min + max); }
  double diameter() const { return extent().norm(); }

  bool contains(const Vec3& p) const {
    return p.x() >= min.x() && p.y() >= min.y() && p.z() >= min.z() &&
           p.x() <= max.x() && p.y() <= max.y() && p.z() <= max.z();
  }

  Aabb padded(double pad) const {
    return {min.array() - pad, max.array() + pad};
  }

  Aabb merged(const Aabb& other) const {
    return {min.cwiseMin(other.min), max.cwiseMax(other.max)};
  }

  bool valid() const {
    return (min.array() < max.array()).all() && min.allFinite() &&
           max.allFinite();
  }
};

inline bool all_finite(const Vec3& v) { return v.allFinite(); }

}  // namespace cagewarp
