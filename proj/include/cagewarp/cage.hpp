// Copyright The cagewarp Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cagewarp/geometry.hpp>

#include <array>
#include <optional>
#include <span>
#include <vector>

namespace cagewarp {

/// Corner k of a cage sits at parametric (u, v, w) = (k & 1, (k >> 1) & 1, (k >> 2) & 1).
inline Vec3 corner_uvw(int k) {
  return {static_cast<double>(k & 1), static_cast<double>((k >> 1) & 1),
          static_cast<double>((k >> 2) & 1)};
}

/// The 12 edges as corner-index pairs: four along u, four along v, four along w.
inline constexpr std::array<std::array<int, 2>, 12> kCageEdges{{
    {0, 1}, {2, 3}, {4, 5}, {6, 7},
    {0, 2}, {1, 3}, {4, 6}, {5, 7},
    {0, 4}, {1, 5}, {2, 6}, {3, 7},
}};

/// One face of a cage as a bilinear patch P(s, t) over corner indices
/// c00, c10, c01, c11. `axis`/`side` identify the face as uvw[axis] == side.
struct CageFace {
  int axis;
  int side;
  std::array<int, 4> corners;  // c00, c10, c01, c11
};

extern const std::array<CageFace, 6> kCageFaces;

/// Result of a Newton solve for the parametric coordinates of a point.
struct InverseResult {
  Vec3 uvw = Vec3::Zero();
  bool converged = false;
  bool inside = false;
  int iterations = 0;
};

/// Hexahedral cage with trilinear geometry. Always non-degenerate: the
/// Jacobian determinant is positive at all corners and the center.
class HexCage {
 public:
  using Vertices = std::array<Vec3, 8>;

  /// Throws DegenerateCageError on fold-over or non-finite input.
  static HexCage from_vertices(const Vertices& vertices);
  static HexCage axis_aligned(const Aabb& box);

  const Vertices& vertices() const { return v_; }
  const Vec3& vertex(int k) const { return v_[static_cast<std::size_t>(k)]; }

  /// Arithmetic mean of the eight vertices.
  Vec3 center() const;
  Aabb bounds() const { return bounds_; }
  double diameter() const { return bounds_.diameter(); }

  Vec3 point_at(const Vec3& uvw) const;
  /// Columns are d/du, d/dv, d/dw of the trilinear map.
  Mat3 jacobian(const Vec3& uvw) const;

  /// Newton solve of point_at(uvw) == p, seeded with bbox-normalized
  /// coordinates. Points whose iterate settles outside [0,1]^3 (or never
  /// converges) are reported outside.
  InverseResult inverse(const Vec3& p) const;
  std::optional<Vec3> inverse_trilinear(const Vec3& p) const;
  bool contains(const Vec3& p) const;

  /// Outward unit normal of face `f` at face parameters (s, t).
  Vec3 face_normal(int f, double s, double t) const;
  Vec3 face_point(int f, double s, double t) const;
  /// Maps face parameters to the cage's parametric coordinates.
  static Vec3 face_uvw(int f, double s, double t);

  bool operator==(const HexCage& other) const { return v_ == other.v_; }

 private:
  explicit HexCage(const Vertices& v);

  Vertices v_;
  Aabb bounds_;
};

/// Throws DegenerateCageError unless every vertex is finite and the Jacobian
/// determinant is strictly positive at the 8 corners and the center.
void validate_cage(const HexCage::Vertices& vertices);
bool is_valid_cage(const HexCage::Vertices& vertices);

/// Strict containment test used for cage pairs: true when the parametric
/// coordinates of `p` lie in the open unit cube.
bool strictly_inside(const HexCage& cage, const Vec3& p);

/// Indices of `inner` vertices that are not strictly inside `outer`.
std::vector<int> containment_violations(const HexCage& outer,
                                        const HexCage& inner);

/// Outer cage plus the canonical and current (deformed) inner cage.
struct CagePair {
  HexCage outer;
  HexCage inner_canonical;
  HexCage inner_deformed;

  /// Throws ContainmentError naming the offending vertices of either inner cage.
  static CagePair make(const HexCage& outer, const HexCage& inner_canonical,
                       const HexCage& inner_deformed);
  static CagePair make(const HexCage& outer, const HexCage& inner) {
    return make(outer, inner, inner);
  }
};

// Transforms

/// Translation, rotation (radians, composed as Rx Ry Rz) and per-axis scale.
struct TransformParams {
  Vec3 translation = Vec3::Zero();
  Vec3 rotation = Vec3::Zero();
  Vec3 scale = Vec3::Ones();

  static TransformParams identity() { return {}; }
  /// Throws ValidationError for non-positive scales or non-finite values.
  void validate() const;
  bool operator==(const TransformParams&) const = default;
};

/// Right-handed counterclockwise rotations about each axis.
Mat3 rotation_x(double angle);
Mat3 rotation_y(double angle);
Mat3 rotation_z(double angle);

/// T * Rx * Ry * Rz * S as a homogeneous matrix.
Mat4 build_transform(const TransformParams& params);

/// Linear block of build_transform and its exact inverse S^-1 Rz^T Ry^T Rx^T.
Mat3 transform_linear(const TransformParams& params);
Mat3 transform_linear_inverse(const TransformParams& params);

/// Maps every vertex about the cage center: v' = c + M (v - c).
HexCage transform_cage(const HexCage& cage, const TransformParams& params);

struct CageHandle {
  enum class Kind { Corner, Edge };
  Kind kind = Kind::Corner;
  int index = 0;

  static CageHandle corner(int k) { return {Kind::Corner, k}; }
  static CageHandle edge(int k) { return {Kind::Edge, k}; }
  bool operator==(const CageHandle&) const = default;
};

/// Moves one corner, or both endpoints of an edge, by `delta`.
HexCage deform_cage(const HexCage& cage, const CageHandle& handle,
                    const Vec3& delta);

// Ray casting against cage faces

struct SurfaceHit {
  double ray_t = 0.0;  // hit = origin + ray_t * direction
  int face = -1;
  double s = 0.0;
  double t = 0.0;
};

/// Smallest positive intersection of the ray with the cage boundary,
/// treating each face as a bilinear patch.
std::optional<SurfaceHit> intersect_exit(const HexCage& cage, const Vec3& origin,
                                         const Vec3& direction);

}  // namespace cagewarp
