// Copyright The cagewarp Authors.
// SPDX-License-Identifier: Apache-2.0
#include <cagewarp/cage.hpp>
#include <cagewarp/error.hpp>

#include <cmath>

namespace cagewarp {

void TransformParams::validate() const {
  if (!translation.allFinite() || !rotation.allFinite() || !scale.allFinite()) {
    throw ValidationError("transform parameters must be finite");
  }
  if (!(scale.array() > 0.0).all()) {
    throw ValidationError("scale factors must be strictly positive");
  }
}

Mat3 rotation_x(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Mat3 r;
  r << 1, 0, 0,
       0, c, -s,
       0, s, c;
  return r;
}

Mat3 rotation_y(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Mat3 r;
  r << c, 0, s,
       0, 1, 0,
       -s, 0, c;
  return r;
}

Mat3 rotation_z(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Mat3 r;
  r << c, -s, 0,
       s, c, 0,
       0, 0, 1;
  return r;
}

Mat3 transform_linear(const TransformParams& p) {
  return rotation_x(p.rotation.x()) * rotation_y(p.rotation.y()) *
         rotation_z(p.rotation.z()) * p.scale.asDiagonal();
}

Mat3 transform_linear_inverse(const TransformParams& p) {
  return p.scale.cwiseInverse().asDiagonal() *
         rotation_z(p.rotation.z()).transpose() *
         rotation_y(p.rotation.y()).transpose() *
         rotation_x(p.rotation.x()).transpose();
}

Mat4 build_transform(const TransformParams& params) {
  params.validate();
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = transform_linear(params);
  m.topRightCorner<3, 1>() = params.translation;
  return m;
}

HexCage transform_cage(const HexCage& cage, const TransformParams& params) {
  params.validate();
  const Vec3 c = cage.center();
  // Written as a displacement so identity parameters reproduce the cage
  // bit for bit.
  const Mat3 lin = transform_linear(params) - Mat3::Identity();
  HexCage::Vertices out;
  for (int k = 0; k < 8; ++k) {
    out[static_cast<std::size_t>(k)] =
        cage.vertex(k) + (lin * (cage.vertex(k) - c) + params.translation);
  }
  return HexCage::from_vertices(out);
}

HexCage deform_cage(const HexCage& cage, const CageHandle& handle,
                    const Vec3& delta) {
  if (!delta.allFinite()) throw ValidationError("drag delta must be finite");
  HexCage::Vertices v = cage.vertices();
  switch (handle.kind) {
    case CageHandle::Kind::Corner:
      if (handle.index < 0 || handle.index > 7) {
        throw ValidationError("corner index must be in 0..7");
      }
      v[static_cast<std::size_t>(handle.index)] += delta;
      break;
    case CageHandle::Kind::Edge:
      if (handle.index < 0 || handle.index > 11) {
        throw ValidationError("edge index must be in 0..11");
      }
      for (int k : kCageEdges[static_cast<std::size_t>(handle.index)]) {
        v[static_cast<std::size_t>(k)] += delta;
      }
      break;
  }
  return HexCage::from_vertices(v);
}

}  // namespace cagewarp
