// Copyright The cagewarp Authors.
// SPDX-License-Identifier: Apache-2.0
#include <cagewarp/error.hpp>
#include <cagewarp/warp.hpp>

#include <Eigen/Dense>

#include <spdlog/spdlog.h>

namespace cagewarp {

std::string_view to_string(AdjustmentMode mode) {
  switch (mode) {
    case AdjustmentMode::DiscreteEmpty: return "discrete-empty";
    case AdjustmentMode::DiscreteCopy: return "discrete-copy";
    case AdjustmentMode::Continuous: return "continuous";
  }
  return "?";
}

AdjustmentMode parse_mode(std::string_view text) {
  if (text == "discrete-empty") return AdjustmentMode::DiscreteEmpty;
  if (text == "discrete-copy") return AdjustmentMode::DiscreteCopy;
  if (text == "continuous") return AdjustmentMode::Continuous;
  throw ValidationError("unknown adjustment mode '" + std::string(text) +
                        "' (expected discrete-empty, discrete-copy or continuous)");
}

std::string_view to_string(RegionLabel label) {
  switch (label) {
    case RegionLabel::OutsideOuter: return "outside-outer";
    case RegionLabel::Shell: return "shell";
    case RegionLabel::CanonicalInnerOnly: return "canonical-inner-only";
    case RegionLabel::DeformedInner: return "deformed-inner";
  }
  return "?";
}

// InnerMapping

InnerMapping InnerMapping::identity() { return {}; }

InnerMapping InnerMapping::affine(const Mat3& linear, const Vec3& offset) {
  InnerMapping m;
  m.linear_ = linear;
  m.offset_ = offset;
  return m;
}

InnerMapping InnerMapping::trilinear(const HexCage& canonical,
                                     const HexCage& deformed) {
  InnerMapping m;
  std::array<Vec3, 8> disp;
  for (int k = 0; k < 8; ++k) {
    disp[static_cast<std::size_t>(k)] = canonical.vertex(k) - deformed.vertex(k);
  }
  m.cages_ = Cages{canonical, deformed, disp};
  return m;
}

namespace {

Vec3 blend_corners(const std::array<Vec3, 8>& c, const Vec3& uvw) {
  const double u = uvw.x(), v = uvw.y(), w = uvw.z();
  const Vec3 x00 = (1 - u) * c[0] + u * c[1];
  const Vec3 x10 = (1 - u) * c[2] + u * c[3];
  const Vec3 x01 = (1 - u) * c[4] + u * c[5];
  const Vec3 x11 = (1 - u) * c[6] + u * c[7];
  return (1 - w) * ((1 - v) * x00 + v * x10) + w * ((1 - v) * x01 + v * x11);
}

}  // namespace

Vec3 InnerMapping::to_canonical(const Vec3& p) const {
  if (!cages_) return linear_ * p + offset_;
  const InverseResult r = cages_->deformed.inverse(p);
  if (!r.converged) {
    spdlog::debug("inner mapping: inverse trilinear did not converge at "
                  "({}, {}, {}); using identity",
                  p.x(), p.y(), p.z());
    return p;
  }
  return to_canonical_at(p, r.uvw);
}

Vec3 InnerMapping::to_canonical_at(const Vec3& p, const Vec3& deformed_uvw) const {
  if (!cages_) return linear_ * p + offset_;
  // Canonical = trilinear(canonical, uvw), written as p plus the blended
  // corner displacement so zero displacement maps p to itself exactly.
  return p + blend_corners(cages_->displacement, deformed_uvw);
}

Mat3 InnerMapping::jacobian(const Vec3& p) const {
  if (!cages_) return linear_;
  const InverseResult r = cages_->deformed.inverse(p);
  if (!r.converged) return Mat3::Identity();
  const Mat3 jd = cages_->deformed.jacobian(r.uvw);
  const Mat3 jc = cages_->canonical.jacobian(r.uvw);
  return jc * jd.inverse();
}

// EditSpec

EditSpec EditSpec::begin(const HexCage& outer, const HexCage& inner,
                         AdjustmentMode mode) {
  return EditSpec(CagePair::make(outer, inner), outer, mode);
}

EditSpec EditSpec::replay(const HexCage& outer, const HexCage& inner,
                          AdjustmentMode mode, std::span<const Manipulation> log) {
  EditSpec e = begin(outer, inner, mode);
  for (const Manipulation& m : log) e = e.applied(m);
  return e;
}

EditSpec EditSpec::with_mode(AdjustmentMode mode) const {
  EditSpec e = *this;
  e.mode_ = mode;
  return e;
}

EditSpec EditSpec::applied(const Manipulation& m) const {
  EditSpec next = *this;
  const HexCage& target = m.target == CageTarget::Inner ? cages_.inner_deformed
                                                         : cages_.outer;
  HexCage moved = target;
  if (const auto* t = std::get_if<TransformParams>(&m.action)) {
    moved = transform_cage(target, *t);
    if (m.target == CageTarget::Inner && mapping_.is_affine()) {
      // Step map x -> c + L (x - c) + t, accumulated onto the forward map.
      const Vec3 c = target.center();
      const Mat3 lin = transform_linear(*t);
      const Vec3 step_offset = (c + t->translation) - lin * c;
      next.forward_linear_ = lin * forward_linear_;
      next.forward_offset_ = lin * forward_offset_ + step_offset;
    }
  } else {
    const auto& d = std::get<CageDeformation>(m.action);
    moved = deform_cage(target, d.handle, d.delta);
  }

  if (m.target == CageTarget::Inner) {
    next.cages_ = CagePair::make(cages_.outer, cages_.inner_canonical, moved);
  } else {
    next.cages_ = CagePair::make(moved, cages_.inner_canonical,
                                 cages_.inner_deformed);
  }
  next.log_.push_back(m);

  if (m.target == CageTarget::Inner) {
    const bool affine_log =
        mapping_.is_affine() && std::holds_alternative<TransformParams>(m.action);
    if (affine_log) {
      // Inverse of the accumulated forward map, from exact per-step inverses.
      Mat3 inv = Mat3::Identity();
      for (const Manipulation& step : next.log_) {
        if (step.target != CageTarget::Inner) continue;
        inv = inv * transform_linear_inverse(std::get<TransformParams>(step.action));
      }
      next.mapping_ = InnerMapping::affine(inv, -(inv * next.forward_offset_));
    } else {
      next.mapping_ = InnerMapping::trilinear(next.cages_.inner_canonical,
                                              next.cages_.inner_deformed);
    }
  }
  return next;
}

bool EditSpec::is_identity() const {
  return cages_.inner_deformed == cages_.inner_canonical;
}

Aabb EditSpec::bake_region() const {
  if (mode_ == AdjustmentMode::Continuous) return cages_.outer.bounds();
  return cages_.inner_deformed.bounds().merged(cages_.inner_canonical.bounds());
}

}  // namespace cagewarp
