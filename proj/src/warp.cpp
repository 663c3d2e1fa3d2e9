// Copyright The cagewarp Authors.
// SPDX-License-Identifier: Apache-2.0
#include <cagewarp/error.hpp>
#include <cagewarp/warp.hpp>

#include <spdlog/spdlog.h>

#include <cmath>

namespace cagewarp {

RegionLabel classify(const CagePair& pair, const Vec3& p) {
  if (!pair.outer.bounds().padded(1e-9 * pair.outer.diameter()).contains(p)) {
    return RegionLabel::OutsideOuter;
  }
  if (pair.inner_deformed.contains(p)) return RegionLabel::DeformedInner;
  if (pair.inner_canonical.contains(p)) return RegionLabel::CanonicalInnerOnly;
  if (pair.outer.contains(p)) return RegionLabel::Shell;
  return RegionLabel::OutsideOuter;
}

Vec3 phi_inner(const EditSpec& edit, const Vec3& p) {
  return edit.inner_mapping().to_canonical(p);
}

namespace {

// Ray parameter where c + lambda * dir leaves `cage`, by bisection on the
// membership test. Used when the patch intersection misses numerically.
double bisect_exit(const HexCage& cage, const Vec3& c, const Vec3& dir) {
  double lo = 0.0, hi = 1.0;
  const double dir_len = dir.norm();
  while (cage.contains(c + hi * dir)) {
    lo = hi;
    hi *= 2.0;
    if (hi * dir_len > 1e6 * cage.diameter()) break;
  }
  for (int i = 0; i < 80; ++i) {
    const double mid = 0.5 * (lo + hi);
    (cage.contains(c + mid * dir) ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

Vec3 phi_shell(const EditSpec& edit, const Vec3& p) {
  const CagePair& pair = edit.cages();
  const Vec3 c = pair.inner_deformed.center();
  const Vec3 dir = p - c;
  if (dir.squaredNorm() == 0.0) return phi_inner(edit, p);

  double lam_in;
  Vec3 uvw_in;
  if (const auto hit = intersect_exit(pair.inner_deformed, c, dir)) {
    lam_in = hit->ray_t;
    uvw_in = HexCage::face_uvw(hit->face, hit->s, hit->t);
  } else {
    spdlog::debug("shell mapping: inner surface hit missed, bisecting");
    lam_in = bisect_exit(pair.inner_deformed, c, dir);
    uvw_in = pair.inner_deformed.inverse(c + lam_in * dir).uvw.cwiseMax(0.0).cwiseMin(1.0);
  }
  double lam_out;
  if (const auto hit = intersect_exit(pair.outer, c, dir)) {
    lam_out = hit->ray_t;
  } else {
    spdlog::debug("shell mapping: outer surface hit missed, bisecting");
    lam_out = bisect_exit(pair.outer, c, dir);
  }
  if (!(lam_out > lam_in)) return p;

  const double t = std::clamp((1.0 - lam_in) / (lam_out - lam_in), 0.0, 1.0);
  const Vec3 q_in = c + lam_in * dir;
  const Vec3 disp = edit.inner_mapping().to_canonical_at(q_in, uvw_in) - q_in;
  return p + (1.0 - t) * disp;
}

Vec3 map_point_exact(const EditSpec& edit, const Vec3& p) {
  switch (classify(edit.cages(), p)) {
    case RegionLabel::DeformedInner: return phi_inner(edit, p);
    case RegionLabel::Shell:
    case RegionLabel::CanonicalInnerOnly: return phi_shell(edit, p);
    case RegionLabel::OutsideOuter: break;
  }
  return p;
}

Vec3 push_direction(const Mat3& jacobian, const Vec3& d) {
  const Vec3 jd = jacobian * d;
  const double n = jd.norm();
  if (!(n >= 1e-9)) {
    spdlog::debug("direction mapping: degenerate Jacobian, keeping direction");
    return d;
  }
  return jd / n;
}

namespace {

bool uses_shell(AdjustmentMode mode, RegionLabel label) {
  return mode == AdjustmentMode::Continuous &&
         (label == RegionLabel::Shell || label == RegionLabel::CanonicalInnerOnly);
}

Vec3 direction_for(const EditSpec& edit, RegionLabel label, const Vec3& p,
                   const Vec3& d, double fd_step) {
  if (label == RegionLabel::DeformedInner) {
    return push_direction(edit.inner_mapping().jacobian(p), d);
  }
  if (uses_shell(edit.mode(), label)) {
    const auto map = [&](const Vec3& x) { return phi_shell(edit, x); };
    return push_direction(finite_difference_jacobian(map, p, fd_step), d);
  }
  return d;
}

}  // namespace

Vec3 phi_direction(const EditSpec& edit, const Vec3& p, const Vec3& d,
                   double fd_step) {
  return direction_for(edit, classify(edit.cages(), p), p, d, fd_step);
}

StageResult map_through_edit(const EditLayer& layer, const Vec3& p,
                             const Vec3& d, bool map_direction) {
  const EditSpec& edit = *layer.edit;
  const RegionLabel label = classify(edit.cages(), p);
  const AdjustmentMode mode = edit.mode();

  if (label == RegionLabel::OutsideOuter) return {p, d, std::nullopt};
  if (is_discrete(mode)) {
    if (label == RegionLabel::Shell) return {p, d, std::nullopt};
    if (label == RegionLabel::CanonicalInnerOnly) return {p, d, fill_of(mode)};
  }

  StageResult out{p, d, std::nullopt};
  if (layer.grid) {
    const WarpGrid& grid = *layer.grid;
    out.point = grid.canonical(p);
    if (map_direction) {
      const auto map = [&](const Vec3& x) { return grid.canonical(x); };
      out.direction = push_direction(
          finite_difference_jacobian(map, p, 0.5 * grid.voxel_size()), d);
    }
  } else {
    out.point = label == RegionLabel::DeformedInner ? phi_inner(edit, p)
                                                    : phi_shell(edit, p);
    if (map_direction) {
      const double step = 0.5 * edit.cages().outer.diameter() / 256.0;
      out.direction = direction_for(edit, label, p, d, step);
    }
  }
  return out;
}

RadianceSample query_deformed(const RadianceField& field, const EditLayer& layer,
                              const Vec3& p, const Vec3& d) {
  const StageResult r = map_through_edit(layer, p, d, field.uses_direction());
  if (r.fill_override == Fill::Empty) return RadianceSample::empty();
  return field.query(r.point, r.direction);
}

StageResult compose_edits(std::span<const EditLayer> stack, const Vec3& p,
                          const Vec3& d, std::size_t max_depth,
                          bool map_direction) {
  if (stack.size() > max_depth) {
    throw ValidationError("edit stack depth " + std::to_string(stack.size()) +
                          " exceeds the maximum of " + std::to_string(max_depth));
  }
  StageResult cur{p, d, std::nullopt};
  for (auto it = stack.rbegin(); it != stack.rend(); ++it) {
    const StageResult r = map_through_edit(*it, cur.point, cur.direction,
                                           map_direction);
    if (r.fill_override == Fill::Empty) {
      cur.fill_override = Fill::Empty;
      return cur;
    }
    if (r.fill_override == Fill::Original) {
      cur.fill_override = Fill::Original;
      continue;
    }
    cur.point = r.point;
    cur.direction = r.direction;
  }
  return cur;
}

DeformedField::DeformedField(FieldPtr base, std::vector<EditLayer> stack,
                             std::size_t max_depth)
    : base_(std::move(base)), stack_(std::move(stack)) {
  if (!base_) throw ValidationError("deformed field needs a base field");
  if (stack_.size() > max_depth) {
    throw ValidationError("edit stack depth " + std::to_string(stack_.size()) +
                          " exceeds the maximum of " + std::to_string(max_depth));
  }
}

RadianceSample DeformedField::query(const Vec3& p, const Vec3& d) const {
  if (stack_.empty()) return base_->query(p, d);
  const StageResult r =
      compose_edits(stack_, p, d, stack_.size(), base_->uses_direction());
  if (r.fill_override == Fill::Empty) return RadianceSample::empty();
  return base_->query(r.point, r.direction);
}

FieldQuery DeformedField::as_query() const {
  return [self = *this](const Vec3& p, const Vec3& d) { return self.query(p, d); };
}

}  // namespace cagewarp
