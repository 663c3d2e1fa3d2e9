// Copyright The cagewarp Authors.
// SPDX-License-Identifier: Apache-2.0
#include <cagewarp/cage.hpp>
#include <cagewarp/error.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <string>

namespace cagewarp {

namespace {

constexpr int kMaxNewtonIterations = 20;
constexpr double kInsideTolerance = 1e-9;
constexpr double kStrictMargin = 1e-9;
constexpr double kPatchTolerance = 1e-9;

Vec3 trilinear(const HexCage::Vertices& v, const Vec3& uvw) {
  const double u = uvw.x(), w1 = uvw.y(), w2 = uvw.z();
  const Vec3 x00 = (1 - u) * v[0] + u * v[1];
  const Vec3 x10 = (1 - u) * v[2] + u * v[3];
  const Vec3 x01 = (1 - u) * v[4] + u * v[5];
  const Vec3 x11 = (1 - u) * v[6] + u * v[7];
  return (1 - w2) * ((1 - w1) * x00 + w1 * x10) + w2 * ((1 - w1) * x01 + w1 * x11);
}

Mat3 trilinear_jacobian(const HexCage::Vertices& v, const Vec3& uvw) {
  const double u = uvw.x(), s = uvw.y(), w = uvw.z();
  Mat3 j;
  j.col(0) = (1 - s) * (1 - w) * (v[1] - v[0]) + s * (1 - w) * (v[3] - v[2]) +
             (1 - s) * w * (v[5] - v[4]) + s * w * (v[7] - v[6]);
  j.col(1) = (1 - u) * (1 - w) * (v[2] - v[0]) + u * (1 - w) * (v[3] - v[1]) +
             (1 - u) * w * (v[6] - v[4]) + u * w * (v[7] - v[5]);
  j.col(2) = (1 - u) * (1 - s) * (v[4] - v[0]) + u * (1 - s) * (v[5] - v[1]) +
             (1 - u) * s * (v[6] - v[2]) + u * s * (v[7] - v[3]);
  return j;
}

Aabb bounds_of(const HexCage::Vertices& v) {
  Aabb b{v[0], v[0]};
  for (const Vec3& p : v) {
    b.min = b.min.cwiseMin(p);
    b.max = b.max.cwiseMax(p);
  }
  return b;
}

}  // namespace

const std::array<CageFace, 6> kCageFaces{{
    {0, 0, {0, 2, 4, 6}},
    {0, 1, {1, 3, 5, 7}},
    {1, 0, {0, 1, 4, 5}},
    {1, 1, {2, 3, 6, 7}},
    {2, 0, {0, 1, 2, 3}},
    {2, 1, {4, 5, 6, 7}},
}};

bool is_valid_cage(const HexCage::Vertices& vertices) {
  for (const Vec3& p : vertices) {
    if (!p.allFinite()) return false;
  }
  const double scale = bounds_of(vertices).diameter();
  if (!(scale > 0.0)) return false;
  const double min_det = 1e-12 * scale * scale * scale;
  for (int k = 0; k < 8; ++k) {
    if (!(trilinear_jacobian(vertices, corner_uvw(k)).determinant() > min_det)) {
      return false;
    }
  }
  return trilinear_jacobian(vertices, Vec3::Constant(0.5)).determinant() > min_det;
}

void validate_cage(const HexCage::Vertices& vertices) {
  for (const Vec3& p : vertices) {
    if (!p.allFinite()) throw DegenerateCageError("cage has non-finite vertex");
  }
  if (!is_valid_cage(vertices)) {
    throw DegenerateCageError(
        "degenerate cage: trilinear Jacobian is not positive at every corner "
        "and the center");
  }
}

HexCage::HexCage(const Vertices& v) : v_(v), bounds_(bounds_of(v)) {}

HexCage HexCage::from_vertices(const Vertices& vertices) {
  validate_cage(vertices);
  return HexCage(vertices);
}

HexCage HexCage::axis_aligned(const Aabb& box) {
  Vertices v;
  for (int k = 0; k < 8; ++k) {
    v[static_cast<std::size_t>(k)] =
        box.min + corner_uvw(k).cwiseProduct(box.extent());
  }
  return from_vertices(v);
}

Vec3 HexCage::center() const {
  Vec3 sum = Vec3::Zero();
  for (const Vec3& p : v_) sum += p;
  return sum / 8.0;
}

Vec3 HexCage::point_at(const Vec3& uvw) const { return trilinear(v_, uvw); }

Mat3 HexCage::jacobian(const Vec3& uvw) const {
  return trilinear_jacobian(v_, uvw);
}

InverseResult HexCage::inverse(const Vec3& p) const {
  InverseResult r;
  const Vec3 ext = bounds_.extent().cwiseMax(Vec3::Constant(1e-300));
  Vec3 uvw = (p - bounds_.min).cwiseQuotient(ext).cwiseMax(0.0).cwiseMin(1.0);
  const double diam = diameter();
  const double tol = 1e-12 * diam;
  const double det_floor = 1e-12 * diam * diam * diam;

  Vec3 residual = point_at(uvw) - p;
  for (int it = 0; it < kMaxNewtonIterations; ++it) {
    if (residual.norm() <= tol) {
      r.converged = true;
      break;
    }
    const Mat3 j = jacobian(uvw);
    const double det = j.determinant();
    Vec3 step;
    double damping = 1.0;
    if (std::abs(det) < det_floor) {
      step = j.completeOrthogonalDecomposition().solve(residual);
      damping = 0.5;
    } else {
      step = j.inverse() * residual;
    }
    uvw -= damping * step;
    r.iterations = it + 1;
    if (!uvw.allFinite() || uvw.cwiseAbs().maxCoeff() > 1e3) break;
    residual = point_at(uvw) - p;
  }
  if (!r.converged && uvw.allFinite() && residual.norm() <= tol) {
    r.converged = true;
  }
  r.uvw = uvw;
  r.inside = r.converged && (uvw.array() >= -kInsideTolerance).all() &&
             (uvw.array() <= 1.0 + kInsideTolerance).all();
  return r;
}

std::optional<Vec3> HexCage::inverse_trilinear(const Vec3& p) const {
  const InverseResult r = inverse(p);
  if (!r.inside) return std::nullopt;
  return r.uvw;
}

bool HexCage::contains(const Vec3& p) const {
  if (!bounds_.padded(kInsideTolerance * diameter()).contains(p)) return false;
  return inverse(p).inside;
}

Vec3 HexCage::face_uvw(int f, double s, double t) {
  const CageFace& face = kCageFaces[static_cast<std::size_t>(f)];
  Vec3 uvw;
  int slot = 0;
  for (int a = 0; a < 3; ++a) {
    if (a == face.axis) {
      uvw[a] = face.side;
    } else {
      uvw[a] = slot++ == 0 ? s : t;
    }
  }
  return uvw;
}

Vec3 HexCage::face_point(int f, double s, double t) const {
  return point_at(face_uvw(f, s, t));
}

Vec3 HexCage::face_normal(int f, double s, double t) const {
  const CageFace& face = kCageFaces[static_cast<std::size_t>(f)];
  const Mat3 j = jacobian(face_uvw(f, s, t));
  int tangents[2];
  int slot = 0;
  for (int a = 0; a < 3; ++a) {
    if (a != face.axis) tangents[slot++] = a;
  }
  Vec3 n = j.col(tangents[0]).cross(j.col(tangents[1]));
  const Vec3 outward = face.side ? j.col(face.axis) : Vec3(-j.col(face.axis));
  if (n.dot(outward) < 0) n = -n;
  return n.normalized();
}

bool strictly_inside(const HexCage& cage, const Vec3& p) {
  const InverseResult r = cage.inverse(p);
  return r.converged && (r.uvw.array() > kStrictMargin).all() &&
         (r.uvw.array() < 1.0 - kStrictMargin).all();
}

std::vector<int> containment_violations(const HexCage& outer,
                                        const HexCage& inner) {
  std::vector<int> bad;
  for (int k = 0; k < 8; ++k) {
    if (!strictly_inside(outer, inner.vertex(k))) bad.push_back(k);
  }
  return bad;
}

CagePair CagePair::make(const HexCage& outer, const HexCage& inner_canonical,
                        const HexCage& inner_deformed) {
  auto describe = [](const std::vector<int>& idx) {
    std::string s;
    for (int i : idx) s += (s.empty() ? "" : ", ") + std::to_string(i);
    return s;
  };
  if (auto bad = containment_violations(outer, inner_canonical); !bad.empty()) {
    throw ContainmentError(bad, "inner cage vertices not strictly inside the "
                                "outer cage: " + describe(bad));
  }
  if (!(inner_deformed == inner_canonical)) {
    if (auto bad = containment_violations(outer, inner_deformed); !bad.empty()) {
      throw ContainmentError(bad, "deformed inner cage vertices not strictly "
                                  "inside the outer cage: " + describe(bad));
    }
  }
  return CagePair{outer, inner_canonical, inner_deformed};
}

// Ray casting

namespace {

// Roots of a t^2 + b t + c = 0, tolerant of a vanishing leading term.
int solve_quadratic(double a, double b, double c, double roots[2]) {
  const double scale = std::max({std::abs(a), std::abs(b), std::abs(c)});
  if (scale == 0.0) return 0;
  if (std::abs(a) <= 1e-12 * scale) {
    if (std::abs(b) <= 1e-300) return 0;
    roots[0] = -c / b;
    return 1;
  }
  double disc = b * b - 4 * a * c;
  if (disc < 0) {
    if (disc < -1e-12 * b * b) return 0;
    disc = 0;
  }
  const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
  roots[0] = q / a;
  if (q == 0.0) return 1;
  roots[1] = c / q;
  return 2;
}

}  // namespace

std::optional<SurfaceHit> intersect_exit(const HexCage& cage, const Vec3& origin,
                                         const Vec3& direction) {
  const double len2 = direction.squaredNorm();
  if (!(len2 > 0.0)) return std::nullopt;
  const Vec3 rn = direction / std::sqrt(len2);
  const Vec3 helper = std::abs(rn.x()) < 0.6 ? Vec3::UnitX()
                      : std::abs(rn.y()) < 0.6 ? Vec3::UnitY()
                                               : Vec3::UnitZ();
  const Vec3 n1 = rn.cross(helper).normalized();
  const Vec3 n2 = rn.cross(n1);

  std::optional<SurfaceHit> best;
  for (int f = 0; f < 6; ++f) {
    const auto& c = kCageFaces[static_cast<std::size_t>(f)].corners;
    const Vec3& a = cage.vertex(c[0]);
    const Vec3 e1 = cage.vertex(c[1]) - a;
    const Vec3 e2 = cage.vertex(c[2]) - a;
    const Vec3 e3 = cage.vertex(c[3]) - cage.vertex(c[1]) - cage.vertex(c[2]) + a;
    const Vec3 q = a - origin;
    const double A1 = n1.dot(q), B1 = n1.dot(e1), C1 = n1.dot(e2), D1 = n1.dot(e3);
    const double A2 = n2.dot(q), B2 = n2.dot(e1), C2 = n2.dot(e2), D2 = n2.dot(e3);

    double roots[2];
    const int count = solve_quadratic(C1 * D2 - C2 * D1,
                                      A1 * D2 + C1 * B2 - A2 * D1 - C2 * B1,
                                      A1 * B2 - A2 * B1, roots);
    for (int r = 0; r < count; ++r) {
      const double t = roots[r];
      if (t < -kPatchTolerance || t > 1 + kPatchTolerance) continue;
      const double den1 = B1 + D1 * t, den2 = B2 + D2 * t;
      double s;
      if (std::abs(den1) >= std::abs(den2)) {
        if (std::abs(den1) < 1e-300) continue;
        s = -(A1 + C1 * t) / den1;
      } else {
        s = -(A2 + C2 * t) / den2;
      }
      if (s < -kPatchTolerance || s > 1 + kPatchTolerance) continue;
      const double sc = std::clamp(s, 0.0, 1.0), tc = std::clamp(t, 0.0, 1.0);
      const Vec3 hit = a + sc * e1 + tc * e2 + sc * tc * e3;
      const double lam = direction.dot(hit - origin) / len2;
      if (!(lam > 1e-12)) continue;
      if (!best || lam < best->ray_t) best = SurfaceHit{lam, f, sc, tc};
    }
  }
  return best;
}

}  // namespace cagewarp
