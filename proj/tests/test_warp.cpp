// Copyright The cagewarp Authors.
// SPDX-License-Identifier: Apache-2.0
#include <cagewarp/error.hpp>
#include <cagewarp/warp.hpp>

#include <Eigen/Geometry>
#include <doctest.h>

#include "support.hpp"

#include <cagewarp/serialize.hpp>

using namespace cagewarp;
using cagewarp::test::Rng;

namespace {

const HexCage kOuter = test::box_cage(Vec3::Zero(), 1.0);
const HexCage kInner = test::box_cage(Vec3::Zero(), 0.4);

double slab_exit(const Aabb& box, const Vec3& o, const Vec3& d) {
  double t = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (d[a] > 0) t = std::min(t, (box.max[a] - o[a]) / d[a]);
    if (d[a] < 0) t = std::min(t, (box.min[a] - o[a]) / d[a]);
  }
  return t;
}

EditSpec translated(const Vec3& t, AdjustmentMode mode) {
  return EditSpec::begin(kOuter, kInner, mode).applied(test::translate(t));
}

EditLayer exact_layer(const EditSpec& e) {
  return {std::make_shared<const EditSpec>(e), nullptr};
}

}  // namespace

TEST_CASE("classification of a translated inner cage") {
  const EditSpec e = translated(Vec3(0.3, 0, 0), AdjustmentMode::Continuous);
  const CagePair& c = e.cages();
  CHECK(classify(c, Vec3(0.5, 0, 0)) == RegionLabel::DeformedInner);
  CHECK(classify(c, Vec3(0.0, 0, 0)) == RegionLabel::DeformedInner);  // overlap
  CHECK(classify(c, Vec3(-0.3, 0, 0)) == RegionLabel::CanonicalInnerOnly);
  CHECK(classify(c, Vec3(0, 0.7, 0)) == RegionLabel::Shell);
  CHECK(classify(c, Vec3(1.2, 0, 0)) == RegionLabel::OutsideOuter);
  CHECK(classify(c, Vec3(0, 0, 1.0)) == RegionLabel::Shell);  // on the outer surface
}

TEST_CASE("identity edits map every point to itself exactly") {
  Rng rng(31);
  for (const AdjustmentMode mode :
       {AdjustmentMode::DiscreteEmpty, AdjustmentMode::DiscreteCopy, AdjustmentMode::Continuous}) {
    const EditSpec e = EditSpec::begin(kOuter, kInner, mode);
    CHECK(e.is_identity());
    const auto scene = test::smooth_scene(16);
    for (int i = 0; i < 2000; ++i) {
      const Vec3 p = rng.vec(-1.3, 1.3);
      CHECK(map_point_exact(e, p) == p);
      const RadianceSample a = query_deformed(*scene, exact_layer(e), p, Vec3::UnitZ());
      const RadianceSample b = scene->query(p, Vec3::UnitZ());
      CHECK(a.density == b.density);
      CHECK(a.color == b.color);
    }
  }
}

TEST_CASE("inner translation maps p to p - t") {
  const Vec3 t(0.3, -0.2, 0.1);
  const EditSpec e = translated(t, AdjustmentMode::Continuous);
  REQUIRE(e.inner_mapping().is_affine());
  Rng rng(32);
  for (int i = 0; i < 500; ++i) {
    const Vec3 p = e.cages().inner_deformed.point_at(rng.vec(0, 1));
    CHECK((phi_inner(e, p) - (p - t)).norm() <= 1e-12);
  }
}

TEST_CASE("affine inner map inverts a sequence of transforms") {
  Rng rng(33);
  EditSpec e = EditSpec::begin(kOuter, kInner, AdjustmentMode::Continuous);
  std::vector<Vec3> canonical;
  for (int i = 0; i < 50; ++i) canonical.push_back(kInner.point_at(rng.vec(0, 1)));
  std::vector<Vec3> tracked = canonical;
  HexCage cage = kInner;
  int applied = 0;
  while (applied < 4) {
    TransformParams p;
    p.translation = rng.vec(-0.1, 0.1);
    p.rotation = rng.vec(-0.4, 0.4);
    p.scale = rng.vec(0.8, 1.1);
    EditSpec next = e;
    try {
      next = e.applied({p, CageTarget::Inner});
    } catch (const ContainmentError&) {
      continue;
    }
    // Oracle: each point follows the homogeneous matrix about the cage center.
    const Mat4 m = build_transform(p);
    for (Vec3& x : tracked) {
      x = cage.center() + (m * Vec3(x - cage.center()).homogeneous()).head<3>();
    }
    cage = transform_cage(cage, p);
    e = next;
    ++applied;
  }
  REQUIRE(e.inner_mapping().is_affine());
  for (std::size_t i = 0; i < tracked.size(); ++i) {
    CHECK((phi_inner(e, tracked[i]) - canonical[i]).norm() <= 1e-10);
  }
}

TEST_CASE("deformed inner cages use the trilinear correspondence") {
  const EditSpec e = EditSpec::begin(kOuter, kInner, AdjustmentMode::Continuous)
                         .applied({CageDeformation{CageHandle::corner(7), Vec3(0.2, 0.1, 0.3)},
                                   CageTarget::Inner});
  REQUIRE_FALSE(e.inner_mapping().is_affine());
  Rng rng(34);
  for (int i = 0; i < 200; ++i) {
    const Vec3 uvw = rng.vec(0, 1);
    const Vec3 p = e.cages().inner_deformed.point_at(uvw);
    CHECK((phi_inner(e, p) - kInner.point_at(uvw)).norm() <= 1e-9);
    const Mat3 fd = finite_difference_jacobian([&](const Vec3& x) { return phi_inner(e, x); },
                                               p, 1e-6);
    CHECK((fd - e.inner_mapping().jacobian(p)).norm() <= 1e-6);
  }
}

TEST_CASE("shell map matches the ray-blend oracle for translations") {
  const Vec3 t(0.25, 0.1, -0.15);
  const EditSpec e = translated(t, AdjustmentMode::Continuous);
  const Aabb inner_box = e.cages().inner_deformed.bounds();
  const Aabb outer_box = kOuter.bounds();
  const Vec3 c = e.cages().inner_deformed.center();
  Rng rng(35);
  int checked = 0;
  while (checked < 500) {
    const Vec3 p = rng.vec(-1, 1);
    const RegionLabel label = classify(e.cages(), p);
    if (label != RegionLabel::Shell && label != RegionLabel::CanonicalInnerOnly) continue;
    const Vec3 d = p - c;
    const double lam_in = slab_exit(inner_box, c, d);
    const double lam_out = slab_exit(outer_box, c, d);
    const double w = std::clamp((1.0 - lam_in) / (lam_out - lam_in), 0.0, 1.0);
    const Vec3 expected = p - (1.0 - w) * t;
    CHECK((phi_shell(e, p) - expected).norm() <= 1e-10);
    ++checked;
  }
}

TEST_CASE("shell map meets its boundary conditions") {
  Rng rng(36);
  const EditSpec e = EditSpec::begin(kOuter, kInner, AdjustmentMode::Continuous)
                         .applied(test::translate(Vec3(0.2, 0, 0.1)))
                         .applied({CageDeformation{CageHandle::edge(3), Vec3(0, 0.15, 0.1)},
                                   CageTarget::Inner});
  const CagePair& c = e.cages();
  for (int i = 0; i < 200; ++i) {
    const int f = rng.integer(0, 5);
    const double s = rng.uniform(), tt = rng.uniform();
    // Outer surface: identity.
    const Vec3 q_out = c.outer.face_point(f, s, tt);
    CHECK((phi_shell(e, q_out) - q_out).norm() <= 1e-9);
    // Inner surface: agrees with the inner map.
    const Vec3 q_in = c.inner_deformed.face_point(f, s, tt);
    CHECK((phi_shell(e, q_in) - phi_inner(e, q_in)).norm() <= 1e-8);
  }
}

TEST_CASE("direction mapping") {
  const Vec3 d = Vec3(0.3, -0.5, 0.8).normalized();
  SUBCASE("identity keeps the direction") {
    const EditSpec e = EditSpec::begin(kOuter, kInner, AdjustmentMode::Continuous);
    CHECK((phi_direction(e, Vec3(0.1, 0, 0), d, 1e-4) - d).norm() < 1e-15);
  }
  SUBCASE("rotation turns the direction back") {
    TransformParams p;
    p.rotation = Vec3(0, 0, 0.3);
    const EditSpec e =
        EditSpec::begin(kOuter, kInner, AdjustmentMode::Continuous).applied({p, CageTarget::Inner});
    const Vec3 expected = rotation_z(-0.3) * d;
    CHECK((phi_direction(e, Vec3(0.05, 0, 0), d, 1e-4) - expected).norm() < 1e-12);
  }
  SUBCASE("translation leaves directions unchanged") {
    const EditSpec e = translated(Vec3(0.3, 0, 0), AdjustmentMode::Continuous);
    CHECK((phi_direction(e, Vec3(0.3, 0, 0), d, 1e-4) - d).norm() < 1e-12);
  }
  SUBCASE("degenerate Jacobian falls back to the input") {
    Mat3 zero = Mat3::Zero();
    CHECK(push_direction(zero, d) == d);
  }
  SUBCASE("outside the outer cage nothing changes") {
    const EditSpec e = translated(Vec3(0.3, 0, 0), AdjustmentMode::Continuous);
    CHECK(phi_direction(e, Vec3(3, 0, 0), d, 1e-4) == d);
  }
}

TEST_CASE("discrete modes only touch the inner cages") {
  const auto scene = test::sphere_scene(Vec3::Zero(), 0.35);
  const Vec3 t(0.5, 0, 0);
  Rng rng(37);
  for (const AdjustmentMode mode : {AdjustmentMode::DiscreteEmpty, AdjustmentMode::DiscreteCopy}) {
    const EditSpec e = translated(t, mode);
    const EditLayer layer = exact_layer(e);
    for (int i = 0; i < 3000; ++i) {
      const Vec3 p = rng.vec(-1.3, 1.3);
      const RegionLabel label = classify(e.cages(), p);
      const RadianceSample got = query_deformed(*scene, layer, p, Vec3::UnitZ());
      const RadianceSample original = scene->query(p, Vec3::UnitZ());
      if (label == RegionLabel::OutsideOuter || label == RegionLabel::Shell) {
        CHECK(got.density == original.density);
      } else if (label == RegionLabel::CanonicalInnerOnly) {
        CHECK(got.density == (mode == AdjustmentMode::DiscreteEmpty ? 0.0 : original.density));
      } else {
        CHECK(got.density == scene->query(p - t, Vec3::UnitZ()).density);
      }
    }
  }
}

TEST_CASE("continuous mode leaves the outside of the outer cage untouched") {
  const auto scene = test::smooth_scene(16);
  const EditSpec e = translated(Vec3(0.2, 0.1, 0), AdjustmentMode::Continuous);
  Rng rng(38);
  for (int i = 0; i < 2000; ++i) {
    const Vec3 p = rng.vec(-2, 2);
    if (classify(e.cages(), p) != RegionLabel::OutsideOuter) continue;
    CHECK(query_deformed(*scene, exact_layer(e), p, Vec3::UnitZ()).density ==
          scene->query(p, Vec3::UnitZ()).density);
  }
}

TEST_CASE("warp grid bake") {
  SUBCASE("two nodes per axis") {
    const EditSpec e = translated(Vec3(0.2, 0, 0), AdjustmentMode::Continuous);
    const auto g = bake_warp_grid(e, 2);
    REQUIRE(g.has_value());
    CHECK(g->dims() == Dims3{2, 2, 2});
    CHECK(g->node_count() == 8);
    for (std::size_t n = 0; n < 8; ++n) {
      const Vec3 node = g->node_position(n & 1, (n >> 1) & 1, (n >> 2) & 1);
      CHECK((node + g->displacement_at_node(n) - map_point_exact(e, node)).norm() < 1e-6);
    }
  }
  SUBCASE("identity bakes to zero displacement") {
    const EditSpec e = EditSpec::begin(kOuter, kInner, AdjustmentMode::Continuous);
    const auto g = bake_warp_grid(e, 12);
    for (std::size_t n = 0; n < g->node_count(); ++n) {
      CHECK(g->displacement_at_node(n) == Vec3::Zero());
    }
    CHECK(g->canonical(Vec3(0.123, -0.4, 0.7)) == Vec3(0.123, -0.4, 0.7));
  }
  SUBCASE("nodes store the exact mapping") {
    const EditSpec e = EditSpec::begin(kOuter, kInner, AdjustmentMode::Continuous)
                           .applied({CageDeformation{CageHandle::corner(2), Vec3(0.1, 0.2, 0)},
                                     CageTarget::Inner});
    const auto g = bake_warp_grid(e, 9);
    for (int k = 0; k < g->dims()[2]; ++k) {
      for (int j = 0; j < g->dims()[1]; ++j) {
        for (int i = 0; i < g->dims()[0]; ++i) {
          const Vec3 node = g->node_position(i, j, k);
          const std::size_t n = g->index(i, j, k);
          CHECK(g->label_at_node(n) == classify(e.cages(), node));
          CHECK((g->canonical(node) - map_point_exact(e, node)).norm() < 1e-6);
        }
      }
    }
  }
  SUBCASE("bake regions follow the mode") {
    const EditSpec cont = translated(Vec3(0.2, 0, 0), AdjustmentMode::Continuous);
    CHECK(bake_warp_grid(cont, 8)->bbox().contains(Vec3(0.99, 0.99, 0.99)));
    const auto disc = bake_warp_grid(cont.with_mode(AdjustmentMode::DiscreteEmpty), 8);
    CHECK_FALSE(disc->bbox().contains(Vec3(0.99, 0.99, 0.99)));
    CHECK(disc->bbox().contains(Vec3(0.55, 0.35, 0.35)));
  }
  SUBCASE("stop requests abort the bake") {
    std::stop_source stop;
    stop.request_stop();
    const EditSpec e = translated(Vec3(0.2, 0, 0), AdjustmentMode::Continuous);
    CHECK_FALSE(bake_warp_grid(e, 16, stop.get_token()).has_value());
  }
  SUBCASE("resolution below two is rejected") {
    CHECK_THROWS_AS(bake_warp_grid(translated(Vec3(0.2, 0, 0), AdjustmentMode::Continuous), 1),
                    ValidationError);
  }
  SUBCASE("diagnostic export layout") {
    const auto g = bake_warp_grid(translated(Vec3(0.2, 0, 0), AdjustmentMode::Continuous), 5);
    const std::string bytes = g->serialize();
    const auto nl = bytes.find('\n');
    REQUIRE(nl != std::string::npos);
    const json header = json::parse(bytes.substr(0, nl));
    CHECK(header["encoding"] == "f32le");
    CHECK(bytes.size() - nl - 1 == 13 * g->node_count());
  }
}

TEST_CASE("grid lookups converge to the exact mapping") {
  const EditSpec e = translated(Vec3(0.2, 0.1, 0), AdjustmentMode::Continuous);
  Rng rng(39);
  std::vector<Vec3> probes;
  for (int i = 0; i < 400; ++i) probes.push_back(rng.vec(-1, 1));
  double previous = std::numeric_limits<double>::infinity();
  for (int r : {9, 17, 33}) {
    const auto g = bake_warp_grid(e, r);
    double worst = 0.0;
    for (const Vec3& p : probes) {
      worst = std::max(worst, (g->canonical(p) - map_point_exact(e, p)).norm());
    }
    CHECK(worst < previous);
    previous = worst;
  }
}

TEST_CASE("composition applies the newest edit first") {
  const Vec3 t1(0.3, 0, 0), t2(0, 0.25, 0);
  const EditSpec first = translated(t1, AdjustmentMode::DiscreteEmpty);
  const HexCage outer2 = test::box_cage(Vec3(0.3, 0, 0), 1.0);
  const HexCage inner2 = first.cages().inner_deformed;
  const EditSpec second = EditSpec::begin(outer2, inner2, AdjustmentMode::DiscreteEmpty)
                              .applied(test::translate(t2));
  const std::vector<EditLayer> stack{exact_layer(first), exact_layer(second)};
  Rng rng(40);
  for (int i = 0; i < 200; ++i) {
    const Vec3 p = second.cages().inner_deformed.point_at(rng.vec(0.05, 0.95));
    const StageResult r = compose_edits(stack, p, Vec3::UnitZ());
    CHECK_FALSE(r.fill_override.has_value());
    // Sequential oracle: undo the second edit, then the first.
    const Vec3 expected = map_point_exact(first, map_point_exact(second, p));
    CHECK((r.point - expected).norm() < 1e-12);
    CHECK((r.point - (p - t1 - t2)).norm() < 1e-12);
  }
  // Space vacated by the second edit is empty and stops the walk.
  const Vec3 vacated = inner2.center() - Vec3(0, 0.35, 0);
  REQUIRE(classify(second.cages(), vacated) == RegionLabel::CanonicalInnerOnly);
  CHECK(compose_edits(stack, vacated, Vec3::UnitZ()).fill_override == Fill::Empty);

  const std::vector<EditLayer> deep(3, exact_layer(first));
  CHECK_THROWS_AS(compose_edits(deep, Vec3::Zero(), Vec3::UnitZ(), 2), ValidationError);
  CHECK_THROWS_AS(DeformedField(test::smooth_scene(8), deep, 2), ValidationError);
}

TEST_CASE("copy fill keeps the original and continues through older edits") {
  const EditSpec older = translated(Vec3(0.3, 0, 0), AdjustmentMode::Continuous);
  const EditSpec newer = EditSpec::begin(kOuter, kInner, AdjustmentMode::DiscreteCopy)
                             .applied(test::translate(Vec3(0, 0.5, 0)));
  const std::vector<EditLayer> stack{exact_layer(older), exact_layer(newer)};
  const Vec3 p(0.35, -0.35, 0);
  REQUIRE(classify(newer.cages(), p) == RegionLabel::CanonicalInnerOnly);
  const StageResult r = compose_edits(stack, p, Vec3::UnitZ());
  CHECK(r.fill_override == Fill::Original);
  CHECK((r.point - map_point_exact(older, p)).norm() < 1e-15);
}

TEST_CASE("grid and exact layers agree on a smooth scene") {
  const auto scene = test::smooth_scene(24);
  const EditSpec e = translated(Vec3(0.15, 0, 0.05), AdjustmentMode::Continuous);
  const auto spec = std::make_shared<const EditSpec>(e);
  const auto grid = std::make_shared<const WarpGrid>(*bake_warp_grid(e, 48));
  DeformedField exact(scene, {EditLayer{spec, nullptr}});
  DeformedField baked(scene, {EditLayer{spec, grid}});
  Rng rng(41);
  for (int i = 0; i < 500; ++i) {
    const Vec3 p = rng.vec(-1, 1);
    CHECK(std::abs(exact.query(p, Vec3::UnitZ()).density -
                   baked.query(p, Vec3::UnitZ()).density) < 0.05);
  }
}

TEST_CASE("mode strings") {
  for (const AdjustmentMode m :
       {AdjustmentMode::DiscreteEmpty, AdjustmentMode::DiscreteCopy, AdjustmentMode::Continuous}) {
    CHECK(parse_mode(to_string(m)) == m);
  }
  CHECK_THROWS_AS(parse_mode("smooth"), ValidationError);
}
