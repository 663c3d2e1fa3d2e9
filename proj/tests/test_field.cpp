// Copyright The cagewarp Authors.
// SPDX-License-Identifier: Apache-2.0
#include <cagewarp/error.hpp>
#include <cagewarp/field.hpp>
#include <cagewarp/serialize.hpp>

#include <doctest.h>

#include "support.hpp"

#include <filesystem>
#include <fstream>

using namespace cagewarp;
using cagewarp::test::Rng;

namespace {

GridField ramp_grid(const Dims3& dims) {
  const std::size_t n = static_cast<std::size_t>(dims[0] * dims[1] * dims[2]);
  std::vector<float> dens(n), cols(3 * n);
  for (std::size_t i = 0; i < n; ++i) {
    dens[i] = static_cast<float>(i % 7) + 0.25f;
    cols[3 * i] = static_cast<float>(i % 3) / 2.0f;
    cols[3 * i + 1] = static_cast<float>(i % 5) / 4.0f;
    cols[3 * i + 2] = 0.5f;
  }
  return GridField::create({Vec3(-1, -2, 0), Vec3(1, 2, 3)}, dims, dens, cols);
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("cagewarp_field_" + name);
}

}  // namespace

TEST_CASE("cell center of a 2x2x2 grid is the mean of its corners") {
  std::vector<float> dens{0, 1, 2, 3, 4, 5, 6, 7};
  std::vector<float> cols(24, 0.0f);
  for (int i = 0; i < 8; ++i) cols[3 * static_cast<std::size_t>(i)] = static_cast<float>(i) / 8.0f;
  const GridField g = GridField::create({Vec3::Zero(), Vec3::Ones()}, {2, 2, 2}, dens, cols);
  const RadianceSample s = g.query(Vec3::Constant(0.5));
  CHECK(s.density == doctest::Approx(3.5).epsilon(1e-15));
  CHECK(s.color.x() == doctest::Approx(3.5 / 8.0).epsilon(1e-15));
}

TEST_CASE("lookup matches an explicit trilinear oracle") {
  const GridField g = ramp_grid({4, 3, 5});
  Rng rng(11);
  const Vec3 h = g.spacing();
  for (int trial = 0; trial < 500; ++trial) {
    const Vec3 p = g.bbox().min + rng.vec(0, 1).cwiseProduct(g.bbox().extent());
    // Independent oracle: weighted sum over the 8 surrounding nodes.
    const Vec3 u = (p - g.bbox().min).cwiseQuotient(h);
    int c[3];
    double f[3];
    for (int a = 0; a < 3; ++a) {
      c[a] = std::min(static_cast<int>(u[a]), g.dims()[static_cast<std::size_t>(a)] - 2);
      f[a] = u[a] - c[a];
    }
    double expected = 0.0;
    for (int k = 0; k < 8; ++k) {
      const int di = k & 1, dj = (k >> 1) & 1, dk = (k >> 2) & 1;
      const double w = (di ? f[0] : 1 - f[0]) * (dj ? f[1] : 1 - f[1]) * (dk ? f[2] : 1 - f[2]);
      expected += w * g.densities()[g.index(c[0] + di, c[1] + dj, c[2] + dk)];
    }
    CHECK(g.query(p).density == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("lookup at a node returns the stored value exactly") {
  const GridField g = ramp_grid({4, 3, 5});
  for (int k = 0; k < 5; ++k) {
    for (int j = 0; j < 3; ++j) {
      for (int i = 0; i < 4; ++i) {
        const std::size_t n = g.index(i, j, k);
        const RadianceSample s = g.query(g.node_position(i, j, k));
        CHECK(s.density == static_cast<double>(g.densities()[n]));
        CHECK(s.color.y() == static_cast<double>(g.colors()[3 * n + 1]));
      }
    }
  }
}

TEST_CASE("queries outside the box are empty") {
  const GridField g = ramp_grid({3, 3, 3});
  CHECK(g.query(Vec3(5, 0, 1)).density == 0.0);
  CHECK(g.query(Vec3(0, 0, -1e-9)).color == Rgb::Zero());
}

TEST_CASE("grid creation validates its inputs") {
  const Aabb box{Vec3::Zero(), Vec3::Ones()};
  SUBCASE("dims below two") {
    try {
      GridField::create(box, {1, 2, 2}, std::vector<float>(4), std::vector<float>(12));
      FAIL("expected LoadError");
    } catch (const LoadError& e) {
      CHECK(e.field() == "dims");
    }
  }
  SUBCASE("inverted box") {
    CHECK_THROWS_AS(GridField::create({Vec3::Ones(), Vec3::Zero()}, {2, 2, 2},
                                      std::vector<float>(8), std::vector<float>(24)),
                    LoadError);
  }
  SUBCASE("array length") {
    try {
      GridField::create(box, {2, 2, 2}, std::vector<float>(7), std::vector<float>(24));
      FAIL("expected LoadError");
    } catch (const LoadError& e) {
      CHECK(e.field() == "density");
    }
  }
  SUBCASE("negative density") {
    std::vector<float> dens(8, 1.0f);
    dens[3] = -1.0f;
    CHECK_THROWS_AS(GridField::create(box, {2, 2, 2}, dens, std::vector<float>(24)), LoadError);
  }
}

TEST_CASE("grid file round trip is byte-identical") {
  const GridField g = ramp_grid({4, 3, 5});
  const std::string bytes = serialize_grid_field(g);
  const GridField back = parse_grid_field(bytes);
  CHECK(serialize_grid_field(back) == bytes);
  CHECK(back.dims() == g.dims());

  const auto path = temp_file("roundtrip.grid");
  save_grid_field(g, path);
  CHECK(serialize_grid_field(load_grid_field(path)) == bytes);
  std::filesystem::remove(path);
}

TEST_CASE("payload length mismatch names the payload") {
  std::string bytes = serialize_grid_field(ramp_grid({2, 2, 2}));
  bytes.pop_back();
  try {
    parse_grid_field(bytes);
    FAIL("expected LoadError");
  } catch (const LoadError& e) {
    CHECK(e.field() == "payload");
  }
}

TEST_CASE("header errors name the offending key") {
  auto field_of = [](const std::string& bytes) {
    try {
      parse_grid_field(bytes);
    } catch (const LoadError& e) {
      return e.field();
    }
    return std::string("none");
  };
  CHECK(field_of("{\"dims\":[2,2,2]}") == "header");
  CHECK(field_of("{\"dims\":[2,2,2],\"encoding\":\"f16\"}\n") == "encoding");
  CHECK(field_of("{\"encoding\":\"f32le\",\"dims\":[2,2],\"bbox_min\":[0,0,0],"
                 "\"bbox_max\":[1,1,1]}\n") == "dims");
  CHECK(field_of("{\"encoding\":\"f32le\",\"dims\":[2,2,2],\"bbox_max\":[1,1,1]}\n") ==
        "bbox_min");
  CHECK(field_of("not json\n") == "header");
}

TEST_CASE("voxel list conversion") {
  const std::string text =
      "# two voxels\n"
      "dims 2 2 3\n"
      "bbox_min 0 0 0\n"
      "bbox_max 1 1 2\n"
      "0 0 0 1.5 1 0 0\n"
      "1 1 2 2.0 0 0 1\n";
  const GridField g = parse_voxel_list(text);
  CHECK(g.dims() == Dims3{2, 2, 3});
  CHECK(g.query(Vec3(0, 0, 0)).density == 1.5);
  CHECK(g.query(Vec3(1, 1, 2)).color == Rgb(0, 0, 1));
  CHECK(g.query(Vec3(1, 0, 0)).density == 0.0);
  CHECK_THROWS_AS(parse_voxel_list("dims 2 2 2\nbbox_min 0 0 0\nbbox_max 1 1 1\n5 0 0 1 1 1 1\n"),
                  LoadError);
  CHECK_THROWS_AS(parse_voxel_list("bbox_min 0 0 0\n"), LoadError);
}

TEST_CASE("trilinear density is Lipschitz with the reported bound") {
  const auto scene = test::smooth_scene(24);
  const GridField& g = *scene->grid();
  const double lip = g.density_lipschitz();
  CHECK(lip > 0.0);
  Rng rng(3);
  for (int i = 0; i < 2000; ++i) {
    const Vec3 a = rng.vec(-1, 1);
    const Vec3 b = (a + rng.vec(-0.1, 0.1)).cwiseMax(-1.0).cwiseMin(1.0);
    CHECK(std::abs(g.query(a).density - g.query(b).density) <= lip * (a - b).norm() + 1e-12);
  }
}

TEST_CASE("analytic shapes") {
  AnalyticField f;
  f.shape = TwoSpheresShape{{Vec3(-1, 0, 0), 0.5}, {Vec3(1, 0, 0), 0.5}};
  CHECK(f.query(Vec3(-1, 0, 0)).density == f.density);
  CHECK(f.query(Vec3(-1, 0, 0)).color == f.color);
  CHECK(f.query(Vec3(1, 0.2, 0)).color == f.secondary_color);
  CHECK(f.query(Vec3(0, 0, 0)).density == 0.0);
  CHECK(f.kind_name() == "two-spheres");

  AnalyticField floor;
  floor.shape = CheckerFloorSphereShape{{Vec3(-2, -1, -2), Vec3(2, -0.9, 2)}, 0.5,
                                        {Vec3(0, -0.4, 0), 0.5}};
  const Rgb a = floor.query(Vec3(0.25, -0.95, 0.25)).color;
  const Rgb b = floor.query(Vec3(0.75, -0.95, 0.25)).color;
  CHECK(a != b);
  CHECK(floor.query(Vec3(0, 0, 0)).density == floor.density);
}

TEST_CASE("scene loading dispatches on content") {
  const auto json_path = temp_file("sphere.json");
  {
    std::ofstream out(json_path);
    out << R"({"kind":"sphere","center":[0,0,0],"radius":0.5,"density":3})";
  }
  const RadianceField f = load_scene(json_path);
  REQUIRE(f.analytic() != nullptr);
  CHECK(f.query(Vec3::Zero(), Vec3::UnitZ()).density == 3.0);
  std::filesystem::remove(json_path);

  const auto grid_path = temp_file("scene.grid");
  save_grid_field(ramp_grid({2, 2, 2}), grid_path);
  CHECK(load_scene(grid_path).grid() != nullptr);
  std::filesystem::remove(grid_path);

  CHECK_THROWS_AS(load_scene(temp_file("missing")), IoError);

  AnalyticField sphere;
  sphere.shape = SphereShape{Vec3(1, 2, 3), 0.25};
  const AnalyticField back = analytic_from_json(analytic_to_json(sphere));
  CHECK(analytic_to_json(back) == analytic_to_json(sphere));
  CHECK_THROWS_AS(analytic_from_json(json{{"kind", "torus"}}), LoadError);
}
