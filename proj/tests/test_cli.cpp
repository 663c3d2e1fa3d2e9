// Copyright The cagewarp Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Drives the command-line tool as a subprocess.
#include <cagewarp/serialize.hpp>

#include <doctest.h>

#include "support.hpp"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace cagewarp;
namespace fs = std::filesystem;

namespace {

fs::path work_dir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "cagewarp_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

fs::path write_file(const std::string& name, const std::string& text) {
  const fs::path p = work_dir() / name;
  std::ofstream(p, std::ios::binary) << text;
  return p;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run(const std::string& args, const std::string& stdout_name = "") {
  const std::string sink =
      stdout_name.empty() ? "/dev/null" : (work_dir() / stdout_name).string();
  const std::string cmd =
      std::string(CAGEWARP_CLI_PATH) + " " + args + " > " + sink + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

struct Fixture {
  fs::path sphere = write_file("sphere.json",
                               R"({"kind":"sphere","center":[0,0,0],"radius":0.5,"density":5})");
  fs::path cages = write_file("cages.json", cage_setup_to_json({test::box_cage(Vec3::Zero(), 0.8),
                                                                test::box_cage(Vec3::Zero(), 0.35)})
                                                .dump());
  fs::path camera = write_file(
      "camera.json",
      camera_to_json(Camera::look_at(Vec3(0, 0, 4), Vec3::Zero(), Vec3::UnitY(), 0.6911112, 32, 32))
          .dump());
  fs::path move = write_file("move.json", R"([{"transform":{"translation":[0.15,0,0]}}])");

  std::string base(const fs::path& scene) const {
    return "--scene " + q(scene) + " --camera " + q(camera) + " --samples 24 --seed 3";
  }
};

}  // namespace

TEST_CASE("usage errors exit with 1") {
  CHECK(run("") == 1);
  CHECK(run("render --no-such-flag") == 1);
  CHECK(run("ablate --scene x") == 1);
}

TEST_CASE("failures use distinct exit codes and leave no output") {
  const Fixture f;
  SUBCASE("missing scene is an I/O error") {
    const fs::path out = work_dir() / "out_missing";
    CHECK(run("render --scene " + q(work_dir() / "nope.json") + " --out " + q(out)) == 4);
    CHECK_FALSE(fs::exists(out));
  }
  SUBCASE("malformed script is a parse error") {
    const fs::path out = work_dir() / "out_parse";
    const fs::path bad = write_file("bad.json", "[{\"transform\":");
    CHECK(run("render " + f.base(f.sphere) + " --cages " + q(f.cages) + " --script " + q(bad) +
              " --out " + q(out)) == 2);
    CHECK_FALSE(fs::exists(out));
  }
  SUBCASE("unknown scene kind is a parse error") {
    const fs::path torus = write_file("torus.json", R"({"kind":"torus"})");
    CHECK(run("render " + f.base(torus) + " --out " + q(work_dir() / "out_torus")) == 2);
  }
  SUBCASE("an edit that leaves the outer cage is a validation error") {
    const fs::path out = work_dir() / "out_validation";
    const fs::path far = write_file("far.json", R"([{"transform":{"translation":[0.9,0,0]}}])");
    CHECK(run("render " + f.base(f.sphere) + " --cages " + q(f.cages) + " --script " + q(far) +
              " --out " + q(out)) == 3);
    CHECK_FALSE(fs::exists(out));
  }
  SUBCASE("bad mode is a validation error") {
    CHECK(run("render " + f.base(f.sphere) + " --cages " + q(f.cages) + " --script " +
              q(f.move) + " --mode smooth --out " + q(work_dir() / "out_mode")) == 3);
  }
}

TEST_CASE("an identity script renders exactly like no script") {
  const Fixture f;
  const fs::path plain = work_dir() / "plain", ident = work_dir() / "ident";
  const fs::path script = write_file("identity.json", R"([{"transform":{}}])");
  REQUIRE(run("render --raw " + f.base(f.sphere) + " --out " + q(plain)) == 0);
  REQUIRE(run("render --raw " + f.base(f.sphere) + " --cages " + q(f.cages) + " --script " +
              q(script) + " --warp-resolution 32 --out " + q(ident)) == 0);
  const Image a = decode_raw_f32(read_file(plain / "frame_000.f32"));
  const Image b = decode_raw_f32(read_file(ident / "frame_000.f32"));
  CHECK(image_metrics(a, b).mean_abs_diff == 0.0);
  CHECK(read_file(plain / "frame_000.png") == read_file(ident / "frame_000.png"));
}

TEST_CASE("render outputs are deterministic") {
  const Fixture f;
  const fs::path a = work_dir() / "det_a", b = work_dir() / "det_b";
  const std::string args = "render --raw --oracle " + f.base(f.sphere) + " --cages " +
                           q(f.cages) + " --script " + q(f.move) + " --warp-resolution 24";
  REQUIRE(run(args + " --out " + q(a)) == 0);
  REQUIRE(run(args + " --out " + q(b)) == 0);
  for (const char* name : {"frame_000.png", "frame_000.f32", "metrics.json"}) {
    CHECK(read_file(a / name) == read_file(b / name));
  }
  const json metrics = json::parse(read_file(a / "metrics.json"));
  CHECK(metrics["frames"][0]["max_conservation_error"].get<double>() <= 1e-12);
  REQUIRE(metrics["edits"].size() == 1);
  CHECK(metrics["edits"][0].contains("discontinuity_energy"));
  CHECK(metrics["edits"][0]["grid_vs_exact_error"].is_number());
}

TEST_CASE("a coarser warp grid reports a larger grid-vs-exact error") {
  const Fixture f;
  const auto scene = test::smooth_scene(48);
  const fs::path grid = work_dir() / "smooth.grid";
  save_grid_field(*scene->grid(), grid);
  const fs::path script = write_file("smooth_move.json",
                                     R"([{"transform":{"translation":[0.12,0.05,0],
                                         "rotation":[0,0,0.2]}}])");
  auto error_at = [&](int r) {
    const fs::path out = work_dir() / ("res_" + std::to_string(r));
    REQUIRE(run("render --oracle " + f.base(grid) + " --cages " + q(f.cages) + " --script " +
                q(script) + " --warp-resolution " + std::to_string(r) + " --out " + q(out)) == 0);
    return json::parse(read_file(out / "metrics.json"))["edits"][0]["grid_vs_exact_error"]
        .get<double>();
  };
  const double coarse = error_at(64);
  const double fine = error_at(256);
  CHECK(coarse > fine);
}

TEST_CASE("ablation with a single value writes one row") {
  const Fixture f;
  const fs::path out = work_dir() / "ablate";
  REQUIRE(run("ablate --sweep resolution --values 16 " + f.base(f.sphere) + " --cages " +
              q(f.cages) + " --script " + q(f.move) + " --out " + q(out)) == 0);
  std::stringstream csv(read_file(out / "ablation.csv"));
  std::vector<std::string> lines;
  for (std::string line; std::getline(csv, line);) lines.push_back(line);
  REQUIRE(lines.size() == 2);
  CHECK(lines[0] == "sweep,value,discontinuity_energy,grid_vs_exact_error,bake_ms,render_ms");
  CHECK(lines[1].rfind("resolution,16,", 0) == 0);

  CHECK(run("ablate --sweep resolution --values 1.5 " + f.base(f.sphere) + " --cages " +
            q(f.cages) + " --script " + q(f.move)) == 3);
  CHECK(run("ablate --sweep sideways --values 2 " + f.base(f.sphere) + " --cages " + q(f.cages) +
            " --script " + q(f.move)) == 3);
}

TEST_CASE("voxel lists convert to grid files") {
  const fs::path in = write_file("voxels.txt",
                                 "dims 3 3 3\nbbox_min -1 -1 -1\nbbox_max 1 1 1\n"
                                 "1 1 1 4.0 0.2 0.4 0.6\n");
  const fs::path out = work_dir() / "voxels.grid";
  REQUIRE(run("convert " + q(in) + " --out " + q(out)) == 0);
  const GridField g = load_grid_field(out);
  CHECK(g.query(Vec3::Zero()).density == 4.0);
  CHECK(run("convert " + q(write_file("broken.txt", "dims 2 2\n")) + " --out " +
            q(work_dir() / "broken.grid")) == 2);
}

TEST_CASE("replay reproduces the session and final frame") {
  const Fixture f;
  const std::string log =
      R"({"type":"hello","protocol":"cagewarp","version":1})"
      "\n"
      R"({"id":1,"kind":"load_scene","payload":{"path":"sphere.json"}})"
      "\n" +
      json{{"id", 2}, {"kind", "set_cages"}, {"payload", json::parse(read_file(f.cages))}}.dump() +
      "\n"
      R"({"id":3,"kind":"begin_edit","payload":{"mode":"discrete-copy"}})"
      "\n"
      R"({"id":4,"kind":"manipulate","payload":{"transform":{"translation":[0.1,0.1,0]}}})"
      "\n"
      R"({"id":5,"kind":"commit"})"
      "\n" +
      json{{"id", 6},
           {"kind", "render_request"},
           {"payload", {{"camera", json::parse(read_file(f.camera))}}}}
          .dump() +
      "\n";
  const fs::path script = write_file("commands.log", log);
  const fs::path a = work_dir() / "replay_a", b = work_dir() / "replay_b";
  const std::string args = "replay --warp-resolution 24 --samples 16 --scene-root " +
                           q(work_dir()) + " --script " + q(script);
  REQUIRE(run(args + " --out " + q(a)) == 0);
  REQUIRE(run(args + " --out " + q(b)) == 0);
  CHECK(read_file(a / "session.json") == read_file(b / "session.json"));
  CHECK(read_file(a / "final_frame.json") == read_file(b / "final_frame.json"));
  const json session = json::parse(read_file(a / "session.json"));
  CHECK(session["phase"] == "SettingCages");
  CHECK(session["committed"].size() == 1);
  CHECK(json::parse(read_file(a / "final_frame.json"))["request_id"] == 6);
}
