// Copyright The cagewarp Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Headless front end: render, ablate, convert, replay and serve.

#include <cagewarp/ablation.hpp>
#include <cagewarp/error.hpp>
#include <cagewarp/protocol.hpp>
#include <cagewarp/serialize.hpp>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace cagewarp;

namespace {

enum Exit { kOk = 0, kUsage = 1, kParse = 2, kValidation = 3, kIo = 4, kCompute = 5 };

struct Common {
  std::string scene;
  std::string cages;
  std::string script;
  std::string camera;
  std::string mode = "continuous";
  int warp_resolution = 256;
  int samples = 128;
  std::uint64_t seed = 0;
  bool oracle = false;
  bool raw = false;
  bool overlay = false;
  std::string out;
};

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

// Output files are staged in memory and written only once everything
// succeeded, so a failed run leaves nothing behind.
struct Outputs {
  std::vector<std::pair<std::string, std::string>> files;

  void add(std::string name, std::string bytes) {
    files.emplace_back(std::move(name), std::move(bytes));
  }
  void commit(const fs::path& dir) const {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
    for (const auto& [name, bytes] : files) write_text(dir / name, bytes);
  }
};

FieldPtr load_field(const std::string& path) {
  if (path.empty()) throw ValidationError("--scene is required");
  return std::make_shared<const RadianceField>(load_scene(path));
}

RenderSettings render_settings(const Common& c) {
  RenderSettings s;
  s.samples_per_ray = c.samples;
  s.seed = c.seed;
  s.validate();
  return s;
}

std::vector<Camera> load_cameras(const Common& c, const RadianceField& field) {
  if (!c.camera.empty()) return cameras_from_json(read_json_file(c.camera));
  const Vec3 target = field.bounds().center();
  return {Camera::look_at(target + Vec3(0, 0, 4), target, Vec3(0, 1, 0), 0.6911112,
                          200, 200)};
}

std::vector<EditSpec> load_edits(const Common& c) {
  if (c.script.empty()) return {};
  if (c.cages.empty()) throw ValidationError("--script needs --cages");
  const CageSetup cages = cage_setup_from_json(read_json_file(c.cages));
  return edits_from_script(read_json_file(c.script), cages, parse_mode(c.mode));
}

std::vector<EditLayer> bake_layers(const std::vector<EditSpec>& edits, int resolution) {
  std::vector<EditLayer> layers;
  for (const EditSpec& e : edits) {
    EditLayer layer{std::make_shared<const EditSpec>(e), nullptr};
    if (resolution > 0) {
      layer.grid = std::make_shared<const WarpGrid>(*bake_warp_grid(e, resolution));
    }
    layers.push_back(std::move(layer));
  }
  return layers;
}

std::string frame_name(std::size_t i, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "frame_%03zu.%s", i, ext);
  return buf;
}

int run_render(const Common& c) {
  if (c.out.empty()) throw ValidationError("--out is required");
  const FieldPtr field = load_field(c.scene);
  const auto edits = load_edits(c);
  const auto cameras = load_cameras(c, *field);
  const RenderSettings settings = render_settings(c);
  if (c.warp_resolution != 0 && c.warp_resolution < 2) {
    throw ValidationError("--warp-resolution must be 0 or at least 2");
  }
  const auto layers = bake_layers(edits, c.warp_resolution);
  const DeformedField deformed(field, layers);

  Outputs outputs;
  json metrics;
  metrics["frames"] = json::array();
  for (std::size_t i = 0; i < cameras.size(); ++i) {
    auto out = render(deformed.as_query(), cameras[i], settings);
    if (c.overlay && !layers.empty()) {
      const CagePair& pair = layers.back().edit->cages();
      draw_cage_wireframe(out->image, cameras[i], pair.outer, Rgb(0.1, 0.3, 0.9));
      draw_cage_wireframe(out->image, cameras[i], pair.inner_deformed, Rgb(1.0, 0.55, 0.0));
    }
    outputs.add(frame_name(i, "png"), encode_png(out->image));
    if (c.raw) outputs.add(frame_name(i, "f32"), encode_raw_f32(out->image));
    metrics["frames"].push_back({{"file", frame_name(i, "png")},
                                 {"max_conservation_error", out->max_conservation_error},
                                 {"transmittance_monotone", out->transmittance_monotone}});
  }
  if (c.oracle) {
    json per_edit = json::array();
    const double eps = 1e-4 * field->bounds().diameter();
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const EditLayer& layer = layers[i];
      const EditLayer exact{layer.edit, nullptr};
      const auto probes = edit_surface_probes(*layer.edit, 16, 7);
      const FieldQuery q = [&](const Vec3& p, const Vec3& d) {
        return query_deformed(*field, exact, p, d);
      };
      json row = {{"edit", i},
                  {"mode", std::string(to_string(layer.edit->mode()))},
                  {"discontinuity_energy", discontinuity_energy(q, probes, eps)}};
      row["grid_vs_exact_error"] =
          layer.grid ? json(grid_vs_exact_error(field, *layer.edit, layer.grid, 10000, 7))
                     : json(nullptr);
      per_edit.push_back(row);
    }
    metrics["edits"] = per_edit;
  }
  metrics["warp_resolution"] = c.warp_resolution;
  metrics["samples_per_ray"] = c.samples;
  metrics["seed"] = c.seed;
  outputs.add("metrics.json", metrics.dump(2) + "\n");
  outputs.commit(c.out);
  std::cout << metrics.dump(2) << "\n";
  return kOk;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw ValidationError("--values: '" + item + "' is not a number");
    }
  }
  if (out.empty()) throw ValidationError("--values: sweep is empty");
  return out;
}

int run_ablate(const Common& c, const std::string& sweep, const std::string& values) {
  const FieldPtr field = load_field(c.scene);
  const auto edits = load_edits(c);
  if (edits.size() != 1) throw ValidationError("ablate needs a script with exactly one edit");
  AblationOptions opts;
  opts.render.samples_per_ray = c.samples;
  opts.render.seed = c.seed;
  opts.render.validate();
  opts.camera = load_cameras(c, *field).front();
  std::vector<AblationRow> rows;
  const auto list = parse_list(values);
  if (sweep == "outer-scale") {
    opts.warp_resolution = c.warp_resolution;
    rows = ablate_outer_scale(field, edits[0], list, opts);
  } else if (sweep == "resolution") {
    std::vector<int> res;
    for (double v : list) {
      if (v != std::floor(v) || v < 2) throw ValidationError("resolutions must be integers >= 2");
      res.push_back(static_cast<int>(v));
    }
    rows = ablate_resolution(field, edits[0], res, opts);
  } else {
    throw ValidationError("--sweep must be outer-scale or resolution");
  }
  const std::string csv = ablation_csv(rows);
  if (!c.out.empty()) {
    Outputs outputs;
    outputs.add("ablation.csv", csv);
    outputs.commit(c.out);
  }
  std::cout << csv;
  return kOk;
}

int run_convert(const std::string& in, const std::string& out) {
  const GridField grid = parse_voxel_list(read_text(in));
  write_text(out, serialize_grid_field(grid));
  return kOk;
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::vector<std::string> lines;
  std::stringstream ss(read_text(path));
  for (std::string line; std::getline(ss, line);) lines.push_back(line);
  return lines;
}

int run_replay(const Common& c, const std::string& scene_root) {
  if (c.script.empty()) throw ValidationError("--script (command log) is required");
  if (c.out.empty()) throw ValidationError("--out is required");
  ProtocolOptions opts;
  opts.scene_root = scene_root;
  opts.settings.warp_resolution = c.warp_resolution;
  opts.settings.render.samples_per_ray = c.samples;
  opts.settings.render.seed = c.seed;
  std::optional<json> last_frame;
  int errors = 0;
  const json save = replay_commands(read_lines(c.script), opts, [&](const json& m) {
    if (m.value("type", "") == "frame") last_frame = m;
    if (m.value("type", "") == "ack" && !m.value("ok", true)) {
      ++errors;
      spdlog::warn("command {} rejected: {}", m["id"].dump(), m.value("error", ""));
    }
  });
  Outputs outputs;
  outputs.add("session.json", save.dump(2) + "\n");
  if (last_frame) outputs.add("final_frame.json", last_frame->dump() + "\n");
  outputs.commit(c.out);
  std::cout << json{{"rejected_commands", errors},
                    {"revision", save["revision"]},
                    {"final_frame", last_frame.has_value()}}
                   .dump()
            << "\n";
  return kOk;
}

int run_serve(const Common& c, const std::string& host, int port,
              const std::string& scene_root) {
  ProtocolOptions opts;
  opts.scene_root = scene_root;
  opts.settings.warp_resolution = c.warp_resolution;
  opts.settings.render.samples_per_ray = c.samples;
  opts.settings.render.seed = c.seed;
  Server server(host, port, opts);
  const int bound = server.start();
  std::cout << json{{"listening", host + ":" + std::to_string(bound)}}.dump() << std::endl;
  server.join();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cagewarp: cage-based deformation of radiance fields"};
  app.require_subcommand(1);
  Common c;
  std::string level = "warn";
  app.add_option("--log-level", level, "trace|debug|info|warn|error|off");

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--scene", c.scene, "Scene file (grid field or analytic JSON)");
    sub->add_option("--cages", c.cages, "Cage JSON {outer, inner}");
    sub->add_option("--script", c.script, "Edit script (render/ablate) or command log (replay)");
    sub->add_option("--mode", c.mode, "discrete-empty | discrete-copy | continuous");
    sub->add_option("--warp-resolution", c.warp_resolution, "Warp grid nodes on the longest axis; 0 = exact");
    sub->add_option("--samples", c.samples, "Samples per ray");
    sub->add_option("--seed", c.seed, "Jitter seed");
    sub->add_option("--out", c.out, "Output directory");
  };

  auto* render_cmd = app.add_subcommand("render", "Render an edited scene");
  add_common(render_cmd);
  render_cmd->add_option("--camera", c.camera, "Camera JSON or transforms.json-style file");
  render_cmd->add_flag("--oracle", c.oracle, "Report discontinuity and grid-vs-exact error");
  render_cmd->add_flag("--raw", c.raw, "Also write raw f32le images");
  render_cmd->add_flag("--overlay", c.overlay, "Draw the last edit's cages");

  std::string sweep, values;
  auto* ablate_cmd = app.add_subcommand("ablate", "Outer-scale or resolution sweep");
  add_common(ablate_cmd);
  ablate_cmd->add_option("--camera", c.camera, "Camera used for the timed render");
  ablate_cmd->add_option("--sweep", sweep, "outer-scale | resolution")->required();
  ablate_cmd->add_option("--values", values, "Comma-separated sweep values")->required();

  std::string convert_in, convert_out;
  auto* convert_cmd = app.add_subcommand("convert", "Voxel list to grid field file");
  convert_cmd->add_option("input", convert_in, "Voxel list")->required();
  convert_cmd->add_option("--out", convert_out, "Grid field file")->required();

  std::string scene_root = ".";
  auto* replay_cmd = app.add_subcommand("replay", "Replay a recorded command log");
  add_common(replay_cmd);
  replay_cmd->add_option("--scene-root", scene_root, "Directory scene paths resolve against");

  std::string host = "127.0.0.1";
  int port = 8765;
  auto* serve_cmd = app.add_subcommand("serve", "Run the editing service");
  add_common(serve_cmd);
  serve_cmd->add_option("--host", host);
  serve_cmd->add_option("--port", port);
  serve_cmd->add_option("--scene-root", scene_root, "Directory scene paths resolve against");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }
  spdlog::set_level(spdlog::level::from_str(level));

  try {
    if (*render_cmd) return run_render(c);
    if (*ablate_cmd) return run_ablate(c, sweep, values);
    if (*convert_cmd) return run_convert(convert_in, convert_out);
    if (*replay_cmd) return run_replay(c, scene_root);
    if (*serve_cmd) return run_serve(c, host, port, scene_root);
  } catch (const LoadError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kParse;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kParse;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kCompute;
  }
  return kUsage;
}
