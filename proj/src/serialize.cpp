// Copyright The cagewarp Authors.
// SPDX-License-Identifier: Apache-2.0
#include <cagewarp/error.hpp>
#include <cagewarp/serialize.hpp>

#include <fstream>
#include <sstream>

namespace cagewarp {

namespace {

const json& require(const json& j, const char* key, const char* what) {
  if (!j.is_object() || !j.contains(key)) {
    throw ValidationError(std::string(what) + ": missing key '" + key + "'");
  }
  return j.at(key);
}

double number(const json& j, const char* what) {
  if (!j.is_number()) throw ValidationError(std::string(what) + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ValidationError(std::string(what) + ": must be finite");
  return v;
}

int integer(const json& j, const char* what) {
  if (!j.is_number_integer()) {
    throw ValidationError(std::string(what) + ": expected an integer");
  }
  return j.get<int>();
}

json rgb_to_json(const Rgb& c) { return json::array({c.x(), c.y(), c.z()}); }

SphereShape sphere_from_json(const json& j, const char* what) {
  return {vec3_from_json(require(j, "center", what), "center"),
          number(require(j, "radius", what), "radius")};
}

json sphere_to_json(const SphereShape& s) {
  return {{"center", vec3_to_json(s.center)}, {"radius", s.radius}};
}

}  // namespace

json vec3_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) {
    throw ValidationError(std::string(what) + ": expected [x, y, z]");
  }
  return {number(j[0], what), number(j[1], what), number(j[2], what)};
}

json cage_to_json(const HexCage& cage) {
  json out = json::array();
  for (const Vec3& v : cage.vertices()) out.push_back(vec3_to_json(v));
  return out;
}

HexCage cage_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 8) {
    throw ValidationError(std::string(what) + ": expected 8 vertices");
  }
  HexCage::Vertices v;
  for (std::size_t k = 0; k < 8; ++k) v[k] = vec3_from_json(j[k], what);
  return HexCage::from_vertices(v);
}

json cage_setup_to_json(const CageSetup& setup) {
  return {{"outer", cage_to_json(setup.outer)}, {"inner", cage_to_json(setup.inner)}};
}

CageSetup cage_setup_from_json(const json& j) {
  return {cage_from_json(require(j, "outer", "cages"), "outer"),
          cage_from_json(require(j, "inner", "cages"), "inner")};
}

json transform_to_json(const TransformParams& p) {
  return {{"translation", vec3_to_json(p.translation)},
          {"rotation", vec3_to_json(p.rotation)},
          {"scale", vec3_to_json(p.scale)}};
}

TransformParams transform_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("transform: expected an object");
  TransformParams p;
  if (j.contains("translation")) p.translation = vec3_from_json(j["translation"], "translation");
  if (j.contains("rotation")) p.rotation = vec3_from_json(j["rotation"], "rotation");
  if (j.contains("scale")) p.scale = vec3_from_json(j["scale"], "scale");
  p.validate();
  return p;
}

json manipulation_to_json(const Manipulation& m) {
  json out;
  out["target"] = m.target == CageTarget::Inner ? "inner" : "outer";
  if (const auto* t = std::get_if<TransformParams>(&m.action)) {
    out["transform"] = transform_to_json(*t);
  } else {
    const auto& d = std::get<CageDeformation>(m.action);
    const char* kind = d.handle.kind == CageHandle::Kind::Corner ? "corner" : "edge";
    out["deform"] = {{"handle", {{kind, d.handle.index}}},
                     {"delta", vec3_to_json(d.delta)}};
  }
  return out;
}

Manipulation manipulation_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("manipulation: expected an object");
  Manipulation m;
  const std::string target = j.value("target", "inner");
  if (target == "inner") {
    m.target = CageTarget::Inner;
  } else if (target == "outer") {
    m.target = CageTarget::Outer;
  } else {
    throw ValidationError("target: expected \"inner\" or \"outer\"");
  }
  if (j.contains("transform")) {
    m.action = transform_from_json(j["transform"]);
  } else if (j.contains("deform")) {
    const json& d = j["deform"];
    const json& h = require(d, "handle", "deform");
    CageDeformation def;
    if (h.contains("corner")) {
      def.handle = CageHandle::corner(integer(h["corner"], "handle.corner"));
      if (def.handle.index < 0 || def.handle.index > 7) {
        throw ValidationError("handle.corner: must be in 0..7");
      }
    } else if (h.contains("edge")) {
      def.handle = CageHandle::edge(integer(h["edge"], "handle.edge"));
      if (def.handle.index < 0 || def.handle.index > 11) {
        throw ValidationError("handle.edge: must be in 0..11");
      }
    } else {
      throw ValidationError("handle: expected \"corner\" or \"edge\"");
    }
    def.delta = vec3_from_json(require(d, "delta", "deform"), "delta");
    m.action = def;
  } else {
    throw ValidationError("manipulation: expected \"transform\" or \"deform\"");
  }
  return m;
}

json edit_to_json(const EditSpec& edit) {
  json log = json::array();
  for (const Manipulation& m : edit.log()) log.push_back(manipulation_to_json(m));
  return {{"outer", cage_to_json(edit.initial_outer())},
          {"inner", cage_to_json(edit.cages().inner_canonical)},
          {"mode", std::string(to_string(edit.mode()))},
          {"log", log}};
}

EditSpec edit_from_json(const json& j) {
  const HexCage outer = cage_from_json(require(j, "outer", "edit"), "outer");
  const HexCage inner = cage_from_json(require(j, "inner", "edit"), "inner");
  const json& mode = require(j, "mode", "edit");
  if (!mode.is_string()) throw ValidationError("mode: expected a string");
  std::vector<Manipulation> log;
  if (j.contains("log")) {
    if (!j["log"].is_array()) throw ValidationError("log: expected an array");
    for (const json& m : j["log"]) log.push_back(manipulation_from_json(m));
  }
  return EditSpec::replay(outer, inner, parse_mode(mode.get<std::string>()), log);
}

json camera_to_json(const Camera& c) {
  json t = json::array();
  for (int r = 0; r < 4; ++r) {
    for (int col = 0; col < 4; ++col) t.push_back(c.pose(r, col));
  }
  return {{"fov_x", c.fov_x}, {"width", c.width}, {"height", c.height}, {"transform", t}};
}

namespace {

Mat4 matrix_from_json(const json& j, const char* what) {
  Mat4 m;
  if (j.is_array() && j.size() == 16) {
    for (int i = 0; i < 16; ++i) m(i / 4, i % 4) = number(j[static_cast<std::size_t>(i)], what);
  } else if (j.is_array() && j.size() == 4) {
    for (std::size_t r = 0; r < 4; ++r) {
      if (!j[r].is_array() || j[r].size() != 4) {
        throw ValidationError(std::string(what) + ": expected a 4x4 matrix");
      }
      for (std::size_t c = 0; c < 4; ++c) {
        m(static_cast<int>(r), static_cast<int>(c)) = number(j[r][c], what);
      }
    }
  } else {
    throw ValidationError(std::string(what) + ": expected 16 numbers or a 4x4 matrix");
  }
  return m;
}

}  // namespace

Camera camera_from_json(const json& j) {
  Camera c;
  c.fov_x = number(require(j, "fov_x", "camera"), "fov_x");
  c.width = integer(require(j, "width", "camera"), "width");
  c.height = integer(require(j, "height", "camera"), "height");
  c.pose = matrix_from_json(require(j, "transform", "camera"), "transform");
  c.validate();
  return c;
}

std::vector<Camera> cameras_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("camera file: expected an object");
  if (!j.contains("frames")) return {camera_from_json(j)};
  const double fov = number(require(j, "camera_angle_x", "camera file"), "camera_angle_x");
  const char* wkey = j.contains("w") ? "w" : "width";
  const char* hkey = j.contains("h") ? "h" : "height";
  const int w = integer(require(j, wkey, "camera file"), wkey);
  const int h = integer(require(j, hkey, "camera file"), hkey);
  if (!j["frames"].is_array()) throw ValidationError("frames: expected an array");
  std::vector<Camera> out;
  for (const json& f : j["frames"]) {
    Camera c;
    c.fov_x = fov;
    c.width = w;
    c.height = h;
    c.pose = matrix_from_json(require(f, "transform_matrix", "frame"), "transform_matrix");
    c.validate();
    out.push_back(c);
  }
  if (out.empty()) throw ValidationError("frames: no cameras");
  return out;
}

json settings_to_json(const RenderSettings& s) {
  return {{"samples_per_ray", s.samples_per_ray},
          {"near", s.near},
          {"far", s.far},
          {"background", rgb_to_json(s.background)},
          {"stratified_jitter", s.stratified_jitter},
          {"seed", s.seed}};
}

RenderSettings settings_from_json(const json& j, RenderSettings base) {
  if (!j.is_object()) throw ValidationError("settings: expected an object");
  if (j.contains("samples_per_ray")) base.samples_per_ray = integer(j["samples_per_ray"], "samples_per_ray");
  if (j.contains("near")) base.near = number(j["near"], "near");
  if (j.contains("far")) base.far = number(j["far"], "far");
  if (j.contains("background")) base.background = vec3_from_json(j["background"], "background");
  if (j.contains("stratified_jitter")) {
    if (!j["stratified_jitter"].is_boolean()) {
      throw ValidationError("stratified_jitter: expected a boolean");
    }
    base.stratified_jitter = j["stratified_jitter"].get<bool>();
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw ValidationError("seed: expected a non-negative integer");
    base.seed = j["seed"].get<std::uint64_t>();
  }
  base.validate();
  return base;
}

json analytic_to_json(const AnalyticField& f) {
  json out = std::visit(
      [](const auto& s) -> json {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, SphereShape>) {
          return sphere_to_json(s);
        } else if constexpr (std::is_same_v<T, BoxShape>) {
          return {{"min", vec3_to_json(s.box.min)}, {"max", vec3_to_json(s.box.max)}};
        } else if constexpr (std::is_same_v<T, TwoSpheresShape>) {
          return {{"first", sphere_to_json(s.first)}, {"second", sphere_to_json(s.second)}};
        } else {
          return {{"floor_min", vec3_to_json(s.floor.min)},
                  {"floor_max", vec3_to_json(s.floor.max)},
                  {"checker_size", s.checker_size},
                  {"sphere", sphere_to_json(s.sphere)}};
        }
      },
      f.shape);
  out["kind"] = f.kind_name();
  out["color"] = rgb_to_json(f.color);
  out["secondary_color"] = rgb_to_json(f.secondary_color);
  out["density"] = f.density;
  return out;
}

AnalyticField analytic_from_json(const json& j) {
  const json& kind_j = require(j, "kind", "scene");
  if (!kind_j.is_string()) throw LoadError("kind", "expected a string");
  const std::string kind = kind_j.get<std::string>();
  AnalyticField f;
  try {
    if (kind == "sphere") {
      f.shape = sphere_from_json(j, "sphere");
    } else if (kind == "box") {
      f.shape = BoxShape{{vec3_from_json(require(j, "min", "box"), "min"),
                          vec3_from_json(require(j, "max", "box"), "max")}};
    } else if (kind == "two-spheres") {
      f.shape = TwoSpheresShape{sphere_from_json(require(j, "first", "two-spheres"), "first"),
                                sphere_from_json(require(j, "second", "two-spheres"), "second")};
    } else if (kind == "checker-floor-plus-sphere") {
      CheckerFloorSphereShape c;
      c.floor = {vec3_from_json(require(j, "floor_min", kind.c_str()), "floor_min"),
                 vec3_from_json(require(j, "floor_max", kind.c_str()), "floor_max")};
      if (j.contains("checker_size")) c.checker_size = number(j["checker_size"], "checker_size");
      c.sphere = sphere_from_json(require(j, "sphere", kind.c_str()), "sphere");
      f.shape = c;
    } else {
      throw LoadError("kind", "unknown analytic scene kind '" + kind + "'");
    }
    if (j.contains("color")) f.color = vec3_from_json(j["color"], "color");
    if (j.contains("secondary_color")) {
      f.secondary_color = vec3_from_json(j["secondary_color"], "secondary_color");
    }
    if (j.contains("density")) f.density = number(j["density"], "density");
  } catch (const LoadError&) {
    throw;
  } catch (const ValidationError& e) {
    throw LoadError(kind, e.what());
  }
  if (!(f.density >= 0.0)) throw LoadError("density", "must be non-negative");
  if (!f.bounds().valid()) throw LoadError(kind, "shape has an empty extent");
  return f;
}

std::vector<EditSpec> edits_from_script(const json& script, const CageSetup& cages,
                                        AdjustmentMode mode) {
  auto actions_of = [](const json& list) {
    if (!list.is_array()) throw ValidationError("actions: expected an array");
    std::vector<Manipulation> out;
    for (const json& m : list) out.push_back(manipulation_from_json(m));
    return out;
  };
  if (script.is_array()) {
    return {EditSpec::replay(cages.outer, cages.inner, mode, actions_of(script))};
  }
  if (!script.is_object() || !script.contains("edits") || !script["edits"].is_array()) {
    throw ValidationError("script: expected an action array or {\"edits\": [...]}");
  }
  std::vector<EditSpec> edits;
  CageSetup current = cages;
  for (const json& e : script["edits"]) {
    if (!e.is_object()) throw ValidationError("edits[]: expected an object");
    if (e.contains("outer")) current.outer = cage_from_json(e["outer"], "outer");
    if (e.contains("inner")) current.inner = cage_from_json(e["inner"], "inner");
    const AdjustmentMode m =
        e.contains("mode") ? parse_mode(e["mode"].get<std::string>()) : mode;
    edits.push_back(EditSpec::replay(current.outer, current.inner, m,
                                     actions_of(e.value("actions", json::array()))));
    current = {edits.back().cages().outer, edits.back().cages().inner_deformed};
  }
  return edits;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw LoadError(path.filename().string(), std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace cagewarp
