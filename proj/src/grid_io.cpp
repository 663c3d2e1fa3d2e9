// Copyright The cagewarp Authors.
// SPDX-License-Identifier: Apache-2.0
#include <cagewarp/error.hpp>
#include <cagewarp/field.hpp>
#include <cagewarp/serialize.hpp>

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace cagewarp {

namespace {

void append_f32le(std::string& out, float v) {
  const auto bits = std::bit_cast<std::uint32_t>(v);
  for (int b = 0; b < 4; ++b) {
    out.push_back(static_cast<char>((bits >> (8 * b)) & 0xffu));
  }
}

float read_f32le(const char* p) {
  std::uint32_t bits = 0;
  for (int b = 0; b < 4; ++b) {
    bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[b]))
            << (8 * b);
  }
  return std::bit_cast<float>(bits);
}

Vec3 header_vec(const json& header, const char* key) {
  if (!header.contains(key)) throw LoadError(key, "missing from header");
  const json& v = header.at(key);
  if (!v.is_array() || v.size() != 3) {
    throw LoadError(key, "expected an array of 3 numbers");
  }
  Vec3 out;
  for (std::size_t i = 0; i < 3; ++i) {
    if (!v[i].is_number()) throw LoadError(key, "expected numbers");
    out[static_cast<int>(i)] = v[i].get<double>();
  }
  return out;
}

}  // namespace

std::string serialize_grid_field(const GridField& grid) {
  json header;
  header["dims"] = {grid.dims()[0], grid.dims()[1], grid.dims()[2]};
  header["bbox_min"] = vec3_to_json(grid.bbox().min);
  header["bbox_max"] = vec3_to_json(grid.bbox().max);
  header["encoding"] = "f32le";
  std::string out = header.dump();
  out.push_back('\n');
  out.reserve(out.size() + 16 * grid.node_count());
  for (float d : grid.densities()) append_f32le(out, d);
  for (float c : grid.colors()) append_f32le(out, c);
  return out;
}

GridField parse_grid_field(const std::string& bytes) {
  const auto newline = bytes.find('\n');
  if (newline == std::string::npos) {
    throw LoadError("header", "missing newline after JSON header");
  }
  json header;
  try {
    header = json::parse(bytes.substr(0, newline));
  } catch (const json::parse_error& e) {
    throw LoadError("header", std::string("malformed JSON: ") + e.what());
  }
  if (!header.is_object()) throw LoadError("header", "expected a JSON object");
  if (!header.contains("encoding") || header["encoding"] != "f32le") {
    throw LoadError("encoding", "expected \"f32le\"");
  }
  if (!header.contains("dims")) throw LoadError("dims", "missing from header");
  const json& jd = header["dims"];
  if (!jd.is_array() || jd.size() != 3) {
    throw LoadError("dims", "expected an array of 3 integers");
  }
  Dims3 dims{};
  for (std::size_t a = 0; a < 3; ++a) {
    if (!jd[a].is_number_integer()) throw LoadError("dims", "expected integers");
    const auto v = jd[a].get<long long>();
    if (v < 2 || v > (1 << 14)) throw LoadError("dims", "out of range");
    dims[a] = static_cast<int>(v);
  }
  const Aabb bbox{header_vec(header, "bbox_min"), header_vec(header, "bbox_max")};

  const std::size_t n = static_cast<std::size_t>(dims[0]) *
                        static_cast<std::size_t>(dims[1]) *
                        static_cast<std::size_t>(dims[2]);
  const std::size_t payload = bytes.size() - newline - 1;
  if (payload != 16 * n) {
    throw LoadError("payload", "expected " + std::to_string(16 * n) +
                                   " bytes (" + std::to_string(n) +
                                   " densities + RGB), got " +
                                   std::to_string(payload));
  }
  const char* p = bytes.data() + newline + 1;
  std::vector<float> dens(n);
  std::vector<float> cols(3 * n);
  for (std::size_t i = 0; i < n; ++i, p += 4) dens[i] = read_f32le(p);
  for (std::size_t i = 0; i < 3 * n; ++i, p += 4) cols[i] = read_f32le(p);
  return GridField::create(bbox, dims, std::move(dens), std::move(cols));
}

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("error reading " + path.string());
  return bytes;
}

}  // namespace

GridField load_grid_field(const std::filesystem::path& path) {
  return parse_grid_field(read_file(path));
}

void save_grid_field(const GridField& grid, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  const std::string bytes = serialize_grid_field(grid);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("error writing " + path.string());
}

GridField parse_voxel_list(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::optional<Dims3> dims;
  std::optional<Vec3> lo, hi;
  struct Voxel {
    int i, j, k;
    float d, r, g, b;
  };
  std::vector<Voxel> voxels;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    const std::string where = "line " + std::to_string(line_no);
    std::string key;
    ls >> key;
    if (key == "dims") {
      Dims3 d{};
      if (!(ls >> d[0] >> d[1] >> d[2])) throw LoadError("dims", where);
      dims = d;
    } else if (key == "bbox_min" || key == "bbox_max") {
      Vec3 v;
      if (!(ls >> v[0] >> v[1] >> v[2])) throw LoadError(key, where);
      (key == "bbox_min" ? lo : hi) = v;
    } else {
      std::istringstream vs(line);
      Voxel v{};
      if (!(vs >> v.i >> v.j >> v.k >> v.d >> v.r >> v.g >> v.b)) {
        throw LoadError("voxel", where + ": expected I J K DENSITY R G B");
      }
      voxels.push_back(v);
    }
  }
  if (!dims) throw LoadError("dims", "missing");
  if (!lo) throw LoadError("bbox_min", "missing");
  if (!hi) throw LoadError("bbox_max", "missing");
  for (int a = 0; a < 3; ++a) {
    if ((*dims)[static_cast<std::size_t>(a)] < 2) {
      throw LoadError("dims", "every dimension must be at least 2");
    }
  }
  const std::size_t n = static_cast<std::size_t>((*dims)[0]) *
                        static_cast<std::size_t>((*dims)[1]) *
                        static_cast<std::size_t>((*dims)[2]);
  std::vector<float> dens(n, 0.0f);
  std::vector<float> cols(3 * n, 0.0f);
  for (const Voxel& v : voxels) {
    if (v.i < 0 || v.j < 0 || v.k < 0 || v.i >= (*dims)[0] ||
        v.j >= (*dims)[1] || v.k >= (*dims)[2]) {
      throw LoadError("voxel", "index out of range");
    }
    const std::size_t idx =
        static_cast<std::size_t>(v.i) +
        static_cast<std::size_t>((*dims)[0]) *
            (static_cast<std::size_t>(v.j) +
             static_cast<std::size_t>((*dims)[1]) * static_cast<std::size_t>(v.k));
    dens[idx] = v.d;
    cols[3 * idx] = v.r;
    cols[3 * idx + 1] = v.g;
    cols[3 * idx + 2] = v.b;
  }
  return GridField::create({*lo, *hi}, *dims, std::move(dens), std::move(cols));
}

RadianceField load_scene(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  const auto newline = bytes.find('\n');
  // Grid files carry a binary payload after the header line; analytic
  // scenes are plain JSON with a "kind".
  json head;
  try {
    head = json::parse(bytes.substr(0, newline), nullptr, true);
  } catch (const json::parse_error&) {
    try {
      head = json::parse(bytes);
    } catch (const json::parse_error& e) {
      throw LoadError("header", std::string("malformed JSON: ") + e.what());
    }
  }
  if (head.is_object() && head.contains("kind")) {
    return RadianceField(analytic_from_json(head));
  }
  return RadianceField(parse_grid_field(bytes));
}

}  // namespace cagewarp
