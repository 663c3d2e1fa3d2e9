// Copyright The cagewarp Authors.
// SPDX-License-Identifier: Apache-2.0
#include <cagewarp/error.hpp>
#include <cagewarp/field.hpp>

#include <cmath>

namespace cagewarp {

namespace {

// Cell index and local fraction along one axis. Nodes lie on the box
// boundary, so the last node belongs to the last cell with fraction 1.
inline void locate(double p, double lo, double extent, int n, int& cell,
                   double& frac) {
  const double u = (p - lo) / extent * static_cast<double>(n - 1);
  cell = std::clamp(static_cast<int>(std::floor(u)), 0, n - 2);
  frac = u - static_cast<double>(cell);
}

inline double lerp(double a, double b, double t) {
  return (1.0 - t) * a + t * b;
}

}  // namespace

GridField GridField::create(const Aabb& bbox, const Dims3& dims,
                            std::vector<float> densities,
                            std::vector<float> colors) {
  for (int a = 0; a < 3; ++a) {
    if (dims[static_cast<std::size_t>(a)] < 2) {
      throw LoadError("dims", "every dimension must be at least 2");
    }
  }
  if (!bbox.min.allFinite() || !bbox.max.allFinite()) {
    throw LoadError("bbox", "non-finite corner");
  }
  if (!(bbox.min.array() < bbox.max.array()).all()) {
    throw LoadError("bbox", "bbox_min must be below bbox_max on every axis");
  }
  const std::size_t n = static_cast<std::size_t>(dims[0]) *
                        static_cast<std::size_t>(dims[1]) *
                        static_cast<std::size_t>(dims[2]);
  if (densities.size() != n) {
    throw LoadError("density", "expected " + std::to_string(n) +
                                   " values, got " +
                                   std::to_string(densities.size()));
  }
  if (colors.size() != 3 * n) {
    throw LoadError("color", "expected " + std::to_string(3 * n) +
                                 " values, got " + std::to_string(colors.size()));
  }
  for (float d : densities) {
    if (!std::isfinite(d)) throw LoadError("density", "non-finite value");
    if (d < 0.0f) throw LoadError("density", "negative value");
  }
  for (float c : colors) {
    if (!std::isfinite(c)) throw LoadError("color", "non-finite value");
    if (c < 0.0f || c > 1.0f) throw LoadError("color", "value outside [0, 1]");
  }
  GridField g;
  g.bbox_ = bbox;
  g.dims_ = dims;
  g.density_ = std::move(densities);
  g.color_ = std::move(colors);
  return g;
}

GridField GridField::sample(
    const Aabb& bbox, const Dims3& dims,
    const std::function<RadianceSample(const Vec3&)>& fn) {
  const std::size_t n = static_cast<std::size_t>(dims[0]) *
                        static_cast<std::size_t>(dims[1]) *
                        static_cast<std::size_t>(dims[2]);
  std::vector<float> dens(n);
  std::vector<float> cols(3 * n);
  const Vec3 step = bbox.extent().cwiseQuotient(
      Vec3(dims[0] - 1, dims[1] - 1, dims[2] - 1));
  std::size_t idx = 0;
  for (int k = 0; k < dims[2]; ++k) {
    for (int j = 0; j < dims[1]; ++j) {
      for (int i = 0; i < dims[0]; ++i, ++idx) {
        const Vec3 p = bbox.min + Vec3(i, j, k).cwiseProduct(step);
        const RadianceSample s = fn(p);
        dens[idx] = static_cast<float>(s.density);
        for (int c = 0; c < 3; ++c) {
          cols[3 * idx + static_cast<std::size_t>(c)] =
              static_cast<float>(std::clamp(s.color[c], 0.0, 1.0));
        }
      }
    }
  }
  return create(bbox, dims, std::move(dens), std::move(cols));
}

Vec3 GridField::spacing() const {
  return bbox_.extent().cwiseQuotient(
      Vec3(dims_[0] - 1, dims_[1] - 1, dims_[2] - 1));
}

Vec3 GridField::node_position(int i, int j, int k) const {
  return bbox_.min + Vec3(i, j, k).cwiseProduct(spacing());
}

RadianceSample GridField::query(const Vec3& p) const {
  if (!bbox_.contains(p)) return RadianceSample::empty();
  const Vec3 ext = bbox_.extent();
  int ci[3];
  double f[3];
  for (int a = 0; a < 3; ++a) {
    locate(p[a], bbox_.min[a], ext[a], dims_[static_cast<std::size_t>(a)], ci[a],
           f[a]);
  }
  std::size_t nodes[8];
  for (int c = 0; c < 8; ++c) {
    const int di = c & 1, dj = (c >> 1) & 1, dk = (c >> 2) & 1;
    nodes[c] = index(ci[0] + di, ci[1] + dj, ci[2] + dk);
  }
  // Nested lerps so a lookup exactly at a node returns the stored value.
  auto blend = [&](auto&& value) {
    const double x00 = lerp(value(nodes[0]), value(nodes[1]), f[0]);
    const double x10 = lerp(value(nodes[2]), value(nodes[3]), f[0]);
    const double x01 = lerp(value(nodes[4]), value(nodes[5]), f[0]);
    const double x11 = lerp(value(nodes[6]), value(nodes[7]), f[0]);
    return lerp(lerp(x00, x10, f[1]), lerp(x01, x11, f[1]), f[2]);
  };
  RadianceSample s;
  s.density = blend([&](std::size_t n) { return double(density_[n]); });
  for (int c = 0; c < 3; ++c) {
    s.color[c] = blend([&](std::size_t n) {
      return double(color_[3 * n + static_cast<std::size_t>(c)]);
    });
  }
  s.density = std::max(0.0, s.density);
  return s;
}

namespace {

double lipschitz_of(const GridField& g,
                    const std::function<double(std::size_t)>& value) {
  const Dims3& d = g.dims();
  const Vec3 h = g.spacing();
  double best = 0.0;
  for (int k = 0; k + 1 < d[2]; ++k) {
    for (int j = 0; j + 1 < d[1]; ++j) {
      for (int i = 0; i + 1 < d[0]; ++i) {
        double m[3] = {0.0, 0.0, 0.0};
        for (int c = 0; c < 8; ++c) {
          const int di = c & 1, dj = (c >> 1) & 1, dk = (c >> 2) & 1;
          const double v = value(g.index(i + di, j + dj, k + dk));
          if (!di) m[0] = std::max(m[0], std::abs(value(g.index(i + 1, j + dj, k + dk)) - v));
          if (!dj) m[1] = std::max(m[1], std::abs(value(g.index(i + di, j + 1, k + dk)) - v));
          if (!dk) m[2] = std::max(m[2], std::abs(value(g.index(i + di, j + dj, k + 1)) - v));
        }
        const Vec3 grad(m[0] / h[0], m[1] / h[1], m[2] / h[2]);
        best = std::max(best, grad.norm());
      }
    }
  }
  return best;
}

}  // namespace

double GridField::density_lipschitz() const {
  return lipschitz_of(*this, [&](std::size_t n) { return double(density_[n]); });
}

double GridField::color_lipschitz() const {
  double best = 0.0;
  for (std::size_t c = 0; c < 3; ++c) {
    best = std::max(best, lipschitz_of(*this, [&](std::size_t n) {
                      return double(color_[3 * n + c]);
                    }));
  }
  return best;
}

// Analytic fields

namespace {

bool in_sphere(const SphereShape& s, const Vec3& p) {
  return (p - s.center).squaredNorm() <= s.radius * s.radius;
}

Aabb sphere_bounds(const SphereShape& s) {
  return {s.center.array() - s.radius, s.center.array() + s.radius};
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

bool AnalyticField::inside(const Vec3& p) const {
  return std::visit(
      Overloaded{
          [&](const SphereShape& s) { return in_sphere(s, p); },
          [&](const BoxShape& b) { return b.box.contains(p); },
          [&](const TwoSpheresShape& t) {
            return in_sphere(t.first, p) || in_sphere(t.second, p);
          },
          [&](const CheckerFloorSphereShape& c) {
            return c.floor.contains(p) || in_sphere(c.sphere, p);
          },
      },
      shape);
}

RadianceSample AnalyticField::query(const Vec3& p) const {
  return std::visit(
      Overloaded{
          [&](const SphereShape& s) {
            return in_sphere(s, p) ? RadianceSample{color, density}
                                   : RadianceSample::empty();
          },
          [&](const BoxShape& b) {
            return b.box.contains(p) ? RadianceSample{color, density}
                                     : RadianceSample::empty();
          },
          [&](const TwoSpheresShape& t) {
            if (in_sphere(t.first, p)) return RadianceSample{color, density};
            if (in_sphere(t.second, p)) {
              return RadianceSample{secondary_color, density};
            }
            return RadianceSample::empty();
          },
          [&](const CheckerFloorSphereShape& c) {
            if (in_sphere(c.sphere, p)) return RadianceSample{color, density};
            if (c.floor.contains(p)) {
              const auto cx = static_cast<long long>(
                  std::floor((p.x() - c.floor.min.x()) / c.checker_size));
              const auto cz = static_cast<long long>(
                  std::floor((p.z() - c.floor.min.z()) / c.checker_size));
              const bool light = ((cx + cz) & 1) == 0;
              return RadianceSample{light ? Rgb(0.9, 0.9, 0.9) : secondary_color,
                                    density};
            }
            return RadianceSample::empty();
          },
      },
      shape);
}

Aabb AnalyticField::bounds() const {
  return std::visit(
      Overloaded{
          [](const SphereShape& s) { return sphere_bounds(s); },
          [](const BoxShape& b) { return b.box; },
          [](const TwoSpheresShape& t) {
            return sphere_bounds(t.first).merged(sphere_bounds(t.second));
          },
          [](const CheckerFloorSphereShape& c) {
            return c.floor.merged(sphere_bounds(c.sphere));
          },
      },
      shape);
}

std::string AnalyticField::kind_name() const {
  return std::visit(Overloaded{
                        [](const SphereShape&) { return "sphere"; },
                        [](const BoxShape&) { return "box"; },
                        [](const TwoSpheresShape&) { return "two-spheres"; },
                        [](const CheckerFloorSphereShape&) {
                          return "checker-floor-plus-sphere";
                        },
                    },
                    shape);
}

RadianceSample RadianceField::query(const Vec3& p, const Vec3&) const {
  return std::visit([&](const auto& f) { return f.query(p); }, impl_);
}

Aabb RadianceField::bounds() const {
  if (const auto* g = grid()) return g->bbox();
  return analytic()->bounds();
}

}  // namespace cagewarp
