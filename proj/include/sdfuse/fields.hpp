#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sdfuse/common.hpp"

namespace sdfuse {

/// Analytic signed-distance primitives combined by exact min-union.
/// Serves as ground truth for baked grid fields.
struct AnalyticSdf {
  struct Sphere {
    Vec3 center;
    double radius;
  };
  struct Box {
    Vec3 center;
    Vec3 half_extents;
  };
  struct Plane {
    Vec3 normal;  // unit
    double offset;  // f = n.x - offset
  };
  using Shape = std::variant<Sphere, Box, Plane>;

  std::vector<Shape> shapes;

  double eval(const Vec3& x) const;
  void validate() const;

  static AnalyticSdf sphere(const Vec3& center, double radius);
  static AnalyticSdf box(const Vec3& center, const Vec3& half_extents);
  static AnalyticSdf plane(const Vec3& normal, double offset);
  AnalyticSdf& add(const Shape& s) {
    shapes.push_back(s);
    return *this;
  }
};

double eval_shape(const AnalyticSdf::Shape& s, const Vec3& x);

using Colorizer = std::function<Rgb(const Vec3&)>;

/// Colorizer ids: "constant:r,g,b", "trig", "trig:frequency", "axis",
/// "checker:period". Unknown id raises Error.
Colorizer make_colorizer(const std::string& id);

/// Dense vertex-centered scalar grid over an axis-aligned domain.
/// values laid out x-fastest: index = ix + nx*(iy + ny*iz).
struct SdfGrid {
  Aabb domain;
  int nx = 0, ny = 0, nz = 0;
  std::vector<float> values;

  size_t index(int ix, int iy, int iz) const {
    return static_cast<size_t>(ix) +
           static_cast<size_t>(nx) * (static_cast<size_t>(iy) + static_cast<size_t>(ny) * iz);
  }
  Vec3 vertex_position(int ix, int iy, int iz) const;
  Vec3 spacing() const {
    return {domain.extent().x() / (nx - 1), domain.extent().y() / (ny - 1),
            domain.extent().z() / (nz - 1)};
  }
  void validate() const;
};

/// Same layout as SdfGrid with rgb triples per vertex, channels in [0,1].
struct ColorGrid {
  Aabb domain;
  int nx = 0, ny = 0, nz = 0;
  std::vector<float> values;  // 3 * nx*ny*nz

  size_t index(int ix, int iy, int iz) const {
    return 3 * (static_cast<size_t>(ix) +
                static_cast<size_t>(nx) *
                    (static_cast<size_t>(iy) + static_cast<size_t>(ny) * iz));
  }
  void validate() const;
};

/// One node's local field: SDF plus optional matching color grid.
struct NodeField {
  SdfGrid sdf;
  std::optional<ColorGrid> color;

  const Aabb& domain() const { return sdf.domain; }
  void validate() const;
};

/// Trilinear interpolation inside the domain. Outside, the value at the
/// clamped boundary point plus the Euclidean distance to the box, which
/// keeps the field positive-increasing away from the node.
double eval_sdf(const SdfGrid& g, const Vec3& x);

/// Precomputed sampler for repeated queries against one grid; bit-identical
/// to eval_sdf. The grid must outlive the sampler.
class GridSampler {
 public:
  explicit GridSampler(const SdfGrid& g);
  double operator()(const Vec3& x) const;

 private:
  double sample_inside(const Vec3& x) const;

  const float* values_;
  int nx_, ny_, nz_;
  Vec3 lo_, hi_, h_, inv_h_;
};

/// Trilinear color inside the domain, `background` outside.
Rgb eval_color(const NodeField& f, const Vec3& x, const Rgb& background);

/// Lipschitz constant valid for eval_sdf inside the domain, from
/// adjacent-vertex differences.
double grid_lipschitz_bound(const SdfGrid& g);

/// Samples the analytic SDF and colorizer at every grid vertex.
/// noise_amplitude adds uniform noise in [-a, a] to the SDF values
/// (seeded, reproducible); 0 bakes exactly.
NodeField bake(const AnalyticSdf& analytic, const Colorizer& colorizer, const Aabb& domain,
               int nx, int ny, int nz, double noise_amplitude = 0.0, uint64_t seed = 0);

/// Binary grid file ("SDFG", little-endian). Round trip is bit-exact.
void write_grid(const NodeField& f, const std::filesystem::path& path);
NodeField read_grid(const std::filesystem::path& path);

}  // namespace sdfuse
