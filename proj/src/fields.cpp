#include "sdfuse/fields.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace sdfuse {

static_assert(std::endian::native == std::endian::little,
              "grid file I/O assumes a little-endian host");

double eval_shape(const AnalyticSdf::Shape& s, const Vec3& x) {
  if (const auto* sp = std::get_if<AnalyticSdf::Sphere>(&s)) {
    return (x - sp->center).norm() - sp->radius;
  }
  if (const auto* bx = std::get_if<AnalyticSdf::Box>(&s)) {
    Vec3 q = (x - bx->center).cwiseAbs() - bx->half_extents;
    Vec3 qpos = q.cwiseMax(0.0);
    return qpos.norm() + std::min(q.maxCoeff(), 0.0);
  }
  const auto& pl = std::get<AnalyticSdf::Plane>(s);
  return pl.normal.dot(x) - pl.offset;
}

double AnalyticSdf::eval(const Vec3& x) const {
  double d = std::numeric_limits<double>::infinity();
  for (const Shape& s : shapes) d = std::min(d, eval_shape(s, x));
  return d;
}

void AnalyticSdf::validate() const {
  for (const Shape& s : shapes) {
    if (const auto* sp = std::get_if<Sphere>(&s)) {
      if (!(sp->radius > 0.0)) throw Error("sphere radius must be positive");
    } else if (const auto* bx = std::get_if<Box>(&s)) {
      if (!(bx->half_extents.minCoeff() > 0.0))
        throw Error("box half-extents must be positive");
    } else {
      const auto& pl = std::get<Plane>(s);
      if (std::abs(pl.normal.norm() - 1.0) > 1e-9)
        throw Error("plane normal must be unit length");
    }
  }
}

AnalyticSdf AnalyticSdf::sphere(const Vec3& center, double radius) {
  AnalyticSdf f;
  f.shapes.push_back(Sphere{center, radius});
  return f;
}

AnalyticSdf AnalyticSdf::box(const Vec3& center, const Vec3& half_extents) {
  AnalyticSdf f;
  f.shapes.push_back(Box{center, half_extents});
  return f;
}

AnalyticSdf AnalyticSdf::plane(const Vec3& normal, double offset) {
  AnalyticSdf f;
  f.shapes.push_back(Plane{normal.normalized(), offset});
  return f;
}

Colorizer make_colorizer(const std::string& id) {
  auto starts = [&](const char* p) { return id.rfind(p, 0) == 0; };
  if (starts("constant")) {
    Rgb c(0.8, 0.8, 0.8);
    if (id.size() > 9) {
      double r, g, b;
      if (std::sscanf(id.c_str() + 9, "%lf,%lf,%lf", &r, &g, &b) != 3)
        throw Error("bad constant colorizer: " + id);
      c = Rgb(r, g, b);
    }
    return [c](const Vec3&) { return c; };
  }
  if (starts("trig")) {
    double freq = 9.0;
    if (id.size() > 5) freq = std::stod(id.substr(5));
    return [freq](const Vec3& p) {
      Rgb c;
      c.x() = 0.5 + 0.5 * std::sin(freq * p.x() + 2.0 * p.y());
      c.y() = 0.5 + 0.5 * std::sin(freq * p.y() + 2.0 * p.z() + 1.3);
      c.z() = 0.5 + 0.5 * std::sin(freq * p.z() + 2.0 * p.x() + 2.6);
      return c;
    };
  }
  if (starts("axis")) {
    return [](const Vec3& p) {
      auto wrap = [](double v) { return v - std::floor(v); };
      return Rgb(wrap(p.x()), wrap(p.y()), wrap(p.z()));
    };
  }
  if (starts("checker")) {
    double period = 0.25;
    if (id.size() > 8) period = std::stod(id.substr(8));
    return [period](const Vec3& p) {
      long s = static_cast<long>(std::floor(p.x() / period)) +
               static_cast<long>(std::floor(p.y() / period)) +
               static_cast<long>(std::floor(p.z() / period));
      return (s & 1) ? Rgb(0.9, 0.9, 0.9) : Rgb(0.15, 0.15, 0.15);
    };
  }
  throw Error("unknown colorizer id: " + id);
}

Vec3 SdfGrid::vertex_position(int ix, int iy, int iz) const {
  // the last vertex along an axis is pinned to the domain bound so the
  // lattice covers [lo, hi] exactly
  Vec3 h = spacing();
  return {ix == nx - 1 ? domain.hi.x() : domain.lo.x() + ix * h.x(),
          iy == ny - 1 ? domain.hi.y() : domain.lo.y() + iy * h.y(),
          iz == nz - 1 ? domain.hi.z() : domain.lo.z() + iz * h.z()};
}

void SdfGrid::validate() const {
  if (!domain.valid()) throw Error("grid domain invalid (lo must be < hi)");
  if (nx < 2 || ny < 2 || nz < 2) throw Error("grid dims must be >= 2 per axis");
  if (values.size() != static_cast<size_t>(nx) * ny * nz)
    throw Error("grid value count does not match dims");
  for (float v : values)
    if (!std::isfinite(v)) throw Error("grid contains non-finite values");
}

void ColorGrid::validate() const {
  if (!domain.valid()) throw Error("color grid domain invalid");
  if (nx < 2 || ny < 2 || nz < 2) throw Error("color grid dims must be >= 2 per axis");
  if (values.size() != 3 * static_cast<size_t>(nx) * ny * nz)
    throw Error("color grid value count does not match dims");
  for (float v : values)
    if (!(v >= 0.0f && v <= 1.0f)) throw Error("color channels must be in [0,1]");
}

void NodeField::validate() const {
  sdf.validate();
  if (color) {
    color->validate();
    if (color->nx != sdf.nx || color->ny != sdf.ny || color->nz != sdf.nz)
      throw Error("color grid dims must match sdf grid dims");
    if ((color->domain.lo - sdf.domain.lo).norm() != 0.0 ||
        (color->domain.hi - sdf.domain.hi).norm() != 0.0)
      throw Error("color grid domain must match sdf grid domain");
  }
}

namespace {

struct AxisLoc {
  int i;      // lower cell vertex, in [0, n-2]
  double u;   // fraction in [0,1]; exactly 0/1 when the query sits on a vertex
};

inline double vertex_coord(double lo, double hi, double h, int n, int i) {
  return i == n - 1 ? hi : lo + i * h;
}

// Locates the cell and fraction along one axis. The fraction is computed
// against the reconstructed vertex positions so queries at vertices return
// the stored value exactly.
inline AxisLoc locate(double x, double lo, double hi, double h, double inv_h, int n) {
  double t = (x - lo) * inv_h;
  int i = static_cast<int>(t);  // t >= 0 inside the domain
  i = std::clamp(i, 0, n - 2);
  double p0 = vertex_coord(lo, hi, h, n, i);
  double p1 = vertex_coord(lo, hi, h, n, i + 1);
  if (x >= p1 && i < n - 2) {
    ++i;
    p0 = p1;
    p1 = vertex_coord(lo, hi, h, n, i + 1);
  } else if (x < p0 && i > 0) {
    --i;
    p1 = p0;
    p0 = vertex_coord(lo, hi, h, n, i);
  }
  double u;
  if (x <= p0)
    u = 0.0;
  else if (x >= p1)
    u = 1.0;
  else
    u = (x - p0) * inv_h;
  return {i, u};
}

}  // namespace

GridSampler::GridSampler(const SdfGrid& g)
    : values_(g.values.data()),
      nx_(g.nx),
      ny_(g.ny),
      nz_(g.nz),
      lo_(g.domain.lo),
      hi_(g.domain.hi),
      h_(g.spacing()),
      inv_h_(1.0 / h_.x(), 1.0 / h_.y(), 1.0 / h_.z()) {}

double GridSampler::sample_inside(const Vec3& x) const {
  AxisLoc ax = locate(x.x(), lo_.x(), hi_.x(), h_.x(), inv_h_.x(), nx_);
  AxisLoc ay = locate(x.y(), lo_.y(), hi_.y(), h_.y(), inv_h_.y(), ny_);
  AxisLoc az = locate(x.z(), lo_.z(), hi_.z(), h_.z(), inv_h_.z(), nz_);

  const float* v = values_;
  size_t i000 = static_cast<size_t>(ax.i) +
                static_cast<size_t>(nx_) *
                    (static_cast<size_t>(ay.i) + static_cast<size_t>(ny_) * az.i);
  size_t dy = static_cast<size_t>(nx_);
  size_t dz = static_cast<size_t>(nx_) * ny_;

  double ux = ax.u, uy = ay.u, uz = az.u;
  double c00 = v[i000] * (1.0 - ux) + v[i000 + 1] * ux;
  double c10 = v[i000 + dy] * (1.0 - ux) + v[i000 + dy + 1] * ux;
  double c01 = v[i000 + dz] * (1.0 - ux) + v[i000 + dz + 1] * ux;
  double c11 = v[i000 + dy + dz] * (1.0 - ux) + v[i000 + dy + dz + 1] * ux;
  double c0 = c00 * (1.0 - uy) + c10 * uy;
  double c1 = c01 * (1.0 - uy) + c11 * uy;
  return c0 * (1.0 - uz) + c1 * uz;
}

double GridSampler::operator()(const Vec3& x) const {
  bool inside = x.x() >= lo_.x() && x.x() <= hi_.x() && x.y() >= lo_.y() && x.y() <= hi_.y() &&
                x.z() >= lo_.z() && x.z() <= hi_.z();
  if (inside) return sample_inside(x);
  Vec3 xc = x.cwiseMax(lo_).cwiseMin(hi_);
  return sample_inside(xc) + (x - xc).norm();
}

double eval_sdf(const SdfGrid& g, const Vec3& x) { return GridSampler(g)(x); }

Rgb eval_color(const NodeField& f, const Vec3& x, const Rgb& background) {
  if (!f.color || !f.color->domain.contains(x)) return background;
  const ColorGrid& g = *f.color;
  Vec3 ext = g.domain.extent();
  Vec3 h(ext.x() / (g.nx - 1), ext.y() / (g.ny - 1), ext.z() / (g.nz - 1));
  AxisLoc ax = locate(x.x(), g.domain.lo.x(), g.domain.hi.x(), h.x(), 1.0 / h.x(), g.nx);
  AxisLoc ay = locate(x.y(), g.domain.lo.y(), g.domain.hi.y(), h.y(), 1.0 / h.y(), g.ny);
  AxisLoc az = locate(x.z(), g.domain.lo.z(), g.domain.hi.z(), h.z(), 1.0 / h.z(), g.nz);

  const float* v = g.values.data();
  size_t i000 = g.index(ax.i, ay.i, az.i);
  size_t dx = 3;
  size_t dy = 3 * static_cast<size_t>(g.nx);
  size_t dz = 3 * static_cast<size_t>(g.nx) * g.ny;

  double ux = ax.u, uy = ay.u, uz = az.u;
  Rgb out;
  for (int c = 0; c < 3; ++c) {
    size_t b = i000 + c;
    double c00 = v[b] * (1.0 - ux) + v[b + dx] * ux;
    double c10 = v[b + dy] * (1.0 - ux) + v[b + dy + dx] * ux;
    double c01 = v[b + dz] * (1.0 - ux) + v[b + dz + dx] * ux;
    double c11 = v[b + dy + dz] * (1.0 - ux) + v[b + dy + dz + dx] * ux;
    double c0 = c00 * (1.0 - uy) + c10 * uy;
    double c1 = c01 * (1.0 - uy) + c11 * uy;
    out[c] = c0 * (1.0 - uz) + c1 * uz;
  }
  return out;
}

double grid_lipschitz_bound(const SdfGrid& g) {
  Vec3 h = g.spacing();
  double lx = 0, ly = 0, lz = 0;
  for (int iz = 0; iz < g.nz; ++iz)
    for (int iy = 0; iy < g.ny; ++iy)
      for (int ix = 0; ix < g.nx; ++ix) {
        double v = g.values[g.index(ix, iy, iz)];
        if (ix + 1 < g.nx)
          lx = std::max(lx, std::abs(g.values[g.index(ix + 1, iy, iz)] - v) / h.x());
        if (iy + 1 < g.ny)
          ly = std::max(ly, std::abs(g.values[g.index(ix, iy + 1, iz)] - v) / h.y());
        if (iz + 1 < g.nz)
          lz = std::max(lz, std::abs(g.values[g.index(ix, iy, iz + 1)] - v) / h.z());
      }
  return std::sqrt(lx * lx + ly * ly + lz * lz);
}

NodeField bake(const AnalyticSdf& analytic, const Colorizer& colorizer, const Aabb& domain,
               int nx, int ny, int nz, double noise_amplitude, uint64_t seed) {
  if (nx < 2 || ny < 2 || nz < 2) throw Error("bake: dims must be >= 2 per axis");
  if (!domain.valid()) throw Error("bake: invalid domain");
  analytic.validate();

  NodeField f;
  f.sdf.domain = domain;
  f.sdf.nx = nx;
  f.sdf.ny = ny;
  f.sdf.nz = nz;
  f.sdf.values.resize(static_cast<size_t>(nx) * ny * nz);
  f.color = ColorGrid{};
  f.color->domain = domain;
  f.color->nx = nx;
  f.color->ny = ny;
  f.color->nz = nz;
  f.color->values.resize(3 * static_cast<size_t>(nx) * ny * nz);

  Rng rng(substream(seed, "bake-noise"));
  size_t idx = 0;
  for (int iz = 0; iz < nz; ++iz)
    for (int iy = 0; iy < ny; ++iy)
      for (int ix = 0; ix < nx; ++ix, ++idx) {
        Vec3 p = f.sdf.vertex_position(ix, iy, iz);
        double d = analytic.eval(p);
        if (noise_amplitude > 0.0) d += rng.uniform(-noise_amplitude, noise_amplitude);
        f.sdf.values[idx] = static_cast<float>(d);
        Rgb c = colorizer(p);
        for (int k = 0; k < 3; ++k)
          f.color->values[3 * idx + k] = static_cast<float>(std::clamp(c[k], 0.0, 1.0));
      }
  return f;
}

namespace {

constexpr char kMagic[4] = {'S', 'D', 'F', 'G'};
constexpr uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void get(std::ifstream& is, T& v, const char* what) {
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw Error(std::string("malformed header: short read of ") + what);
}

}  // namespace

void write_grid(const NodeField& f, const std::filesystem::path& path) {
  f.validate();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open for writing: " + path.string());
  os.write(kMagic, 4);
  put(os, kVersion);
  uint32_t dims[3] = {static_cast<uint32_t>(f.sdf.nx), static_cast<uint32_t>(f.sdf.ny),
                      static_cast<uint32_t>(f.sdf.nz)};
  os.write(reinterpret_cast<const char*>(dims), sizeof(dims));
  double box[6] = {f.sdf.domain.lo.x(), f.sdf.domain.lo.y(), f.sdf.domain.lo.z(),
                   f.sdf.domain.hi.x(), f.sdf.domain.hi.y(), f.sdf.domain.hi.z()};
  os.write(reinterpret_cast<const char*>(box), sizeof(box));
  uint8_t flags = f.color ? 1u : 0u;
  put(os, flags);
  os.write(reinterpret_cast<const char*>(f.sdf.values.data()),
           static_cast<std::streamsize>(f.sdf.values.size() * sizeof(float)));
  if (f.color)
    os.write(reinterpret_cast<const char*>(f.color->values.data()),
             static_cast<std::streamsize>(f.color->values.size() * sizeof(float)));
  if (!os) throw Error("write failed: " + path.string());
}

NodeField read_grid(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open: " + path.string());
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw Error("malformed header: bad magic in " + path.string());
  uint32_t version;
  get(is, version, "version");
  if (version != kVersion)
    throw Error(str_printf("malformed header: unsupported version %u", version));
  uint32_t dims[3];
  is.read(reinterpret_cast<char*>(dims), sizeof(dims));
  if (!is) throw Error("malformed header: short read of dims");
  if (dims[0] < 2 || dims[1] < 2 || dims[2] < 2 || dims[0] > (1u << 24) ||
      dims[1] > (1u << 24) || dims[2] > (1u << 24))
    throw Error("malformed header: invalid dims");
  double box[6];
  is.read(reinterpret_cast<char*>(box), sizeof(box));
  if (!is) throw Error("malformed header: short read of domain");
  uint8_t flags;
  get(is, flags, "flags");

  NodeField f;
  f.sdf.domain = {Vec3(box[0], box[1], box[2]), Vec3(box[3], box[4], box[5])};
  f.sdf.nx = static_cast<int>(dims[0]);
  f.sdf.ny = static_cast<int>(dims[1]);
  f.sdf.nz = static_cast<int>(dims[2]);
  size_t n = static_cast<size_t>(dims[0]) * dims[1] * dims[2];
  size_t expected = n * sizeof(float);
  if (flags & 1) expected += 3 * n * sizeof(float);

  auto header_end = is.tellg();
  is.seekg(0, std::ios::end);
  size_t payload = static_cast<size_t>(is.tellg() - header_end);
  is.seekg(header_end);
  if (payload < expected) throw Error("truncated payload in " + path.string());
  if (payload > expected)
    throw Error("dims/payload-length mismatch in " + path.string());

  f.sdf.values.resize(n);
  is.read(reinterpret_cast<char*>(f.sdf.values.data()),
          static_cast<std::streamsize>(n * sizeof(float)));
  if (!is) throw Error("truncated payload in " + path.string());
  if (flags & 1) {
    f.color = ColorGrid{};
    f.color->domain = f.sdf.domain;
    f.color->nx = f.sdf.nx;
    f.color->ny = f.sdf.ny;
    f.color->nz = f.sdf.nz;
    f.color->values.resize(3 * n);
    is.read(reinterpret_cast<char*>(f.color->values.data()),
            static_cast<std::streamsize>(3 * n * sizeof(float)));
    if (!is) throw Error("truncated payload in " + path.string());
  }
  f.validate();
  return f;
}

}  // namespace sdfuse
