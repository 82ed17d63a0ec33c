#include "sdfuse/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "mc_tables.hpp"

namespace sdfuse {

void TriangleMesh::validate() const {
  const int n = static_cast<int>(vertices.size());
  for (const auto& t : triangles) {
    for (int k : t)
      if (k < 0 || k >= n) throw Error("mesh: triangle index out of range");
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2])
      throw Error("mesh: degenerate triangle with repeated indices");
  }
  if (!colors.empty() && colors.size() != vertices.size())
    throw Error("mesh: per-vertex color count mismatch");
}

Vec3 TriangleMesh::centroid() const {
  if (vertices.empty()) throw Error("mesh: centroid of empty mesh");
  Vec3 c = Vec3::Zero();
  for (const Vec3& v : vertices) c += v;
  return c / static_cast<double>(vertices.size());
}

Aabb TriangleMesh::bounding_box() const {
  if (vertices.empty()) throw Error("mesh: bounding box of empty mesh");
  Aabb box{vertices[0], vertices[0]};
  for (const Vec3& v : vertices) box.grow(v);
  return box;
}

TriangleMesh marching_cubes(const FieldEval& field, const Aabb& region, int nx, int ny, int nz,
                            double iso, Exec exec) {
  if (nx < 2 || ny < 2 || nz < 2) throw Error("marching_cubes: resolution must be >= 2 per axis");
  if (!region.valid()) throw Error("marching_cubes: invalid region");

  const Vec3 h(region.extent().x() / (nx - 1), region.extent().y() / (ny - 1),
               region.extent().z() / (nz - 1));
  auto vertex_pos = [&](int ix, int iy, int iz) {
    return Vec3(region.lo.x() + ix * h.x(), region.lo.y() + iy * h.y(),
                region.lo.z() + iz * h.z());
  };
  auto lidx = [&](int ix, int iy, int iz) {
    return static_cast<size_t>(ix) +
           static_cast<size_t>(nx) * (static_cast<size_t>(iy) + static_cast<size_t>(ny) * iz);
  };

  std::vector<double> values(static_cast<size_t>(nx) * ny * nz);
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (int iz = 0; iz < nz; ++iz)
      for (int iy = 0; iy < ny; ++iy)
        for (int ix = 0; ix < nx; ++ix) values[lidx(ix, iy, iz)] = field(vertex_pos(ix, iy, iz));
  } else {
    for (int iz = 0; iz < nz; ++iz)
      for (int iy = 0; iy < ny; ++iy)
        for (int ix = 0; ix < nx; ++ix) values[lidx(ix, iy, iz)] = field(vertex_pos(ix, iy, iz));
  }

  TriangleMesh mesh;
  // Mesh vertex per crossed lattice edge; key = lower lattice vertex * 3 + axis.
  std::unordered_map<uint64_t, int> edge_vertex;

  auto edge_point = [&](int ax, int ay, int az, int bx, int by, int bz) -> int {
    size_t ia = lidx(ax, ay, az);
    size_t ib = lidx(bx, by, bz);
    int axis = (ax != bx) ? 0 : (ay != by) ? 1 : 2;
    if (ia > ib) {
      std::swap(ia, ib);
      std::swap(ax, bx);
      std::swap(ay, by);
      std::swap(az, bz);
    }
    uint64_t key = static_cast<uint64_t>(ia) * 3 + axis;
    auto it = edge_vertex.find(key);
    if (it != edge_vertex.end()) return it->second;
    double v0 = values[ia], v1 = values[ib];
    double t = (v1 == v0) ? 0.5 : (iso - v0) / (v1 - v0);
    t = std::clamp(t, 0.0, 1.0);
    Vec3 p0 = vertex_pos(ax, ay, az);
    Vec3 p1 = vertex_pos(bx, by, bz);
    int idx = static_cast<int>(mesh.vertices.size());
    mesh.vertices.push_back(p0 + t * (p1 - p0));
    edge_vertex.emplace(key, idx);
    return idx;
  };

  double corner_vals[8];
  int corner_xyz[8][3];
  int edge_idx[12];
  for (int iz = 0; iz + 1 < nz; ++iz) {
    for (int iy = 0; iy + 1 < ny; ++iy) {
      for (int ix = 0; ix + 1 < nx; ++ix) {
        int cube_index = 0;
        for (int c = 0; c < 8; ++c) {
          corner_xyz[c][0] = ix + mc::kCorner[c][0];
          corner_xyz[c][1] = iy + mc::kCorner[c][1];
          corner_xyz[c][2] = iz + mc::kCorner[c][2];
          corner_vals[c] = values[lidx(corner_xyz[c][0], corner_xyz[c][1], corner_xyz[c][2])];
          if (corner_vals[c] < iso) cube_index |= 1 << c;
        }
        int edges = mc::kEdgeTable[cube_index];
        if (edges == 0) continue;
        for (int e = 0; e < 12; ++e) {
          if (!(edges & (1 << e))) continue;
          const int* pa = corner_xyz[mc::kEdgeEnds[e][0]];
          const int* pb = corner_xyz[mc::kEdgeEnds[e][1]];
          edge_idx[e] = edge_point(pa[0], pa[1], pa[2], pb[0], pb[1], pb[2]);
        }
        const int* tri = mc::kTriTable[cube_index];
        for (int k = 0; tri[k] != -1; k += 3) {
          int a = edge_idx[tri[k]];
          int b = edge_idx[tri[k + 1]];
          int c = edge_idx[tri[k + 2]];
          if (a == b || b == c || a == c) continue;
          mesh.triangles.push_back({a, b, c});
        }
      }
    }
  }
  return mesh;
}

void export_obj(const TriangleMesh& mesh, const std::filesystem::path& path) {
  mesh.validate();
  std::ofstream os(path);
  if (!os) throw Error("cannot open for writing: " + path.string());
  const bool with_color = !mesh.colors.empty();
  for (size_t k = 0; k < mesh.vertices.size(); ++k) {
    const Vec3& v = mesh.vertices[k];
    os << str_printf("v %.9g %.9g %.9g", v.x(), v.y(), v.z());
    if (with_color) {
      const Rgb& c = mesh.colors[k];
      os << str_printf(" %.9g %.9g %.9g", c.x(), c.y(), c.z());
    }
    os << "\n";
  }
  for (const auto& t : mesh.triangles)
    os << "f " << t[0] + 1 << " " << t[1] + 1 << " " << t[2] + 1 << "\n";
  if (!os) throw Error("write failed: " + path.string());
}

TriangleMesh import_obj(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open: " + path.string());
  TriangleMesh mesh;
  std::string line;
  while (std::getline(is, line)) {
    if (line.rfind("v ", 0) == 0) {
      std::istringstream ls(line.substr(2));
      Vec3 v;
      ls >> v.x() >> v.y() >> v.z();
      if (!ls) throw Error("obj: bad vertex line: " + line);
      mesh.vertices.push_back(v);
      Rgb c;
      if (ls >> c.x() >> c.y() >> c.z()) mesh.colors.push_back(c);
    } else if (line.rfind("f ", 0) == 0) {
      std::istringstream ls(line.substr(2));
      std::array<int, 3> t;
      for (int k = 0; k < 3; ++k) {
        std::string tok;
        ls >> tok;
        if (tok.empty()) throw Error("obj: bad face line: " + line);
        t[k] = std::stoi(tok) - 1;  // ignore /vt/vn suffixes
      }
      mesh.triangles.push_back(t);
    }
  }
  if (!mesh.colors.empty() && mesh.colors.size() != mesh.vertices.size())
    throw Error("obj: inconsistent vertex colors");
  mesh.validate();
  return mesh;
}

void export_ply(const TriangleMesh& mesh, const std::filesystem::path& path) {
  mesh.validate();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open for writing: " + path.string());
  const bool with_color = !mesh.colors.empty();
  os << "ply\nformat binary_little_endian 1.0\n";
  os << "element vertex " << mesh.vertices.size() << "\n";
  os << "property float x\nproperty float y\nproperty float z\n";
  if (with_color) os << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  os << "element face " << mesh.triangles.size() << "\n";
  os << "property list uchar int vertex_indices\nend_header\n";
  for (size_t k = 0; k < mesh.vertices.size(); ++k) {
    float xyz[3] = {static_cast<float>(mesh.vertices[k].x()),
                    static_cast<float>(mesh.vertices[k].y()),
                    static_cast<float>(mesh.vertices[k].z())};
    os.write(reinterpret_cast<const char*>(xyz), sizeof(xyz));
    if (with_color) {
      uint8_t rgb[3];
      for (int c = 0; c < 3; ++c)
        rgb[c] = static_cast<uint8_t>(std::lround(255.0 * std::clamp(mesh.colors[k][c], 0.0, 1.0)));
      os.write(reinterpret_cast<const char*>(rgb), 3);
    }
  }
  for (const auto& t : mesh.triangles) {
    uint8_t n = 3;
    os.write(reinterpret_cast<const char*>(&n), 1);
    int32_t idx[3] = {t[0], t[1], t[2]};
    os.write(reinterpret_cast<const char*>(idx), sizeof(idx));
  }
  if (!os) throw Error("write failed: " + path.string());
}

TriangleMesh import_ply(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open: " + path.string());
  std::string line;
  size_t n_vert = 0, n_face = 0;
  bool with_color = false;
  bool in_vertex = false;
  if (!std::getline(is, line) || line != "ply") throw Error("ply: bad magic");
  if (!std::getline(is, line) || line != "format binary_little_endian 1.0")
    throw Error("ply: unsupported format");
  while (std::getline(is, line) && line != "end_header") {
    std::istringstream ls(line);
    std::string kw;
    ls >> kw;
    if (kw == "element") {
      std::string what;
      size_t count;
      ls >> what >> count;
      if (what == "vertex") {
        n_vert = count;
        in_vertex = true;
      } else if (what == "face") {
        n_face = count;
        in_vertex = false;
      }
    } else if (kw == "property" && in_vertex) {
      std::string type, name;
      ls >> type >> name;
      if (name == "red") with_color = true;
    }
  }
  TriangleMesh mesh;
  mesh.vertices.resize(n_vert);
  if (with_color) mesh.colors.resize(n_vert);
  for (size_t k = 0; k < n_vert; ++k) {
    float xyz[3];
    is.read(reinterpret_cast<char*>(xyz), sizeof(xyz));
    mesh.vertices[k] = Vec3(xyz[0], xyz[1], xyz[2]);
    if (with_color) {
      uint8_t rgb[3];
      is.read(reinterpret_cast<char*>(rgb), 3);
      mesh.colors[k] = Rgb(rgb[0] / 255.0, rgb[1] / 255.0, rgb[2] / 255.0);
    }
  }
  mesh.triangles.resize(n_face);
  for (size_t k = 0; k < n_face; ++k) {
    uint8_t n;
    is.read(reinterpret_cast<char*>(&n), 1);
    if (n != 3) throw Error("ply: only triangle faces supported");
    int32_t idx[3];
    is.read(reinterpret_cast<char*>(idx), sizeof(idx));
    mesh.triangles[k] = {idx[0], idx[1], idx[2]};
  }
  if (!is) throw Error("ply: truncated payload");
  mesh.validate();
  return mesh;
}

std::vector<Vec3> sample_surface(const TriangleMesh& mesh, size_t n, uint64_t seed) {
  if (mesh.empty()) throw Error("sample_surface: empty mesh");
  if (n < 1) throw Error("sample_surface: n must be >= 1");
  std::vector<double> cum(mesh.triangles.size());
  double total = 0.0;
  for (size_t k = 0; k < mesh.triangles.size(); ++k) {
    const auto& t = mesh.triangles[k];
    Vec3 ab = mesh.vertices[t[1]] - mesh.vertices[t[0]];
    Vec3 ac = mesh.vertices[t[2]] - mesh.vertices[t[0]];
    total += 0.5 * ab.cross(ac).norm();
    cum[k] = total;
  }
  if (!(total > 0.0)) throw Error("sample_surface: zero total area");

  Rng rng(substream(seed, "surface-sample"));
  std::vector<Vec3> points;
  points.reserve(n);
  for (size_t k = 0; k < n; ++k) {
    double u = rng.uniform() * total;
    size_t tri = std::upper_bound(cum.begin(), cum.end(), u) - cum.begin();
    if (tri >= cum.size()) tri = cum.size() - 1;
    const auto& t = mesh.triangles[tri];
    double r1 = rng.uniform();
    double r2 = rng.uniform();
    if (r1 + r2 > 1.0) {
      r1 = 1.0 - r1;
      r2 = 1.0 - r2;
    }
    const Vec3& a = mesh.vertices[t[0]];
    points.push_back(a + r1 * (mesh.vertices[t[1]] - a) + r2 * (mesh.vertices[t[2]] - a));
  }
  return points;
}

// ---------------------------------------------------------------------------
// spatial indices

PointKdTree::PointKdTree(std::vector<Vec3> points) : points_(std::move(points)) {
  if (points_.empty()) throw Error("kd-tree: empty point set");
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0u);
  nodes_.reserve(2 * points_.size() / 8 + 2);
  build(0, static_cast<uint32_t>(points_.size()));
}

int PointKdTree::build(uint32_t begin, uint32_t end) {
  int id = static_cast<int>(nodes_.size());
  nodes_.push_back({});
  if (end - begin <= 8) {
    nodes_[id].begin = begin;
    nodes_[id].end = end;
    return id;
  }
  Aabb box{points_[order_[begin]], points_[order_[begin]]};
  for (uint32_t k = begin; k < end; ++k) box.grow(points_[order_[k]]);
  int axis = 0;
  Vec3 ext = box.hi - box.lo;
  if (ext.y() > ext.x()) axis = 1;
  if (ext.z() > ext[axis]) axis = 2;
  uint32_t mid = (begin + end) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](uint32_t a, uint32_t b) { return points_[a][axis] < points_[b][axis]; });
  double split = points_[order_[mid]][axis];
  int left = build(begin, mid);
  int right = build(mid, end);
  nodes_[id].axis = axis;
  nodes_[id].split = split;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void PointKdTree::query(int node, const Vec3& q, double& best, size_t& best_idx) const {
  const Node& n = nodes_[node];
  if (n.axis < 0) {
    for (uint32_t k = n.begin; k < n.end; ++k) {
      double d = (points_[order_[k]] - q).squaredNorm();
      if (d < best) {
        best = d;
        best_idx = order_[k];
      }
    }
    return;
  }
  double delta = q[n.axis] - n.split;
  int near = delta < 0 ? n.left : n.right;
  int far = delta < 0 ? n.right : n.left;
  query(near, q, best, best_idx);
  if (delta * delta < best) query(far, q, best, best_idx);
}

std::pair<double, size_t> PointKdTree::nearest_sq(const Vec3& q) const {
  double best = std::numeric_limits<double>::infinity();
  size_t best_idx = 0;
  query(0, q, best, best_idx);
  return {best, best_idx};
}

double point_triangle_dist_sq(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  Vec3 ab = b - a, ac = c - a, ap = p - a;
  double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return ap.squaredNorm();
  Vec3 bp = p - b;
  double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return bp.squaredNorm();
  double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    double v = d1 / (d1 - d3);
    return (ap - v * ab).squaredNorm();
  }
  Vec3 cp = p - c;
  double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return cp.squaredNorm();
  double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    double w = d2 / (d2 - d6);
    return (ap - w * ac).squaredNorm();
  }
  double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && d4 - d3 >= 0.0 && d5 - d6 >= 0.0) {
    double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return (p - (b + w * (c - b))).squaredNorm();
  }
  double denom = va + vb + vc;
  if (!(denom > 0.0)) {
    // degenerate triangle: closest edge point
    double best = ap.squaredNorm();
    for (auto [u, v] : {std::pair{a, b}, std::pair{b, c}, std::pair{c, a}}) {
      Vec3 uv = v - u;
      double len2 = uv.squaredNorm();
      double t = len2 > 0 ? std::clamp((p - u).dot(uv) / len2, 0.0, 1.0) : 0.0;
      best = std::min(best, (p - (u + t * uv)).squaredNorm());
    }
    return best;
  }
  double v = vb / denom, w = vc / denom;
  return (p - (a + v * ab + w * ac)).squaredNorm();
}

TriangleBvh::TriangleBvh(const TriangleMesh& mesh) {
  if (mesh.empty()) throw Error("triangle bvh: empty mesh");
  tris_.reserve(mesh.triangles.size());
  for (const auto& t : mesh.triangles)
    tris_.push_back({mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]});
  order_.resize(tris_.size());
  std::iota(order_.begin(), order_.end(), 0u);
  build(0, static_cast<uint32_t>(tris_.size()));
}

int TriangleBvh::build(uint32_t begin, uint32_t end) {
  int id = static_cast<int>(nodes_.size());
  nodes_.push_back({});
  Aabb box{tris_[order_[begin]][0], tris_[order_[begin]][0]};
  for (uint32_t k = begin; k < end; ++k)
    for (const Vec3& v : tris_[order_[k]]) box.grow(v);
  nodes_[id].box = box;
  if (end - begin <= 4) {
    nodes_[id].begin = begin;
    nodes_[id].end = end;
    return id;
  }
  Vec3 ext = box.hi - box.lo;
  int axis = 0;
  if (ext.y() > ext.x()) axis = 1;
  if (ext.z() > ext[axis]) axis = 2;
  uint32_t mid = (begin + end) / 2;
  auto centroid = [&](uint32_t k) {
    return (tris_[k][0][axis] + tris_[k][1][axis] + tris_[k][2][axis]) / 3.0;
  };
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](uint32_t a, uint32_t b) { return centroid(a) < centroid(b); });
  int left = build(begin, mid);
  int right = build(mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

double TriangleBvh::nearest_sq(const Vec3& q) const {
  double best = std::numeric_limits<double>::infinity();
  // explicit stack, nearer child first
  int stack[64];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& n = nodes_[stack[--top]];
    Vec3 d = q - n.box.clamp_point(q);
    if (d.squaredNorm() >= best) continue;
    if (n.left < 0) {
      for (uint32_t k = n.begin; k < n.end; ++k) {
        const auto& t = tris_[order_[k]];
        best = std::min(best, point_triangle_dist_sq(q, t[0], t[1], t[2]));
      }
      continue;
    }
    double dl = (q - nodes_[n.left].box.clamp_point(q)).squaredNorm();
    double dr = (q - nodes_[n.right].box.clamp_point(q)).squaredNorm();
    if (dl < dr) {
      if (top < 62) {
        stack[top++] = n.right;
        stack[top++] = n.left;
      }
    } else {
      if (top < 62) {
        stack[top++] = n.left;
        stack[top++] = n.right;
      }
    }
  }
  return best;
}

namespace {

template <typename NearestSq>
double chamfer_impl(const std::vector<Vec3>& source, const NearestSq& nn, bool squared,
                    Exec exec) {
  if (source.empty()) throw Error("chamfer: empty source point set");
  std::vector<double> slots(source.size());
  const int n = static_cast<int>(source.size());
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (int k = 0; k < n; ++k) {
      double d2 = nn(source[k]);
      slots[k] = squared ? d2 : std::sqrt(d2);
    }
  } else {
    for (int k = 0; k < n; ++k) {
      double d2 = nn(source[k]);
      slots[k] = squared ? d2 : std::sqrt(d2);
    }
  }
  KahanSum sum;
  for (double v : slots) sum.add(v);
  return sum.sum / static_cast<double>(source.size());
}

}  // namespace

double chamfer(const std::vector<Vec3>& source, const PointKdTree& target, bool squared,
               Exec exec) {
  return chamfer_impl(
      source, [&](const Vec3& q) { return target.nearest_sq(q).first; }, squared, exec);
}

double chamfer(const std::vector<Vec3>& source, const TriangleBvh& target, bool squared,
               Exec exec) {
  return chamfer_impl(
      source, [&](const Vec3& q) { return target.nearest_sq(q); }, squared, exec);
}

double f_score(const std::vector<Vec3>& a, const std::vector<Vec3>& b, double threshold) {
  if (a.empty() || b.empty()) throw Error("f_score: empty point set");
  if (!(threshold > 0.0)) throw Error("f_score: threshold must be positive");
  PointKdTree tree_a(a);
  PointKdTree tree_b(b);
  const double t2 = threshold * threshold;
  size_t hits_a = 0, hits_b = 0;
  for (const Vec3& p : a)
    if (tree_b.nearest_sq(p).first <= t2) ++hits_a;
  for (const Vec3& p : b)
    if (tree_a.nearest_sq(p).first <= t2) ++hits_b;
  double precision = static_cast<double>(hits_a) / static_cast<double>(a.size());
  double recall = static_cast<double>(hits_b) / static_cast<double>(b.size());
  if (precision + recall <= 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

double mean_abs_sdf(const std::vector<Vec3>& points, const FieldEval& field) {
  if (points.empty()) throw Error("mean_abs_sdf: empty point set");
  KahanSum sum;
  for (const Vec3& p : points) sum.add(std::abs(field(p)));
  return sum.sum / static_cast<double>(points.size());
}

void MetricReport::validate() const {
  if (!(chamfer >= 0.0)) throw Error("metric report: chamfer must be >= 0");
  if (!(f_score >= 0.0 && f_score <= 1.0)) throw Error("metric report: f_score must be in [0,1]");
}

std::string MetricReport::to_text() const {
  return str_printf("chamfer=%.17g\nf_score=%.17g\nmean_abs_sdf=%.17g\nthreshold=%.17g\n",
                    chamfer, f_score, mean_abs_sdf, threshold);
}

std::string MetricReport::to_csv_row() const {
  return str_printf("%.17g,%.17g,%.17g,%.17g", chamfer, f_score, mean_abs_sdf, threshold);
}

const char* MetricReport::csv_header() { return "chamfer,f_score,mean_abs_sdf,threshold"; }

std::vector<int> connected_components(const TriangleMesh& mesh, int* n_components) {
  std::vector<int> parent(mesh.vertices.size());
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  auto unite = [&](int x, int y) { parent[find(x)] = find(y); };
  for (const auto& t : mesh.triangles) {
    unite(t[0], t[1]);
    unite(t[1], t[2]);
  }
  std::vector<int> comp(mesh.vertices.size());
  std::unordered_map<int, int> remap;
  int next = 0;
  for (size_t k = 0; k < mesh.vertices.size(); ++k) {
    int r = find(static_cast<int>(k));
    auto it = remap.find(r);
    if (it == remap.end()) it = remap.emplace(r, next++).first;
    comp[k] = it->second;
  }
  if (n_components) *n_components = next;
  return comp;
}

}  // namespace sdfuse
