#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <vector>

#include "sdfuse/common.hpp"

namespace sdfuse {

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<Rgb> colors;  // optional, per-vertex when non-empty

  bool empty() const { return triangles.empty(); }
  void validate() const;
  Vec3 centroid() const;
  Aabb bounding_box() const;
};

using FieldEval = std::function<double(const Vec3&)>;

/// Standard 256-case marching cubes over a sampled lattice of
/// nx*ny*nz vertices spanning `region` ((n-1) cells per axis), with linear
/// edge interpolation and vertices shared along common lattice edges.
/// Field sampling runs cell-parallel under Exec::parallel; triangle
/// assembly is serial either way, so output is deterministic.
TriangleMesh marching_cubes(const FieldEval& field, const Aabb& region, int nx, int ny, int nz,
                            double iso = 0.0, Exec exec = Exec::parallel);

/// ASCII OBJ: v records (with rgb extension when colors present), 1-based
/// f records.
void export_obj(const TriangleMesh& mesh, const std::filesystem::path& path);
TriangleMesh import_obj(const std::filesystem::path& path);

/// Binary little-endian PLY: float32 x,y,z (+ uchar rgb when colors
/// present), uchar-counted int32 face lists.
void export_ply(const TriangleMesh& mesh, const std::filesystem::path& path);
TriangleMesh import_ply(const std::filesystem::path& path);

/// Area-weighted triangle selection then uniform barycentric sampling;
/// seeded and reproducible.
std::vector<Vec3> sample_surface(const TriangleMesh& mesh, size_t n, uint64_t seed);

/// Exact nearest-neighbor queries on a point set (median-split kd-tree).
class PointKdTree {
 public:
  explicit PointKdTree(std::vector<Vec3> points);
  /// Squared distance to the closest point and its index.
  std::pair<double, size_t> nearest_sq(const Vec3& q) const;
  size_t size() const { return points_.size(); }

 private:
  struct Node {
    int axis = -1;       // -1 for leaf
    double split = 0.0;
    int left = -1, right = -1;
    uint32_t begin = 0, end = 0;
  };
  int build(uint32_t begin, uint32_t end);
  void query(int node, const Vec3& q, double& best, size_t& best_idx) const;

  std::vector<Vec3> points_;
  std::vector<uint32_t> order_;
  std::vector<Node> nodes_;
};

/// Exact point-to-surface distance queries on a triangle mesh (AABB tree
/// with branch-and-bound traversal).
class TriangleBvh {
 public:
  explicit TriangleBvh(const TriangleMesh& mesh);
  /// Squared distance to the closest point of the mesh surface.
  double nearest_sq(const Vec3& q) const;

 private:
  struct Node {
    Aabb box;
    int left = -1, right = -1;
    uint32_t begin = 0, end = 0;
  };
  int build(uint32_t begin, uint32_t end);

  std::vector<std::array<Vec3, 3>> tris_;
  std::vector<uint32_t> order_;
  std::vector<Node> nodes_;
};

double point_triangle_dist_sq(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

/// Mean (squared by default) nearest-neighbor distance from each source
/// point to the target. One-directional.
double chamfer(const std::vector<Vec3>& source, const PointKdTree& target, bool squared = true,
               Exec exec = Exec::parallel);
double chamfer(const std::vector<Vec3>& source, const TriangleBvh& target, bool squared = true,
               Exec exec = Exec::parallel);

/// Harmonic mean of precision and recall at the distance threshold
/// (unsquared distances). Symmetric in its arguments.
double f_score(const std::vector<Vec3>& a, const std::vector<Vec3>& b, double threshold);

double mean_abs_sdf(const std::vector<Vec3>& points, const FieldEval& field);

struct MetricReport {
  double chamfer = 0.0;
  double f_score = 0.0;
  double mean_abs_sdf = 0.0;
  double threshold = 0.0;

  void validate() const;
  std::string to_text() const;   // key=value lines
  std::string to_csv_row() const;
  static const char* csv_header();
};

/// Per-vertex connected component ids (components joined by triangles).
std::vector<int> connected_components(const TriangleMesh& mesh, int* n_components = nullptr);

}  // namespace sdfuse
