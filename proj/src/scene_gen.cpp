#include "sdfuse/scene_gen.hpp"

#include <algorithm>
#include <cmath>

namespace sdfuse {

void SceneSpec::validate() const {
  if (!bbox.valid()) throw Error("scene spec: invalid bbox");
  if (!(overlap_fraction > 0.0 && overlap_fraction < 0.5))
    throw Error("scene spec: overlap fraction must be in (0, 0.5)");
  for (int c : partition)
    if (c < 1) throw Error("scene spec: partition counts must be >= 1");
  if (grid_dims < 2) throw Error("scene spec: grid dims must be >= 2");
  if (rig.cams_per_node < 2) throw Error("scene spec: need at least 2 cameras per node");
  scene.validate();
  rig.intr.validate();
}

std::vector<Aabb> partition_boxes(const Aabb& bbox, const int counts[3],
                                  double overlap_fraction) {
  Vec3 ext = bbox.extent();
  std::vector<Aabb> boxes;
  for (int kz = 0; kz < counts[2]; ++kz)
    for (int ky = 0; ky < counts[1]; ++ky)
      for (int kx = 0; kx < counts[0]; ++kx) {
        int idx[3] = {kx, ky, kz};
        Aabb b;
        for (int a = 0; a < 3; ++a) {
          double cell = ext[a] / counts[a];
          double pad = 0.5 * overlap_fraction * ext[a];
          double lo = bbox.lo[a] + idx[a] * cell - (idx[a] > 0 ? pad : 0.0);
          double hi = bbox.lo[a] + (idx[a] + 1) * cell + (idx[a] + 1 < counts[a] ? pad : 0.0);
          b.lo[a] = lo;
          b.hi[a] = hi;
        }
        boxes.push_back(b);
      }
  return boxes;
}

CameraPose look_at_pose(const Vec3& center, const Vec3& target, const Vec3& up_hint) {
  Vec3 z = (target - center).normalized();
  Vec3 x = z.cross(up_hint);
  if (x.norm() < 1e-6) x = z.cross(Vec3(1, 0, 0));
  x.normalize();
  Vec3 y = z.cross(x);  // y points "down" against up_hint
  CameraPose pose;
  pose.R.row(0) = x;
  pose.R.row(1) = y;
  pose.R.row(2) = z;
  pose.T = -pose.R * center;
  return pose;
}

namespace {

std::vector<Vec3> fibonacci_sphere(int n) {
  std::vector<Vec3> dirs;
  dirs.reserve(n);
  const double golden = M_PI * (3.0 - std::sqrt(5.0));
  for (int t = 0; t < n; ++t) {
    double z = 1.0 - 2.0 * (t + 0.5) / n;
    double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    double phi = golden * t;
    dirs.emplace_back(r * std::cos(phi), r * std::sin(phi), z);
  }
  return dirs;
}

// Pose of a global camera expressed in a node's local frame: the 3x4
// product of the global pose with the node's to-global homogeneous matrix.
CameraPose pose_in_local_frame(const CameraPose& global_pose, const SimilarityTransform& g) {
  CameraPose local;
  local.R = global_pose.R * g.R;
  local.T = global_pose.R * g.T + g.s * global_pose.T;
  return local;
}

NodeField bake_fn(const std::function<double(const Vec3&)>& sdf, const Colorizer& colorizer,
                  const Aabb& domain, int dims, double noise, uint64_t seed) {
  NodeField f;
  f.sdf.domain = domain;
  f.sdf.nx = f.sdf.ny = f.sdf.nz = dims;
  f.sdf.values.resize(static_cast<size_t>(dims) * dims * dims);
  f.color = ColorGrid{};
  f.color->domain = domain;
  f.color->nx = f.color->ny = f.color->nz = dims;
  f.color->values.resize(3 * f.sdf.values.size());
  Rng rng(substream(seed, "bake-noise"));
  size_t idx = 0;
  for (int iz = 0; iz < dims; ++iz)
    for (int iy = 0; iy < dims; ++iy)
      for (int ix = 0; ix < dims; ++ix, ++idx) {
        Vec3 p = f.sdf.vertex_position(ix, iy, iz);
        double d = sdf(p);
        if (noise > 0.0) d += rng.uniform(-noise, noise);
        f.sdf.values[idx] = static_cast<float>(d);
        Rgb c = colorizer(p);
        for (int k = 0; k < 3; ++k)
          f.color->values[3 * idx + k] = static_cast<float>(std::clamp(c[k], 0.0, 1.0));
      }
  return f;
}

Aabb local_domain_of(const Aabb& global_box, const SimilarityTransform& g) {
  Aabb local;
  bool first = true;
  for (int c = 0; c < 8; ++c) {
    Vec3 corner((c & 1) ? global_box.hi.x() : global_box.lo.x(),
                (c & 2) ? global_box.hi.y() : global_box.lo.y(),
                (c & 4) ? global_box.hi.z() : global_box.lo.z());
    Vec3 l = g.apply_inverse(corner);
    if (first) {
      local = {l, l};
      first = false;
    } else {
      local.grow(l);
    }
  }
  return local;
}

}  // namespace

GenResult gen_scene(const SceneSpec& spec, const std::filesystem::path& outdir) {
  spec.validate();
  std::filesystem::create_directories(outdir);

  GenResult res;
  res.node_boxes = partition_boxes(spec.bbox, spec.partition, spec.overlap_fraction);
  const int n = static_cast<int>(res.node_boxes.size());

  // True local-to-global similarity per node.
  for (int k = 0; k < n; ++k) {
    SimilarityTransform g;
    if (k != 0 || spec.disturb_root) {
      Rng rng(substream(spec.seed, "disturb", static_cast<uint64_t>(k)));
      Vec3 axis = rng.unit_vector();
      double angle = rng.uniform(0.0, spec.disturbance.max_rotation_deg * M_PI / 180.0);
      g.R = Eigen::AngleAxisd(angle, axis).toRotationMatrix();
      g.T = Vec3(rng.uniform(-spec.disturbance.max_translation, spec.disturbance.max_translation),
                 rng.uniform(-spec.disturbance.max_translation, spec.disturbance.max_translation),
                 rng.uniform(-spec.disturbance.max_translation, spec.disturbance.max_translation));
      g.s = 1.0 + rng.uniform(-spec.disturbance.max_scale_dev, spec.disturbance.max_scale_dev);
    }
    res.true_to_global.push_back(g);
  }

  Colorizer colorizer = make_colorizer(spec.colorizer_id);

  // Global camera rigs. Per-node rigs view the node box; per-overlap rigs
  // view the overlap region and appear in both nodes' pose files.
  struct GlobalCamera {
    std::string id;
    CameraPose pose;
  };
  std::vector<GlobalCamera> cameras;
  std::vector<std::vector<int>> members(n);  // camera indices per node

  for (int k = 0; k < n; ++k) {
    const Aabb& box = res.node_boxes[k];
    double radius = spec.rig.orbit_radius_factor * 0.5 * box.diagonal();
    auto dirs = fibonacci_sphere(spec.rig.cams_per_node);
    for (int t = 0; t < spec.rig.cams_per_node; ++t) {
      GlobalCamera cam;
      cam.id = str_printf("n%02d_c%03d", k, t);
      cam.pose = look_at_pose(box.center() + radius * dirs[t], box.center());
      members[k].push_back(static_cast<int>(cameras.size()));
      cameras.push_back(std::move(cam));
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      Aabb overlap = Aabb::intersection(res.node_boxes[i], res.node_boxes[j]);
      if (!overlap.valid()) continue;
      double radius = spec.rig.orbit_radius_factor * 0.5 * overlap.diagonal();
      auto dirs = fibonacci_sphere(spec.rig.cams_per_edge);
      for (int t = 0; t < spec.rig.cams_per_edge; ++t) {
        GlobalCamera cam;
        cam.id = str_printf("e%02d-%02d_c%03d", i, j, t);
        cam.pose = look_at_pose(overlap.center() + radius * dirs[t], overlap.center());
        members[i].push_back(static_cast<int>(cameras.size()));
        members[j].push_back(static_cast<int>(cameras.size()));
        cameras.push_back(std::move(cam));
      }
    }
  }

  Manifest manifest;
  for (int k = 0; k < n; ++k) {
    const SimilarityTransform& g = res.true_to_global[k];
    Aabb local = local_domain_of(res.node_boxes[k], g);

    // Local field: the analytic scene pulled into the disturbed frame;
    // SDF values scale by s (local lengths are s times global lengths).
    auto local_sdf = [&](const Vec3& x) { return g.s * spec.scene.eval(g.apply(x)); };
    auto local_color = [&](const Vec3& x) { return colorizer(g.apply(x)); };
    NodeField field = bake_fn(local_sdf, local_color, local, spec.grid_dims, spec.bake_noise,
                              substream(spec.seed, "bake", static_cast<uint64_t>(k)));

    float min_abs = std::numeric_limits<float>::infinity();
    for (float v : field.sdf.values) min_abs = std::min(min_abs, std::abs(v));
    if (min_abs > 2.0f * static_cast<float>(field.sdf.spacing().maxCoeff()))
      res.warnings.push_back(str_printf("node %d has no surface content", k));

    std::string grid_name = str_printf("node%02d.sdfg", k);
    write_grid(field, outdir / grid_name);

    std::vector<GraphNode::PoseEntry> entries;
    std::vector<std::string> ids;
    for (int cam_idx : members[k]) {
      const GlobalCamera& cam = cameras[cam_idx];
      GraphNode::PoseEntry e;
      e.image_id = cam.id;
      e.pose = pose_in_local_frame(cam.pose, g);
      e.intr = spec.rig.intr;
      entries.push_back(std::move(e));
      ids.push_back(cam.id);
    }
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) { return a.image_id < b.image_id; });
    std::sort(ids.begin(), ids.end());
    std::string pose_name = str_printf("node%02d_poses.json", k);
    write_pose_file(entries, outdir / pose_name);

    ManifestNode mn;
    mn.id = k;
    mn.grid_path = grid_name;
    mn.pose_path = pose_name;
    mn.domain = local;
    mn.image_ids = std::move(ids);
    manifest.nodes.push_back(std::move(mn));
  }

  res.manifest_path = outdir / "manifest.json";
  write_manifest(manifest, res.manifest_path);

  std::vector<std::pair<NodeId, SimilarityTransform>> gt;
  for (int k = 0; k < n; ++k) gt.emplace_back(k, res.true_to_global[k]);
  res.ground_truth_path = outdir / "ground_truth.txt";
  write_ground_truth(gt, res.ground_truth_path);

  SceneDescription desc{spec.scene, spec.colorizer_id, spec.bbox};
  res.scene_path = outdir / "scene.json";
  write_scene_description(desc, res.scene_path);
  return res;
}

GenResult gen_conflict_planes(const std::filesystem::path& outdir, double delta,
                              double overlap_half_width, int grid_dims) {
  if (!(overlap_half_width > 0.0 && overlap_half_width < 1.0))
    throw Error("conflict scene: overlap half-width must be in (0,1)");
  std::filesystem::create_directories(outdir);

  GenResult res;
  const double m = overlap_half_width;
  res.node_boxes = {Aabb{Vec3(-1, -1, -1), Vec3(m, 1, 1)}, Aabb{Vec3(-m, -1, -1), Vec3(1, 1, 1)}};
  res.true_to_global = {SimilarityTransform::identity(), SimilarityTransform::identity()};

  Colorizer gray = make_colorizer("constant:0.7,0.7,0.7");
  Manifest manifest;
  for (int k = 0; k < 2; ++k) {
    AnalyticSdf plane = AnalyticSdf::plane(Vec3(0, 0, 1), k == 0 ? 0.0 : delta);
    NodeField field = bake(plane, gray, res.node_boxes[k], grid_dims, grid_dims, grid_dims);
    std::string grid_name = str_printf("node%02d.sdfg", k);
    write_grid(field, outdir / grid_name);
    ManifestNode mn;
    mn.id = k;
    mn.grid_path = grid_name;
    mn.domain = res.node_boxes[k];
    mn.to_global = SimilarityTransform::identity().homogeneous();
    manifest.nodes.push_back(std::move(mn));
  }
  res.manifest_path = outdir / "manifest.json";
  write_manifest(manifest, res.manifest_path);
  return res;
}

SceneSpec preset_sphere_pair(uint64_t seed) {
  SceneSpec spec;
  spec.scene = AnalyticSdf::sphere(Vec3(-0.45, 0, 0), 0.42);
  spec.scene.add(AnalyticSdf::Sphere{Vec3(0.45, 0, 0), 0.42});
  spec.colorizer_id = "trig";
  spec.bbox = {Vec3(-1, -1, -1), Vec3(1, 1, 1)};
  spec.partition[0] = 2;
  spec.partition[1] = 1;
  spec.partition[2] = 1;
  spec.overlap_fraction = 0.2;
  spec.grid_dims = 65;
  spec.seed = seed;
  return spec;
}

SceneSpec preset_grid25(uint64_t seed) {
  SceneSpec spec;
  spec.scene = AnalyticSdf::plane(Vec3(0, 0, 1), -0.2);
  spec.scene.add(AnalyticSdf::Sphere{Vec3(-0.5, -0.5, 0.05), 0.25});
  spec.scene.add(AnalyticSdf::Sphere{Vec3(0.5, 0.5, 0.1), 0.3});
  spec.scene.add(AnalyticSdf::Sphere{Vec3(0.1, -0.4, 0.0), 0.2});
  spec.colorizer_id = "trig";
  spec.bbox = {Vec3(-1, -1, -1), Vec3(1, 1, 1)};
  spec.partition[0] = 5;
  spec.partition[1] = 5;
  spec.partition[2] = 1;
  spec.overlap_fraction = 0.1;
  spec.grid_dims = 33;
  spec.rig.cams_per_node = 10;
  spec.rig.cams_per_edge = 8;
  spec.seed = seed;
  return spec;
}

std::vector<Vec3> analytic_surface_samples(const AnalyticSdf& scene, const Aabb& clip, size_t n,
                                           uint64_t seed) {
  scene.validate();
  if (scene.shapes.empty()) throw Error("surface samples: empty scene");

  // Proposal areas per primitive (upper bounds are fine for rejection).
  std::vector<double> cum;
  double total = 0.0;
  for (const auto& shape : scene.shapes) {
    double area;
    if (const auto* sp = std::get_if<AnalyticSdf::Sphere>(&shape)) {
      area = 4.0 * M_PI * sp->radius * sp->radius;
    } else if (const auto* bx = std::get_if<AnalyticSdf::Box>(&shape)) {
      const Vec3& h = bx->half_extents;
      area = 8.0 * (h.x() * h.y() + h.y() * h.z() + h.x() * h.z());
    } else {
      const auto& pl = std::get<AnalyticSdf::Plane>(shape);
      int axis = -1;
      for (int k = 0; k < 3; ++k)
        if (std::abs(std::abs(pl.normal[k]) - 1.0) < 1e-9) axis = k;
      if (axis < 0) throw Error("surface samples: plane normal must be axis-aligned");
      Vec3 ext = clip.extent();
      area = ext[(axis + 1) % 3] * ext[(axis + 2) % 3];
    }
    total += area;
    cum.push_back(total);
  }

  Rng rng(substream(seed, "analytic-surface"));
  std::vector<Vec3> points;
  points.reserve(n);
  size_t attempts = 0;
  const size_t max_attempts = 1000 * n + 100000;
  while (points.size() < n) {
    if (++attempts > max_attempts)
      throw Error("surface samples: rejection sampling failed to converge");
    double u = rng.uniform() * total;
    size_t si = std::upper_bound(cum.begin(), cum.end(), u) - cum.begin();
    if (si >= scene.shapes.size()) si = scene.shapes.size() - 1;
    const auto& shape = scene.shapes[si];
    Vec3 p;
    if (const auto* sp = std::get_if<AnalyticSdf::Sphere>(&shape)) {
      p = sp->center + sp->radius * rng.unit_vector();
    } else if (const auto* bx = std::get_if<AnalyticSdf::Box>(&shape)) {
      const Vec3& h = bx->half_extents;
      double ax = h.y() * h.z(), ay = h.x() * h.z(), az = h.x() * h.y();
      double pick = rng.uniform() * (ax + ay + az);
      int axis = pick < ax ? 0 : (pick < ax + ay ? 1 : 2);
      double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
      p = bx->center;
      p[axis] += sign * h[axis];
      p[(axis + 1) % 3] += rng.uniform(-h[(axis + 1) % 3], h[(axis + 1) % 3]);
      p[(axis + 2) % 3] += rng.uniform(-h[(axis + 2) % 3], h[(axis + 2) % 3]);
    } else {
      const auto& pl = std::get<AnalyticSdf::Plane>(shape);
      int axis = std::abs(pl.normal.x()) > 0.5 ? 0 : (std::abs(pl.normal.y()) > 0.5 ? 1 : 2);
      p[axis] = pl.offset * (pl.normal[axis] > 0 ? 1.0 : -1.0);
      p[(axis + 1) % 3] = rng.uniform(clip.lo[(axis + 1) % 3], clip.hi[(axis + 1) % 3]);
      p[(axis + 2) % 3] = rng.uniform(clip.lo[(axis + 2) % 3], clip.hi[(axis + 2) % 3]);
    }
    if (!clip.contains(p)) continue;
    // On the union surface only where no other shape covers the point.
    if (scene.eval(p) < -1e-12) continue;
    points.push_back(p);
  }
  return points;
}

}  // namespace sdfuse
