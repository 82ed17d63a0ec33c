#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sdfuse/fields.hpp"
#include "sdfuse/manifest.hpp"
#include "sdfuse/render.hpp"
#include "sdfuse/transform.hpp"

namespace sdfuse {

struct CameraRigSpec {
  int cams_per_node = 14;
  int cams_per_edge = 12;
  /// Orbit radius as a multiple of the viewed region's half-diagonal.
  double orbit_radius_factor = 2.6;
  CameraIntrinsics intr{80.0, 80.0, 32.0, 32.0, 64, 64};
};

/// Bounds of the per-node random similarity that moves each node's content
/// into its own disturbed local frame.
struct DisturbanceSpec {
  double max_rotation_deg = 5.0;
  double max_translation = 0.05;
  double max_scale_dev = 0.05;  // s in [1-dev, 1+dev]
};

struct SceneSpec {
  AnalyticSdf scene;
  std::string colorizer_id = "trig";
  Aabb bbox{Vec3(-1, -1, -1), Vec3(1, 1, 1)};
  int partition[3] = {2, 1, 1};
  /// Adjacent node domains overlap by this fraction of the global range
  /// along each partitioned axis.
  double overlap_fraction = 0.2;
  int grid_dims = 65;
  CameraRigSpec rig;
  DisturbanceSpec disturbance;
  double bake_noise = 0.0;
  uint64_t seed = 0;
  /// Node 0 keeps an identity frame by default so the propagated global
  /// frame coincides with the scene frame.
  bool disturb_root = false;

  void validate() const;
};

struct GenResult {
  std::filesystem::path manifest_path;
  std::filesystem::path ground_truth_path;
  std::filesystem::path scene_path;
  std::vector<Aabb> node_boxes;  // global frame
  std::vector<SimilarityTransform> true_to_global;
  std::vector<std::string> warnings;
};

/// Partitions the scene bbox into overlapping node boxes, bakes each
/// node's field in a disturbed local frame, places camera rigs (per node,
/// plus shared rigs viewing each overlap so adjacent nodes share images),
/// and writes grids, pose files, manifest, ground-truth transforms and the
/// scene description under outdir.
GenResult gen_scene(const SceneSpec& spec, const std::filesystem::path& outdir);

/// The global node boxes of the partition, without baking anything.
std::vector<Aabb> partition_boxes(const Aabb& bbox, const int counts[3], double overlap_fraction);

/// Two-node scene whose grids hold the same plane offset by `delta`
/// against each other; written as an already-registered manifest.
/// Exhibits the min-union seam that softmax blending removes.
GenResult gen_conflict_planes(const std::filesystem::path& outdir, double delta = 0.052,
                              double overlap_half_width = 0.2, int grid_dims = 33);

SceneSpec preset_sphere_pair(uint64_t seed);
SceneSpec preset_grid25(uint64_t seed);

/// Uniform samples of the union surface clipped to the bbox; rejection
/// sampling against the composite interior. Exact for spheres and boxes;
/// planes require an axis-aligned normal.
std::vector<Vec3> analytic_surface_samples(const AnalyticSdf& scene, const Aabb& clip, size_t n,
                                           uint64_t seed);

/// w2c pose at `center` looking at `target`, camera y pointing down
/// relative to up_hint.
CameraPose look_at_pose(const Vec3& center, const Vec3& target,
                        const Vec3& up_hint = Vec3(0, 0, 1));

}  // namespace sdfuse
