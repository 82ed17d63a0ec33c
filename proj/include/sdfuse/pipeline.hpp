#pragma once

#include <filesystem>
#include <optional>

#include "sdfuse/blend.hpp"
#include "sdfuse/manifest.hpp"
#include "sdfuse/mesh.hpp"
#include "sdfuse/registration.hpp"
#include "sdfuse/scene_gen.hpp"

namespace sdfuse {

struct PipelineConfig {
  std::filesystem::path manifest_path;
  std::filesystem::path outdir;
  NodeId root = 0;
  uint64_t seed = 0;
  RefineConfig refine;
  /// Skip rendering-supervised refinement; edge transforms come from the
  /// closed-form initialization alone.
  bool skip_refine = false;
  BlendConfig blend;
  double mask_tau = 0.5;
  std::optional<Aabb> mesh_region;
  int mc_res = 128;  // sample lattice per axis; cells = mc_res - 1
  /// Analytic scene description enabling ground-truth metrics.
  std::optional<std::filesystem::path> scene_path;
  bool write_renders = false;
  size_t metric_samples = 100000;
  bool verbose = true;
};

struct PipelineResult {
  std::filesystem::path registered_manifest;
  std::filesystem::path mesh_obj;
  std::filesystem::path mesh_ply;
  std::filesystem::path report_path;
  SdfGraph graph;  // fields loaded, to_global propagated
  std::vector<GraphEdge> mst;
  EdgeTransforms edge_transforms;
  TriangleMesh mesh;
  Aabb mesh_region;
  std::optional<MetricReport> metrics;
};

/// gen/graph/MST/register/propagate/blend/mesh/metrics, each stage's
/// outputs written under outdir. Fully deterministic for a fixed seed.
PipelineResult run_pipeline(const PipelineConfig& cfg);

/// Shared pose pairs of an edge, ordered by image id.
std::vector<PosePair> edge_pose_pairs(const SdfGraph& graph, const GraphEdge& edge);

/// Registered manifest (to_global per node, plus computed edge
/// transforms), with grid/pose paths re-resolved relative to `path`.
void write_registered_manifest(const Manifest& input,
                               const std::filesystem::path& input_path, const SdfGraph& graph,
                               const EdgeTransforms& transforms,
                               const std::filesystem::path& path);

}  // namespace sdfuse
