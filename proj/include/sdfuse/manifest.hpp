#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sdfuse/fields.hpp"
#include "sdfuse/graph.hpp"

namespace sdfuse {

/// JSON pose file: {"images": [{"image_id", "R" (9, row-major), "T" (3),
/// "fx","fy","cx","cy","width","height"}, ...]}
void write_pose_file(const std::vector<GraphNode::PoseEntry>& entries,
                     const std::filesystem::path& path);
std::vector<GraphNode::PoseEntry> read_pose_file(const std::filesystem::path& path);

/// One manifest node: paths are relative to the manifest file.
struct ManifestNode {
  NodeId id = 0;
  std::string grid_path;
  std::string pose_path;
  Aabb domain;
  std::vector<std::string> image_ids;
  std::optional<Mat4> to_global;  // homogeneous [[R,T],[0,s]], row-major in the file
};

struct Manifest {
  std::vector<ManifestNode> nodes;
  /// Optional precomputed edge transforms, j-frame -> i-frame for i < j.
  std::map<std::pair<NodeId, NodeId>, Mat4> edge_transforms;
};

void write_manifest(const Manifest& m, const std::filesystem::path& path);
Manifest read_manifest(const std::filesystem::path& path);

/// Loads grids and pose files referenced by the manifest into a graph
/// (edges not yet built). to_global defaults to identity when absent.
SdfGraph load_graph(const Manifest& m, const std::filesystem::path& manifest_path);

/// Text file of per-node true local-to-global transforms:
/// "node <id> <16 row-major values>".
void write_ground_truth(const std::vector<std::pair<NodeId, SimilarityTransform>>& transforms,
                        const std::filesystem::path& path);
std::vector<std::pair<NodeId, SimilarityTransform>> read_ground_truth(
    const std::filesystem::path& path);

/// JSON description of an analytic scene (shapes, colorizer, bbox);
/// written by gen so later stages can evaluate against ground truth.
struct SceneDescription {
  AnalyticSdf scene;
  std::string colorizer_id = "trig";
  Aabb bbox;
};

void write_scene_description(const SceneDescription& s, const std::filesystem::path& path);
SceneDescription read_scene_description(const std::filesystem::path& path);

/// Line-oriented key=value run log, echoed to stdout when verbose.
/// Truncates any previous log at the same path.
class RunLog {
 public:
  RunLog() = default;
  explicit RunLog(const std::filesystem::path& path, bool verbose = true);
  void put(const std::string& stage, const std::string& keyvals);

 private:
  std::shared_ptr<std::ofstream> out_;
  bool verbose_ = false;
};

}  // namespace sdfuse
