#pragma once

#include <map>
#include <string>
#include <vector>

#include "sdfuse/fields.hpp"
#include "sdfuse/render.hpp"
#include "sdfuse/transform.hpp"

namespace sdfuse {

using NodeId = int;

/// One node of the SDF graph: a local field, the ids of the images it was
/// built from, their camera poses in the node's own frame, and the node's
/// transform into the global frame (identity until propagation).
struct GraphNode {
  NodeId id = 0;
  Aabb domain;  // node-local frame
  NodeField field;
  std::vector<std::string> image_ids;  // sorted, unique

  struct PoseEntry {
    std::string image_id;
    CameraPose pose;
    CameraIntrinsics intr;
  };
  std::vector<PoseEntry> poses;  // sorted by image_id

  SimilarityTransform to_global;

  const PoseEntry* find_pose(const std::string& image_id) const;
};

/// Overlap edge: endpoints i < j, the shared image ids, and an MST weight
/// of 1/|shared| (more shared images register better).
struct GraphEdge {
  NodeId i = 0, j = 0;
  std::vector<std::string> shared_ids;
  double weight = 0.0;
};

struct SdfGraph {
  std::vector<GraphNode> nodes;
  std::vector<GraphEdge> edges;

  const GraphNode& node(NodeId id) const;
  GraphNode& node(NodeId id);
};

/// One edge per unordered node pair with intersecting image-id sets.
/// Throws when the resulting graph is not a single connected component,
/// naming the components.
std::vector<GraphEdge> build_edges(const std::vector<GraphNode>& nodes);

/// Kruskal MST, |edges| = n-1, ties broken by lexicographic endpoint
/// order so the result is independent of edge-list permutation.
std::vector<GraphEdge> minimum_spanning_tree(size_t n_nodes, const std::vector<GraphEdge>& edges);

/// Canonical (i < j) edge key.
struct EdgeKey {
  NodeId i, j;
  EdgeKey(NodeId a, NodeId b) : i(std::min(a, b)), j(std::max(a, b)) {}
  auto operator<=>(const EdgeKey&) const = default;
};

/// Transform per edge, mapping node-j coordinates into node-i coordinates
/// (x_i = apply(x_j) for the canonical i < j orientation).
using EdgeTransforms = std::map<EdgeKey, SimilarityTransform>;

/// Walks the MST from `root` composing edge transforms; fills every node's
/// to_global. to_global(root) == identity.
void propagate_transforms(SdfGraph& graph, const std::vector<GraphEdge>& mst, NodeId root,
                          const EdgeTransforms& edge_transforms);

}  // namespace sdfuse
