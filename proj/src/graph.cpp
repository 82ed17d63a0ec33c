#include "sdfuse/graph.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

namespace sdfuse {

const GraphNode::PoseEntry* GraphNode::find_pose(const std::string& image_id) const {
  for (const auto& p : poses)
    if (p.image_id == image_id) return &p;
  return nullptr;
}

const GraphNode& SdfGraph::node(NodeId id) const {
  for (const auto& n : nodes)
    if (n.id == id) return n;
  throw Error(str_printf("unknown node %d", id));
}

GraphNode& SdfGraph::node(NodeId id) {
  for (auto& n : nodes)
    if (n.id == id) return n;
  throw Error(str_printf("unknown node %d", id));
}

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[b] = a;
    return true;
  }
};

void check_dense_ids(const std::vector<GraphNode>& nodes) {
  std::set<NodeId> ids;
  for (const auto& n : nodes) ids.insert(n.id);
  if (ids.size() != nodes.size()) throw Error("duplicate node ids");
  if (!nodes.empty() && (*ids.begin() != 0 || *ids.rbegin() != static_cast<int>(nodes.size()) - 1))
    throw Error("node ids must be dense in [0, n)");
}

std::string components_string(size_t n, UnionFind& uf) {
  std::map<int, std::vector<int>> comps;
  for (size_t k = 0; k < n; ++k) comps[uf.find(static_cast<int>(k))].push_back(static_cast<int>(k));
  std::ostringstream os;
  bool first_comp = true;
  for (const auto& [root, members] : comps) {
    if (!first_comp) os << ",";
    first_comp = false;
    os << "{";
    for (size_t k = 0; k < members.size(); ++k) os << (k ? "," : "") << members[k];
    os << "}";
  }
  return os.str();
}

}  // namespace

std::vector<GraphEdge> build_edges(const std::vector<GraphNode>& nodes) {
  check_dense_ids(nodes);
  std::vector<const GraphNode*> by_id(nodes.size());
  for (const auto& n : nodes) by_id[n.id] = &n;

  std::vector<GraphEdge> edges;
  const int n = static_cast<int>(nodes.size());
  for (int i = 0; i < n; ++i) {
    std::vector<std::string> a = by_id[i]->image_ids;
    std::sort(a.begin(), a.end());
    for (int j = i + 1; j < n; ++j) {
      std::vector<std::string> b = by_id[j]->image_ids;
      std::sort(b.begin(), b.end());
      std::vector<std::string> shared;
      std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(shared));
      if (shared.empty()) continue;
      GraphEdge e;
      e.i = i;
      e.j = j;
      e.weight = 1.0 / static_cast<double>(shared.size());
      e.shared_ids = std::move(shared);
      edges.push_back(std::move(e));
    }
  }

  UnionFind uf(nodes.size());
  for (const auto& e : edges) uf.unite(e.i, e.j);
  int root = nodes.empty() ? 0 : uf.find(0);
  for (size_t k = 1; k < nodes.size(); ++k)
    if (uf.find(static_cast<int>(k)) != root)
      throw Error("disconnected: " + components_string(nodes.size(), uf));
  return edges;
}

std::vector<GraphEdge> minimum_spanning_tree(size_t n_nodes, const std::vector<GraphEdge>& edges) {
  std::vector<size_t> order(edges.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    const GraphEdge& ea = edges[a];
    const GraphEdge& eb = edges[b];
    if (ea.weight != eb.weight) return ea.weight < eb.weight;
    if (ea.i != eb.i) return ea.i < eb.i;
    return ea.j < eb.j;
  });

  UnionFind uf(n_nodes);
  std::vector<GraphEdge> mst;
  for (size_t k : order) {
    const GraphEdge& e = edges[k];
    if (e.i == e.j) throw Error("self-edge in graph");
    if (uf.unite(e.i, e.j)) mst.push_back(e);
  }
  if (mst.size() + 1 != n_nodes)
    throw Error("disconnected: " + [&] {
      UnionFind uf2(n_nodes);
      for (const auto& e : edges) uf2.unite(e.i, e.j);
      return components_string(n_nodes, uf2);
    }());
  return mst;
}

void propagate_transforms(SdfGraph& graph, const std::vector<GraphEdge>& mst, NodeId root,
                          const EdgeTransforms& edge_transforms) {
  const size_t n = graph.nodes.size();
  if (root < 0 || root >= static_cast<NodeId>(n)) throw Error("propagate: unknown root node");

  std::vector<std::vector<NodeId>> adj(n);
  for (const auto& e : mst) {
    adj[e.i].push_back(e.j);
    adj[e.j].push_back(e.i);
  }
  for (auto& a : adj) std::sort(a.begin(), a.end());

  std::vector<char> placed(n, 0);
  std::vector<SimilarityTransform> to_global(n);
  to_global[root] = SimilarityTransform::identity();
  placed[root] = 1;

  std::vector<NodeId> stack{root};
  size_t n_placed = 1;
  while (!stack.empty()) {
    NodeId p = stack.back();
    stack.pop_back();
    for (NodeId c : adj[p]) {
      if (placed[c]) continue;
      EdgeKey key(p, c);
      auto it = edge_transforms.find(key);
      if (it == edge_transforms.end())
        throw Error(str_printf("propagate: missing edge transform (%d,%d)", key.i, key.j));
      const SimilarityTransform& t_ij = it->second;  // maps j-frame -> i-frame
      if (!(t_ij.s > 0.0))
        throw Error(str_printf("propagate: non-invertible transform on edge (%d,%d)", key.i, key.j));
      // Stored transform maps key.j coords -> key.i coords; invert when the
      // traversal walks the edge the other way.
      SimilarityTransform t_pc = (p == key.i) ? t_ij : t_ij.inverse();
      to_global[c] = to_global[p].compose(t_pc);
      placed[c] = 1;
      ++n_placed;
      stack.push_back(c);
    }
  }
  if (n_placed != n) throw Error("propagate: MST does not span all nodes");
  for (auto& node : graph.nodes) node.to_global = to_global[node.id];
}

}  // namespace sdfuse
