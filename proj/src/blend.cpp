#include "sdfuse/blend.hpp"

#include <algorithm>
#include <cmath>

namespace sdfuse {

double inset_distance(const Aabb& domain, const Vec3& x_local) {
  double m = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k)
    m = std::min(m, std::min(x_local[k] - domain.lo[k], domain.hi[k] - x_local[k]));
  return std::max(0.0, m);
}

std::vector<double> blend_weights(const std::vector<double>& insets, double beta) {
  if (insets.empty()) throw Error("blend_weights: need at least one entry");
  double dmax = *std::max_element(insets.begin(), insets.end());
  std::vector<double> w(insets.size());
  double denom = 0.0;
  for (size_t k = 0; k < insets.size(); ++k) {
    w[k] = std::exp(beta * (insets[k] - dmax));
    denom += w[k];
  }
  for (double& v : w) v /= denom;
  return w;
}

GlobalField::GlobalField(std::vector<Entry> entries, BlendConfig cfg)
    : entries_(std::move(entries)), cfg_(cfg) {
  if (entries_.empty()) throw Error("global field: entries must be non-empty");
  cfg_.validate();
  inv_rot_.reserve(entries_.size());
  global_box_.reserve(entries_.size());
  for (const Entry& e : entries_) {
    if (!e.field) throw Error("global field: null node field");
    if (!e.domain.valid()) throw Error("global field: invalid entry domain");
    e.to_global.validate();
    inv_rot_.push_back(e.to_global.R.transpose());
    // AABB of the oriented local box in the global frame.
    Aabb box;
    bool first = true;
    for (int c = 0; c < 8; ++c) {
      Vec3 corner((c & 1) ? e.domain.hi.x() : e.domain.lo.x(),
                  (c & 2) ? e.domain.hi.y() : e.domain.lo.y(),
                  (c & 4) ? e.domain.hi.z() : e.domain.lo.z());
      Vec3 g = e.to_global.apply(corner);
      if (first) {
        box = {g, g};
        first = false;
      } else {
        box.grow(g);
      }
    }
    global_box_.push_back(box);
  }
}

int GlobalField::covering(const Vec3& y, Cover* out, int max_out) const {
  int n = 0;
  for (size_t k = 0; k < entries_.size(); ++k) {
    const Entry& e = entries_[k];
    if (!global_box_[k].contains(y)) continue;
    Vec3 x_local = inv_rot_[k] * (e.to_global.s * y - e.to_global.T);
    if (!e.domain.contains_strict(x_local)) continue;
    if (n == max_out) throw Error("global field: too many overlapping nodes at one point");
    // 1/s converts node-local lengths to global lengths.
    double unit = e.to_global.distance_scale();
    out[n].inset = inset_distance(e.domain, x_local) * unit;
    out[n].value = eval_sdf(e.field->sdf, x_local) * unit;
    ++n;
  }
  return n;
}

double GlobalField::eval_softmax(const Vec3& y) const {
  constexpr int kMax = 64;
  Cover cov[kMax];
  int n = covering(y, cov, kMax);
  if (n == 0) return cfg_.outside_value;
  if (n == 1) return cov[0].value;
  double dmax = cov[0].inset;
  for (int k = 1; k < n; ++k) dmax = std::max(dmax, cov[k].inset);
  double denom = 0.0, num = 0.0;
  for (int k = 0; k < n; ++k) {
    double w = std::exp(cfg_.beta * (cov[k].inset - dmax));
    denom += w;
    num += w * cov[k].value;
  }
  return num / denom;
}

double GlobalField::eval_min_union(const Vec3& y) const {
  constexpr int kMax = 64;
  Cover cov[kMax];
  int n = covering(y, cov, kMax);
  if (n == 0) return cfg_.outside_value;
  double m = cov[0].value;
  for (int k = 1; k < n; ++k) m = std::min(m, cov[k].value);
  return m;
}

GlobalField GlobalField::edited(NodeId node, const SimilarityTransform& delta) const {
  if (!(delta.s > 0.0)) throw Error("edit: delta transform must be invertible (s > 0)");
  delta.validate();
  std::vector<Entry> entries = entries_;
  bool found = false;
  for (Entry& e : entries) {
    if (e.id == node) {
      e.to_global = delta.compose(e.to_global);
      found = true;
    }
  }
  if (!found) throw Error(str_printf("edit: unknown node %d", node));
  return GlobalField(std::move(entries), cfg_);
}

Aabb GlobalField::bounding_box() const {
  Aabb box = global_box_[0];
  for (size_t k = 1; k < global_box_.size(); ++k) {
    box.grow(global_box_[k].lo);
    box.grow(global_box_[k].hi);
  }
  return box;
}

GlobalField make_global_field(const SdfGraph& graph, const BlendConfig& cfg) {
  std::vector<GlobalField::Entry> entries;
  entries.reserve(graph.nodes.size());
  for (const GraphNode& n : graph.nodes)
    entries.push_back({n.id, n.domain, n.to_global, &n.field});
  return GlobalField(std::move(entries), cfg);
}

SeamProfile seam_profile(const GlobalField& g, const Vec3& a, const Vec3& b, int n) {
  if (n < 2) throw Error("seam_profile: need at least 2 samples");
  SeamProfile prof;
  prof.ts.resize(n);
  prof.values.resize(n);
  for (int k = 0; k < n; ++k) {
    double t = static_cast<double>(k) / (n - 1);
    prof.ts[k] = t;
    prof.values[k] = g.eval(a + t * (b - a));
  }
  for (int k = 0; k + 1 < n; ++k) {
    double jump = std::abs(prof.values[k + 1] - prof.values[k]);
    if (jump > prof.max_jump) {
      prof.max_jump = jump;
      prof.index = k;
      prof.location_t = 0.5 * (prof.ts[k] + prof.ts[k + 1]);
    }
  }
  return prof;
}

}  // namespace sdfuse
