#pragma once

#include <vector>

#include "sdfuse/fields.hpp"
#include "sdfuse/graph.hpp"
#include "sdfuse/transform.hpp"

namespace sdfuse {

struct BlendConfig {
  enum class Mode { softmax, min_union };
  double beta = 10.0;
  Mode mode = Mode::softmax;
  /// Returned where no node covers the query point.
  double outside_value = 1e6;

  void validate() const {
    if (!(beta > 0.0)) throw Error("blend config: beta must be positive");
  }
};

/// Depth of x inside the box: max(0, min over axes of min(x-lo, hi-x)).
/// Zero on and outside the boundary.
double inset_distance(const Aabb& domain, const Vec3& x_local);

/// Softmax weights over inset depths, omega_k = exp(beta*d_k) / sum_l
/// exp(beta*d_l), computed with max-subtraction. Sums to 1.
std::vector<double> blend_weights(const std::vector<double>& insets, double beta);

/// The blended global SDF: local fields placed by their to_global
/// transforms, mixed by softmax weights in scale-corrected inset depth
/// (or by min-union as the seam-exhibiting baseline).
class GlobalField {
 public:
  struct Entry {
    NodeId id = 0;
    Aabb domain;  // node-local frame
    SimilarityTransform to_global;
    const NodeField* field = nullptr;
  };

  GlobalField(std::vector<Entry> entries, BlendConfig cfg);

  double eval(const Vec3& y) const {
    return cfg_.mode == BlendConfig::Mode::min_union ? eval_min_union(y) : eval_softmax(y);
  }
  double eval_softmax(const Vec3& y) const;
  double eval_min_union(const Vec3& y) const;

  /// Returns a copy with the node's to_global replaced by
  /// delta o to_global; all other entries untouched.
  GlobalField edited(NodeId node, const SimilarityTransform& delta) const;

  const std::vector<Entry>& entries() const { return entries_; }
  const BlendConfig& config() const { return cfg_; }
  /// Global-frame box covering every entry's transformed domain.
  Aabb bounding_box() const;

 private:
  struct Cover {
    double inset;  // global units
    double value;  // global units
  };
  int covering(const Vec3& y, Cover* out, int max_out) const;

  std::vector<Entry> entries_;
  BlendConfig cfg_;
  // cached per entry: inverse rotation, global-frame AABB for early reject
  std::vector<Mat3> inv_rot_;
  std::vector<Aabb> global_box_;
};

/// Builds a GlobalField over the nodes of a (propagated) graph. The graph
/// must outlive the result.
GlobalField make_global_field(const SdfGraph& graph, const BlendConfig& cfg);

struct SeamProfile {
  double max_jump = 0.0;
  double location_t = 0.0;  // parameter in [0,1] at the midpoint of the max jump
  int index = 0;
  std::vector<double> ts;
  std::vector<double> values;
};

/// Samples the field along segment a->b at n points; reports the largest
/// adjacent-sample jump and where it occurs.
SeamProfile seam_profile(const GlobalField& g, const Vec3& a, const Vec3& b, int n);

}  // namespace sdfuse
