#pragma once

#include <string>
#include <vector>

#include "sdfuse/fields.hpp"
#include "sdfuse/image.hpp"
#include "sdfuse/render.hpp"
#include "sdfuse/transform.hpp"

namespace sdfuse {

/// Camera poses of one shared image in the frames of the two nodes being
/// registered, with the (common) intrinsics.
struct PosePair {
  std::string image_id;
  CameraPose pose_i;
  CameraPose pose_j;
  CameraIntrinsics intr;
};

/// Closed-form similarity initialization from >= 2 shared pose pairs.
/// Solves the stacked system [R_h^i | T_h^i] * H = [R_h^j | T_h^j]
/// column-wise for the homogeneous 4x4 H, projects the 3x3 block onto
/// SO(3), and reads T and s from the last column. Returns the transform
/// mapping j-frame points into i-frame points, apply(x) = (R x + T)/s.
///
/// Errors: fewer than 2 pairs ("underdetermined"), rank-deficient stack
/// ("degenerate pose configuration"), s <= 0 ("invalid scale"), and a
/// rotation-projection residual above consistency_tol ("inconsistent pose
/// pairs"). residual_out (optional) receives that residual.
SimilarityTransform init_registration(const std::vector<PosePair>& pairs,
                                      double consistency_tol = 0.5,
                                      double* residual_out = nullptr);

struct TransformedPose {
  CameraPose pose;
  /// Camera-coordinate scale of the returned pose relative to the input
  /// pose (the transform's s); pinhole projection is invariant to it.
  double cam_scale = 1.0;
};

/// Pose whose world-to-camera action matches right-multiplication of the
/// 3x4 pose by the homogeneous H: R' = R*R_t, T' = R*T_t + s*T.
TransformedPose transform_pose(const CameraPose& pose, const SimilarityTransform& t);

/// Per shared image: pixels where both nodes' fields render opacity above
/// tau. Node j is rendered at the transformed pose P_h^i * T0.
std::vector<MaskImage> compute_masks(const NodeField& field_i, const NodeField& field_j,
                                     const SimilarityTransform& t0,
                                     const std::vector<PosePair>& shared,
                                     const RenderConfig& cfg, double tau = 0.5);

struct RefineConfig {
  double lr0 = 5e-5;
  int iterations = 5000;
  int rays_per_iter = 2048;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  uint64_t seed = 0;
  /// lr_i = lr0 * decay_base^(i / decay_every)
  double decay_base = 0.8;
  double decay_every = 100.0;
  /// Central-difference step for the 7 parameters.
  double fd_step = 1e-6;
  enum class LossNorm { l1, l2 };
  LossNorm loss_norm = LossNorm::l1;
  /// Stop when the best loss has not improved by plateau_rel_tol for
  /// plateau_patience iterations. 0 patience disables early stopping.
  int plateau_patience = 400;
  double plateau_rel_tol = 1e-4;
  /// Stop immediately once the loss reaches numerical noise; finite
  /// differences carry no signal below this.
  double loss_floor = 1e-12;
  RenderConfig render;

  void validate() const;
};

struct RefineTraceRow {
  int iteration = 0;
  double lr = 0.0;
  double loss = 0.0;
  double params[7] = {0, 0, 0, 0, 0, 0, 0};  // d_phi d_theta d_psi dtx dty dtz ds
};

struct RefineResult {
  SimilarityTransform transform;
  std::vector<RefineTraceRow> trace;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  int iterations_run = 0;
  std::vector<std::string> events;  // rejected steps, gimbal warnings, early stop
};

/// Rendering-supervised refinement of T0. Optimizes a 7-parameter delta
/// (Euler angles, translation, scale) with Adam under the decayed
/// learning-rate schedule; the loss compares renders of field_j at the
/// transformed poses against cached renders of field_j at its own poses,
/// over rays_per_iter masked pixels resampled each iteration. Gradients
/// are central finite differences (15 loss evaluations per step).
RefineResult refine_registration(const NodeField& field_j, const std::vector<PosePair>& shared,
                                 const std::vector<MaskImage>& masks,
                                 const SimilarityTransform& t0, const RefineConfig& cfg);

void write_loss_trace_csv(const std::vector<RefineTraceRow>& trace,
                          const std::filesystem::path& path);

/// Refinement objective at delta parameters p over the pixel sample of
/// iteration `iteration`; for diagnostics and gradient checks.
double refine_loss_at(const NodeField& field_j, const std::vector<PosePair>& shared,
                      const std::vector<MaskImage>& masks, const SimilarityTransform& t0,
                      const RefineConfig& cfg, const double p[7], int iteration = 0);

}  // namespace sdfuse
