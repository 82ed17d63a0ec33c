#include "sdfuse/registration.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace sdfuse {

SimilarityTransform init_registration(const std::vector<PosePair>& pairs,
                                      double consistency_tol, double* residual_out) {
  const size_t n = pairs.size();
  if (n < 2) throw Error("underdetermined: need at least 2 shared pose pairs");

  Eigen::MatrixXd a(3 * n, 4), b(3 * n, 4);
  for (size_t h = 0; h < n; ++h) {
    a.block<3, 3>(3 * h, 0) = pairs[h].pose_i.R;
    a.block<3, 1>(3 * h, 3) = pairs[h].pose_i.T;
    b.block<3, 3>(3 * h, 0) = pairs[h].pose_j.R;
    b.block<3, 1>(3 * h, 3) = pairs[h].pose_j.T;
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (sv(sv.size() - 1) < 1e-10 * sv(0))
    throw Error("degenerate pose configuration: stacked design matrix is rank-deficient");
  Eigen::Matrix4d x = svd.solve(b);

  Mat3 m = x.topLeftCorner<3, 3>();
  Eigen::JacobiSVD<Mat3> psvd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = psvd.matrixU();
  Mat3 v = psvd.matrixV();
  double det = (u * v.transpose()).determinant();
  Mat3 r = u * Eigen::DiagonalMatrix<double, 3>(1.0, 1.0, det < 0 ? -1.0 : 1.0) * v.transpose();

  double residual = (m - r).norm();
  if (residual_out) *residual_out = residual;
  if (residual > consistency_tol)
    throw Error(str_printf(
        "inconsistent pose pairs: rotation projection residual %.3g exceeds %.3g", residual,
        consistency_tol));

  SimilarityTransform t;
  t.R = r;
  t.T = x.block<3, 1>(0, 3);
  t.s = x(3, 3);
  if (!(t.s > 0.0)) throw Error(str_printf("invalid scale: recovered s = %.6g", t.s));
  return t;
}

TransformedPose transform_pose(const CameraPose& pose, const SimilarityTransform& t) {
  TransformedPose out;
  out.pose.R = pose.R * t.R;
  out.pose.T = pose.R * t.T + t.s * pose.T;
  out.cam_scale = t.s;
  return out;
}

std::vector<MaskImage> compute_masks(const NodeField& field_i, const NodeField& field_j,
                                     const SimilarityTransform& t0,
                                     const std::vector<PosePair>& shared,
                                     const RenderConfig& cfg, double tau) {
  std::vector<MaskImage> masks;
  masks.reserve(shared.size());
  for (const PosePair& pp : shared) {
    RenderedView view_i = render_image(field_i, pp.pose_i, pp.intr, cfg);
    CameraPose pose_ij = transform_pose(pp.pose_i, t0).pose;
    RenderedView view_j = render_image(field_j, pose_ij, pp.intr, cfg);
    MaskImage m(pp.intr.width, pp.intr.height);
    for (int y = 0; y < m.height; ++y)
      for (int x = 0; x < m.width; ++x)
        m.set(x, y, view_i.opacity.at(x, y) > tau && view_j.opacity.at(x, y) > tau);
    masks.push_back(std::move(m));
  }
  return masks;
}

void RefineConfig::validate() const {
  if (!(lr0 > 0.0)) throw Error("refine config: lr0 must be positive");
  if (iterations < 1) throw Error("refine config: iterations must be >= 1");
  if (rays_per_iter < 1) throw Error("refine config: rays_per_iter must be >= 1");
  if (!(fd_step > 0.0)) throw Error("refine config: fd_step must be positive");
  render.validate();
}

namespace {

struct MaskedPixel {
  uint32_t image;
  uint16_t x, y;
};

// Loss over a fixed pixel sample for candidate delta parameters.
// Pixel contributions go into per-slot storage and are reduced with a
// compensated serial sum, so threading cannot change the result.
class RefineLoss {
 public:
  RefineLoss(const NodeField& field_j, const std::vector<PosePair>& shared,
             const std::vector<Image3>& targets, const EulerPose7& base,
             const RefineConfig& cfg)
      : field_j_(field_j), sdf_(field_j.sdf), shared_(shared), targets_(targets), base_(base),
        cfg_(cfg) {}

  SimilarityTransform compose(const double p[7]) const {
    EulerPose7 e = base_;
    e.e.phi += p[0];
    e.e.theta += p[1];
    e.e.psi += p[2];
    e.t += Vec3(p[3], p[4], p[5]);
    e.s += p[6];
    return e.to_transform();
  }

  double operator()(const double p[7], const std::vector<MaskedPixel>& sample,
                    std::vector<double>& slots) const {
    SimilarityTransform t = compose(p);
    std::vector<CameraPose> tposes(shared_.size());
    for (size_t h = 0; h < shared_.size(); ++h)
      tposes[h] = transform_pose(shared_[h].pose_i, t).pose;

    const bool l1 = cfg_.loss_norm == RefineConfig::LossNorm::l1;
    slots.resize(sample.size());
    const int n = static_cast<int>(sample.size());
#pragma omp parallel for schedule(static)
    for (int k = 0; k < n; ++k) {
      const MaskedPixel& px = sample[k];
      const PosePair& pp = shared_[px.image];
      Ray ray = ray_for_pixel(tposes[px.image], pp.intr, px.x, px.y);
      Rgb c = render_ray(sdf_, field_j_, ray, cfg_.render).color;
      Rgb d = c - targets_[px.image].at(px.x, px.y);
      if (l1)
        slots[k] = (std::abs(d.x()) + std::abs(d.y()) + std::abs(d.z())) / 3.0;
      else
        slots[k] = d.squaredNorm() / 3.0;
    }
    KahanSum sum;
    for (double v : slots) sum.add(v);
    return sum.sum / static_cast<double>(sample.size());
  }

 private:
  const NodeField& field_j_;
  GridSampler sdf_;
  const std::vector<PosePair>& shared_;
  const std::vector<Image3>& targets_;
  EulerPose7 base_;
  const RefineConfig& cfg_;
};

}  // namespace

RefineResult refine_registration(const NodeField& field_j, const std::vector<PosePair>& shared,
                                 const std::vector<MaskImage>& masks,
                                 const SimilarityTransform& t0, const RefineConfig& cfg) {
  cfg.validate();
  t0.validate();
  if (masks.size() != shared.size())
    throw Error("refine: one mask per shared image required");

  RefineResult res;

  bool gimbal = false;
  EulerPose7 base = EulerPose7::from_transform(t0, &gimbal);
  if (gimbal) res.events.push_back("gimbal-lock warning: theta near +-pi/2 at initialization");

  // The union of masked pixels across shared images, in (image, row, col)
  // order; sampling is uniform over this union.
  std::vector<MaskedPixel> pixel_union;
  for (size_t h = 0; h < shared.size(); ++h) {
    const MaskImage& m = masks[h];
    if (m.width != shared[h].intr.width || m.height != shared[h].intr.height)
      throw Error("refine: mask dimensions do not match intrinsics");
    for (int y = 0; y < m.height; ++y)
      for (int x = 0; x < m.width; ++x)
        if (m.at(x, y))
          pixel_union.push_back({static_cast<uint32_t>(h), static_cast<uint16_t>(x),
                                 static_cast<uint16_t>(y)});
  }
  if (pixel_union.empty()) throw Error("refine: empty masks");

  // Fixed supervision: field_j rendered at its own poses, cached once.
  std::vector<Image3> targets;
  targets.reserve(shared.size());
  for (const PosePair& pp : shared)
    targets.push_back(render_image(field_j, pp.pose_j, pp.intr, cfg.render).color);

  RefineLoss loss(field_j, shared, targets, base, cfg);

  double p[7] = {0, 0, 0, 0, 0, 0, 0};
  double m1[7] = {0}, m2[7] = {0};
  double lr_scale[7] = {1, 1, 1, 1, 1, 1, 1};
  double best_loss = std::numeric_limits<double>::infinity();
  double best_p[7] = {0};
  int best_iter = 0;
  int adam_t = 0;

  std::vector<double> slots;
  std::vector<MaskedPixel> sample(static_cast<size_t>(cfg.rays_per_iter));

  int it = 0;
  for (; it < cfg.iterations; ++it) {
    // Common random numbers: one pixel sample per iteration shared by all
    // 15 loss evaluations of the step.
    Rng rng(substream(cfg.seed, "refine-sample", static_cast<uint64_t>(it)));
    for (auto& px : sample) px = pixel_union[rng.index(pixel_union.size())];

    double lr = cfg.lr0 * std::pow(cfg.decay_base, static_cast<double>(it) / cfg.decay_every);
    double l_center = loss(p, sample, slots);

    RefineTraceRow row;
    row.iteration = it;
    row.lr = lr;
    row.loss = l_center;
    std::copy(p, p + 7, row.params);
    res.trace.push_back(row);

    if (l_center < best_loss * (1.0 - cfg.plateau_rel_tol) || it == 0) {
      best_iter = it;
    }
    if (l_center < best_loss) {
      best_loss = l_center;
      std::copy(p, p + 7, best_p);
    }
    if (best_loss <= cfg.loss_floor) {
      res.events.push_back(
          str_printf("early stop at iteration %d (loss at numerical floor)", it));
      ++it;
      break;
    }
    if (cfg.plateau_patience > 0 && it - best_iter >= cfg.plateau_patience) {
      res.events.push_back(str_printf("early stop at iteration %d (loss plateau)", it));
      ++it;
      break;
    }

    double grad[7];
    double pe[7];
    for (int q = 0; q < 7; ++q) {
      std::copy(p, p + 7, pe);
      pe[q] = p[q] + cfg.fd_step;
      double lp = loss(pe, sample, slots);
      pe[q] = p[q] - cfg.fd_step;
      double lm = loss(pe, sample, slots);
      grad[q] = (lp - lm) / (2.0 * cfg.fd_step);
    }

    // Adam step, applied only if it keeps the scale positive.
    int t_next = adam_t + 1;
    double nm1[7], nm2[7], cand[7];
    double bc1 = 1.0 - std::pow(cfg.adam_beta1, t_next);
    double bc2 = 1.0 - std::pow(cfg.adam_beta2, t_next);
    for (int q = 0; q < 7; ++q) {
      nm1[q] = cfg.adam_beta1 * m1[q] + (1.0 - cfg.adam_beta1) * grad[q];
      nm2[q] = cfg.adam_beta2 * m2[q] + (1.0 - cfg.adam_beta2) * grad[q] * grad[q];
      double mhat = nm1[q] / bc1;
      double vhat = nm2[q] / bc2;
      cand[q] = p[q] - lr * lr_scale[q] * mhat / (std::sqrt(vhat) + cfg.adam_eps);
    }
    if (base.s + cand[6] <= 0.0) {
      lr_scale[6] *= 0.5;
      res.events.push_back(
          str_printf("iteration %d: step rejected (scale would become non-positive), "
                     "scale lr halved to %.3g",
                     it, lr_scale[6]));
      continue;
    }
    std::copy(nm1, nm1 + 7, m1);
    std::copy(nm2, nm2 + 7, m2);
    std::copy(cand, cand + 7, p);
    adam_t = t_next;
  }

  res.iterations_run = it;
  res.initial_loss = res.trace.front().loss;
  res.final_loss = best_loss;
  res.transform = loss.compose(best_p);
  return res;
}

double refine_loss_at(const NodeField& field_j, const std::vector<PosePair>& shared,
                      const std::vector<MaskImage>& masks, const SimilarityTransform& t0,
                      const RefineConfig& cfg, const double p[7], int iteration) {
  EulerPose7 base = EulerPose7::from_transform(t0);
  std::vector<MaskedPixel> pixel_union;
  for (size_t h = 0; h < shared.size(); ++h)
    for (int y = 0; y < masks[h].height; ++y)
      for (int x = 0; x < masks[h].width; ++x)
        if (masks[h].at(x, y))
          pixel_union.push_back({static_cast<uint32_t>(h), static_cast<uint16_t>(x),
                                 static_cast<uint16_t>(y)});
  if (pixel_union.empty()) throw Error("refine: empty masks");
  std::vector<Image3> targets;
  for (const PosePair& pp : shared)
    targets.push_back(render_image(field_j, pp.pose_j, pp.intr, cfg.render).color);
  RefineLoss loss(field_j, shared, targets, base, cfg);
  Rng rng(substream(cfg.seed, "refine-sample", static_cast<uint64_t>(iteration)));
  std::vector<MaskedPixel> sample(static_cast<size_t>(cfg.rays_per_iter));
  for (auto& px : sample) px = pixel_union[rng.index(pixel_union.size())];
  std::vector<double> slots;
  return loss(p, sample, slots);
}

void write_loss_trace_csv(const std::vector<RefineTraceRow>& trace,
                          const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open for writing: " + path.string());
  os << "iteration,lr,loss,d_phi,d_theta,d_psi,d_tx,d_ty,d_tz,d_s\n";
  for (const auto& row : trace) {
    os << row.iteration;
    os << str_printf(",%.17g,%.17g", row.lr, row.loss);
    for (double v : row.params) os << str_printf(",%.17g", v);
    os << "\n";
  }
  if (!os) throw Error("write failed: " + path.string());
}

}  // namespace sdfuse
