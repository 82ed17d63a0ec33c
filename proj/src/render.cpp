#include "sdfuse/render.hpp"

#include <cmath>

namespace sdfuse {

void CameraPose::validate(double tol) const {
  if ((R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff() > tol)
    throw Error("camera pose rotation is not orthonormal");
  if (std::abs(R.determinant() - 1.0) > tol)
    throw Error("camera pose rotation must have det +1");
}

void RenderConfig::validate() const {
  if (n_samples < 2) throw Error("render config: n_samples must be >= 2");
  if (!(slope_s > 0.0)) throw Error("render config: slope_s must be positive");
  if (t_near && t_far) {
    if (!(*t_near >= 0.0 && *t_near < *t_far))
      throw Error("render config: need 0 <= t_near < t_far");
  } else if (t_near.has_value() != t_far.has_value()) {
    throw Error("render config: t_near and t_far must be set together");
  }
}

Ray ray_for_pixel(const CameraPose& pose, const CameraIntrinsics& intr, double px, double py) {
  Vec3 d_cam((px + 0.5 - intr.cx) / intr.fx, (py + 0.5 - intr.cy) / intr.fy, 1.0);
  Vec3 d = (pose.R.transpose() * d_cam).normalized();
  return {pose.center(), d};
}

double neus_alpha(double f_a, double f_b, double slope_s) {
  auto logistic = [slope_s](double x) { return 1.0 / (1.0 + std::exp(-slope_s * x)); };
  double pa = logistic(f_a);
  if (pa <= 0.0) return 0.0;
  double alpha = (pa - logistic(f_b)) / pa;
  return std::clamp(alpha, 0.0, 1.0);
}

std::optional<std::pair<double, double>> ray_box_interval(const Ray& ray, const Aabb& box) {
  double t0 = 0.0;
  double t1 = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k) {
    double o = ray.o[k], d = ray.d[k];
    if (d == 0.0) {
      if (o < box.lo[k] || o > box.hi[k]) return std::nullopt;
      continue;
    }
    double ta = (box.lo[k] - o) / d;
    double tb = (box.hi[k] - o) / d;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  if (t0 >= t1) return std::nullopt;
  return std::make_pair(t0, t1);
}

RenderResult render_ray(const GridSampler& sdf, const NodeField& field, const Ray& ray,
                        const RenderConfig& cfg) {
  double tn, tf;
  if (cfg.t_near && cfg.t_far) {
    tn = *cfg.t_near;
    tf = *cfg.t_far;
  } else {
    auto hit = ray_box_interval(ray, field.domain());
    if (!hit) return {cfg.background, 0.0, 0.0};
    tn = hit->first;
    tf = hit->second;
  }

  const int n = cfg.n_samples;
  const double dt = (tf - tn) / (n - 1);
  const double s = cfg.slope_s;
  auto logistic = [s](double x) { return 1.0 / (1.0 + std::exp(-s * x)); };

  double trans = 1.0;
  double sum_w = 0.0;
  double depth_sum = 0.0;
  Rgb color = Rgb::Zero();

  double t_a = tn;
  double f_a = sdf(ray.o + t_a * ray.d);
  double phi_a = logistic(f_a);
  for (int k = 0; k + 1 < n; ++k) {
    double t_b = tn + (k + 1) * dt;
    double f_b = sdf(ray.o + t_b * ray.d);
    double phi_b = logistic(f_b);
    // per-segment opacity, the discrete form of the opaque density
    double alpha = phi_a <= 0.0 ? 0.0 : std::clamp((phi_a - phi_b) / phi_a, 0.0, 1.0);
    if (alpha > 0.0) {
      double w = alpha * trans;
      double mid = 0.5 * (t_a + t_b);
      color += w * eval_color(field, ray.o + mid * ray.d, cfg.background);
      sum_w += w;
      depth_sum += w * mid;
      trans *= 1.0 - alpha;
      if (trans < 1e-9) break;
    }
    t_a = t_b;
    f_a = f_b;
    phi_a = phi_b;
  }

  RenderResult out;
  out.color = color + (1.0 - sum_w) * cfg.background;
  out.opacity = sum_w;
  out.depth = depth_sum / std::max(sum_w, 1e-12);
  return out;
}

RenderResult render_ray(const NodeField& field, const Ray& ray, const RenderConfig& cfg) {
  return render_ray(GridSampler(field.sdf), field, ray, cfg);
}

RenderedView render_image(const NodeField& field, const CameraPose& pose,
                          const CameraIntrinsics& intr, const RenderConfig& cfg, Exec exec) {
  intr.validate();
  pose.validate();
  cfg.validate();
  RenderedView view;
  view.color = Image3(intr.width, intr.height);
  view.opacity = Image1(intr.width, intr.height);
  view.depth = Image1(intr.width, intr.height);

  const int h = intr.height, w = intr.width;
  const GridSampler sdf(field.sdf);
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        RenderResult r = render_ray(sdf, field, ray_for_pixel(pose, intr, x, y), cfg);
        view.color.at(x, y) = r.color;
        view.opacity.at(x, y) = r.opacity;
        view.depth.at(x, y) = r.depth;
      }
    }
  } else {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        RenderResult r = render_ray(sdf, field, ray_for_pixel(pose, intr, x, y), cfg);
        view.color.at(x, y) = r.color;
        view.opacity.at(x, y) = r.opacity;
        view.depth.at(x, y) = r.depth;
      }
    }
  }
  return view;
}

}  // namespace sdfuse
