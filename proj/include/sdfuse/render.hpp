#pragma once

#include <optional>

#include "sdfuse/fields.hpp"
#include "sdfuse/image.hpp"

namespace sdfuse {

struct CameraIntrinsics {
  double fx = 0, fy = 0, cx = 0, cy = 0;
  int width = 0, height = 0;

  void validate() const {
    if (!(fx > 0.0 && fy > 0.0)) throw Error("intrinsics: focal lengths must be positive");
    if (width < 1 || height < 1) throw Error("intrinsics: image size must be >= 1");
  }
  bool operator==(const CameraIntrinsics&) const = default;
};

/// World-to-camera rigid pose: x_c = R * x_w + T. Camera looks along +z,
/// x right, y down.
struct CameraPose {
  Mat3 R = Mat3::Identity();
  Vec3 T = Vec3::Zero();

  Vec3 center() const { return -R.transpose() * T; }
  void validate(double tol = 1e-9) const;
};

struct Ray {
  Vec3 o;
  Vec3 d;  // unit
};

struct RenderConfig {
  int n_samples = 128;
  /// When unset, each ray uses its intersection interval with the field
  /// domain box.
  std::optional<double> t_near;
  std::optional<double> t_far;
  double slope_s = 40.0;
  Rgb background = Rgb::Zero();

  void validate() const;
};

struct RenderResult {
  Rgb color = Rgb::Zero();
  double opacity = 0.0;
  double depth = 0.0;  // expected termination distance; 0 when opacity ~ 0
};

/// Ray through the center of pixel (px, py).
Ray ray_for_pixel(const CameraPose& pose, const CameraIntrinsics& intr, double px, double py);

/// Discrete opacity for one segment from SDF values at its endpoints:
/// max((Phi_s(f_a) - Phi_s(f_b)) / Phi_s(f_a), 0) with the logistic
/// Phi_s(x) = 1/(1+exp(-s*x)).
double neus_alpha(double f_a, double f_b, double slope_s);

/// [t_enter, t_exit] of the ray against the box, clipped to t >= 0;
/// nullopt on a miss.
std::optional<std::pair<double, double>> ray_box_interval(const Ray& ray, const Aabb& box);

RenderResult render_ray(const NodeField& field, const Ray& ray, const RenderConfig& cfg);

/// Identical quadrature over a prebuilt sampler; callers shooting many
/// rays at one field pay the grid setup once.
RenderResult render_ray(const GridSampler& sdf, const NodeField& field, const Ray& ray,
                        const RenderConfig& cfg);

struct RenderedView {
  Image3 color;
  Image1 opacity;
  Image1 depth;
};

/// Per-pixel render_ray over the full image. Deterministic; the parallel
/// path is bit-identical to the serial reference.
RenderedView render_image(const NodeField& field, const CameraPose& pose,
                          const CameraIntrinsics& intr, const RenderConfig& cfg,
                          Exec exec = Exec::parallel);

}  // namespace sdfuse
