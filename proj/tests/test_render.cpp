#include <doctest.h>

#include "sdfuse/render.hpp"
#include "sdfuse/scene_gen.hpp"
#include "test_helpers.hpp"

using namespace sdfuse;

namespace {

NodeField empty_field() {
  // SDF large and positive everywhere
  AnalyticSdf far_sphere = AnalyticSdf::sphere(Vec3(100, 0, 0), 0.5);
  return bake(far_sphere, make_colorizer("constant:1,1,1"), {Vec3(-1, -1, -1), Vec3(1, 1, 1)}, 5,
              5, 5);
}

double logistic(double x, double s) { return 1.0 / (1.0 + std::exp(-s * x)); }

}  // namespace

TEST_CASE("ray_for_pixel principal axis and camera center") {
  CameraPose pose;
  CameraIntrinsics intr{1, 1, 0, 0, 1, 1};
  Ray r = ray_for_pixel(pose, intr, -0.5, -0.5);
  CHECK(r.o.norm() == 0.0);
  CHECK((r.d - Vec3(0, 0, 1)).norm() < 1e-15);

  pose.T = Vec3(0, 0, -3);
  Ray r2 = ray_for_pixel(pose, intr, -0.5, -0.5);
  CHECK((r2.o - Vec3(0, 0, 3)).norm() < 1e-15);
}

TEST_CASE("ray_for_pixel direction equals explicit matrix product") {
  Rng rng(5);
  CameraIntrinsics intr{80, 75, 31.5, 32.5, 64, 64};
  for (int rep = 0; rep < 10; ++rep) {
    CameraPose pose = test::random_pose(rng, 2.0);
    double px = rng.uniform(0, 63), py = rng.uniform(0, 63);
    Ray r = ray_for_pixel(pose, intr, px, py);
    Vec3 d_cam((px + 0.5 - intr.cx) / intr.fx, (py + 0.5 - intr.cy) / intr.fy, 1.0);
    Vec3 expect = (pose.R.transpose() * d_cam).normalized();
    CHECK((r.d - expect).norm() < 1e-12);
  }
}

TEST_CASE("neus_alpha examples") {
  CHECK(neus_alpha(0.1, -0.1, 10) == doctest::Approx(0.632121).epsilon(1e-5));
  CHECK(neus_alpha(0.3, 0.3, 10) == 0.0);
  CHECK(neus_alpha(-0.1, 0.1, 10) == 0.0);  // clamped
  // exact value from the logistic expressions
  double expect = (logistic(0.1, 10) - logistic(-0.1, 10)) / logistic(0.1, 10);
  CHECK(neus_alpha(0.1, -0.1, 10) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("render_ray on empty space returns the background") {
  NodeField f = empty_field();
  RenderConfig cfg;
  cfg.background = Rgb(0.2, 0.3, 0.4);
  Ray ray{Vec3(0, 0, -2), Vec3(0, 0, 1)};
  RenderResult r = render_ray(f, ray, cfg);
  CHECK(r.opacity < 1e-12);
  CHECK((r.color - cfg.background).norm() < 1e-12);
}

TEST_CASE("depth is unbiased for a planar front-facing surface") {
  // SDF f(p) = t0 - p.z along a +z ray equals t0 - t
  const double t0 = 0.83;
  AnalyticSdf plane = AnalyticSdf::plane(Vec3(0, 0, -1), -t0);
  NodeField f = bake(plane, make_colorizer("constant"), {Vec3(-1, -1, 0), Vec3(1, 1, 2)}, 17, 17,
                     17);
  Ray ray{Vec3(0.1, -0.2, 0), Vec3(0, 0, 1)};
  double prev_err = 1e9;
  for (int n : {64, 128, 256}) {
    RenderConfig cfg;
    cfg.n_samples = n;
    cfg.t_near = 0.0;
    cfg.t_far = 2.0;
    cfg.slope_s = 200.0;  // sharp surface: discretization error visible
    RenderResult r = render_ray(f, ray, cfg);
    double step = 2.0 / n;
    double err = std::abs(r.depth - t0);
    CHECK(err <= step);
    CHECK(err <= prev_err + 1e-12);
    prev_err = err;
  }
}

TEST_CASE("solid interval accumulates full opacity; sum matches telescoping oracle") {
  AnalyticSdf sphere = AnalyticSdf::sphere(Vec3(0, 0, 1.5), 0.8);
  NodeField f = bake(sphere, make_colorizer("constant:1,0,0"), {Vec3(-1, -1, 0), Vec3(1, 1, 3)},
                     33, 33, 33);
  RenderConfig cfg;
  cfg.n_samples = 128;
  cfg.t_near = 0.0;
  cfg.t_far = 1.4;  // SDF strictly decreasing along the ray up to the center
  Ray ray{Vec3(0, 0, 0), Vec3(0, 0, 1)};
  RenderResult r = render_ray(f, ray, cfg);
  CHECK(r.opacity >= 0.99);
  CHECK(std::abs(r.color.x() - r.opacity) < 1e-9);
  CHECK(r.color.y() < 1e-9);

  // independent closed form: strictly decreasing f telescopes to
  // 1 - Phi(f_end)/Phi(f_start)
  double f_start = eval_sdf(f.sdf, ray.o + *cfg.t_near * ray.d);
  double f_end = eval_sdf(f.sdf, ray.o + *cfg.t_far * ray.d);
  double oracle = 1.0 - logistic(f_end, cfg.slope_s) / logistic(f_start, cfg.slope_s);
  CHECK(r.opacity == doctest::Approx(oracle).epsilon(1e-8));
}

TEST_CASE("transmittance telescoping keeps opacity in [0, 1+1e-9]") {
  Rng rng(17);
  AnalyticSdf scene = AnalyticSdf::sphere(Vec3(0.1, -0.2, 0.3), 0.5);
  scene.add(AnalyticSdf::Box{Vec3(-0.3, 0.3, -0.2), Vec3(0.25, 0.2, 0.3)});
  NodeField f = bake(scene, make_colorizer("trig"), {Vec3(-1, -1, -1), Vec3(1, 1, 1)}, 25, 25,
                     25, 0.02, 4);
  RenderConfig cfg;
  cfg.n_samples = 64;
  for (int rep = 0; rep < 200; ++rep) {
    Ray ray{Vec3(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)), rng.unit_vector()};
    RenderResult r = render_ray(f, ray, cfg);
    CHECK(r.opacity >= 0.0);
    CHECK(r.opacity <= 1.0 + 1e-9);
  }
}

TEST_CASE("opacity is monotone in the logistic slope on crossing rays") {
  Rng rng(23);
  AnalyticSdf sphere = AnalyticSdf::sphere(Vec3::Zero(), 0.55);
  NodeField f = bake(sphere, make_colorizer("constant"), {Vec3(-1, -1, -1), Vec3(1, 1, 1)}, 33,
                     33, 33);
  for (int rep = 0; rep < 30; ++rep) {
    // rays aimed at the sphere from outside
    Vec3 target = 0.3 * rng.unit_vector();
    Vec3 origin = 2.5 * rng.unit_vector();
    Ray ray{origin, (target - origin).normalized()};
    double prev = -1.0;
    for (double s : {10.0, 20.0, 40.0, 80.0, 160.0}) {
      RenderConfig cfg;
      cfg.n_samples = 96;
      cfg.slope_s = s;
      double op = render_ray(f, ray, cfg).opacity;
      CHECK(op >= prev - 2e-9);  // early-termination cutoff scale
      prev = op;
    }
  }
}

TEST_CASE("render_image: empty field, determinism, serial == parallel") {
  NodeField f = empty_field();
  CameraPose pose;
  pose.T = Vec3(0, 0, 3);
  CameraIntrinsics intr{2, 2, 1, 1, 2, 2};
  RenderConfig cfg;
  cfg.background = Rgb(0.1, 0.2, 0.3);
  RenderedView v = render_image(f, pose, intr, cfg);
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 2; ++x) {
      CHECK((v.color.at(x, y) - cfg.background).norm() < 1e-12);
      CHECK(v.opacity.at(x, y) == 0.0);
    }

  AnalyticSdf sphere = AnalyticSdf::sphere(Vec3::Zero(), 0.5);
  NodeField g = bake(sphere, make_colorizer("trig"), {Vec3(-1, -1, -1), Vec3(1, 1, 1)}, 33, 33,
                     33);
  CameraPose look = look_at_pose(Vec3(0, -2.5, 0), Vec3::Zero());
  CameraIntrinsics intr2{60, 60, 24, 24, 48, 48};
  RenderedView a = render_image(g, look, intr2, RenderConfig{}, Exec::parallel);
  RenderedView b = render_image(g, look, intr2, RenderConfig{}, Exec::parallel);
  RenderedView c = render_image(g, look, intr2, RenderConfig{}, Exec::serial);
  CHECK(a.color.pixels == b.color.pixels);
  CHECK(a.color.pixels == c.color.pixels);
  CHECK(a.opacity.pixels == c.opacity.pixels);
  CHECK(a.depth.pixels == c.depth.pixels);
}

TEST_CASE("sphere silhouette radius matches the analytic projection") {
  AnalyticSdf sphere = AnalyticSdf::sphere(Vec3::Zero(), 0.5);
  NodeField f = bake(sphere, make_colorizer("constant"), {Vec3(-1, -1, -1), Vec3(1, 1, 1)}, 65,
                     65, 65);
  const double dist = 3.0;
  CameraPose pose = look_at_pose(Vec3(0, -dist, 0), Vec3::Zero());
  CameraIntrinsics intr{96, 96, 48, 48, 96, 96};
  RenderConfig cfg;
  cfg.n_samples = 256;
  RenderedView v = render_image(f, pose, intr, cfg);

  // expected pixel radius of the silhouette cone
  double half_angle = std::asin(0.5 / dist);
  double expected_px = intr.fx * std::tan(half_angle);

  // measure along the central row
  int cy = intr.height / 2;
  double measured = 0;
  for (int x = 0; x < intr.width; ++x)
    if (v.opacity.at(x, cy) > 0.5)
      measured = std::max(measured, std::abs(x + 0.5 - intr.cx));
  CHECK(std::abs(measured - expected_px) <= 1.0);
}

TEST_CASE("ray_box_interval clips to the positive half-line") {
  Aabb box{Vec3(-1, -1, -1), Vec3(1, 1, 1)};
  auto hit = ray_box_interval({Vec3(0, 0, -3), Vec3(0, 0, 1)}, box);
  REQUIRE(hit.has_value());
  CHECK(hit->first == doctest::Approx(2.0));
  CHECK(hit->second == doctest::Approx(4.0));

  auto inside = ray_box_interval({Vec3(0, 0, 0), Vec3(0, 0, 1)}, box);
  REQUIRE(inside.has_value());
  CHECK(inside->first == 0.0);
  CHECK(inside->second == doctest::Approx(1.0));

  CHECK(!ray_box_interval({Vec3(0, 0, 3), Vec3(0, 0, 1)}, box).has_value());
  CHECK(!ray_box_interval({Vec3(5, 0, -3), Vec3(0, 0, 1)}, box).has_value());
}
