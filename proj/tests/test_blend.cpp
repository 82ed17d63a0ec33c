#include <doctest.h>

#include "sdfuse/blend.hpp"
#include "sdfuse/scene_gen.hpp"
#include "test_helpers.hpp"

using namespace sdfuse;

namespace {

NodeField constant_field(const Aabb& domain, double value) {
  NodeField f;
  f.sdf.domain = domain;
  f.sdf.nx = f.sdf.ny = f.sdf.nz = 3;
  f.sdf.values.assign(27, static_cast<float>(value));
  return f;
}

NodeField plane_field(const Aabb& domain, double offset, int dims = 17) {
  return bake(AnalyticSdf::plane(Vec3(0, 0, 1), offset), make_colorizer("constant"), domain,
              dims, dims, dims);
}

}  // namespace

TEST_CASE("inset_distance examples") {
  Aabb box{Vec3(0, 0, 0), Vec3(1, 1, 1)};
  CHECK(inset_distance(box, Vec3(0.2, 0.5, 0.5)) == doctest::Approx(0.2));
  CHECK(inset_distance(box, Vec3(0.0, 0.5, 0.5)) == 0.0);
  CHECK(inset_distance(box, Vec3(1.5, 0.5, 0.5)) == 0.0);
}

TEST_CASE("blend_weights examples and partition of unity") {
  auto w = blend_weights({0.3, 0.3}, 10.0);
  CHECK(w[0] == doctest::Approx(0.5).epsilon(1e-12));

  auto w2 = blend_weights({0.3, 0.1}, 10.0);
  CHECK(w2[0] == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))).epsilon(1e-12));
  CHECK(w2[0] == doctest::Approx(0.880797).epsilon(1e-5));

  CHECK(blend_weights({0.7}, 10.0)[0] == 1.0);

  Rng rng(21);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> insets(1 + rng.index(6));
    for (auto& d : insets) d = rng.uniform(0, 1e5);  // overflow-safe via max-subtraction
    auto ww = blend_weights(insets, rng.uniform(0.1, 50));
    double sum = 0;
    for (double v : ww) {
      CHECK(v >= 0.0);
      sum += v;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-12);
  }
}

TEST_CASE("single covering node passes through exactly") {
  Aabb domain{Vec3(-1, -1, -1), Vec3(1, 1, 1)};
  NodeField f = bake(AnalyticSdf::sphere(Vec3::Zero(), 0.5), make_colorizer("constant"), domain,
                     17, 17, 17);
  GlobalField g({{0, domain, SimilarityTransform::identity(), &f}}, BlendConfig{});
  Rng rng(23);
  for (int rep = 0; rep < 50; ++rep) {
    Vec3 x(rng.uniform(-0.99, 0.99), rng.uniform(-0.99, 0.99), rng.uniform(-0.99, 0.99));
    CHECK(g.eval(x) == eval_sdf(f.sdf, x));
    CHECK(g.eval_min_union(x) == eval_sdf(f.sdf, x));
  }
  CHECK(g.eval(Vec3(5, 5, 5)) == doctest::Approx(1e6));
}

TEST_CASE("two nodes holding the same sphere blend to the analytic field") {
  AnalyticSdf sphere = AnalyticSdf::sphere(Vec3::Zero(), 0.45);
  Colorizer c = make_colorizer("constant");
  Aabb da{Vec3(-1, -1, -1), Vec3(0.2, 1, 1)};
  Aabb db{Vec3(-0.2, -1, -1), Vec3(1, 1, 1)};
  NodeField fa = bake(sphere, c, da, 49, 49, 49);
  NodeField fb = bake(sphere, c, db, 49, 49, 49);
  GlobalField g({{0, da, SimilarityTransform::identity(), &fa},
                 {1, db, SimilarityTransform::identity(), &fb}},
                BlendConfig{});
  Rng rng(29);
  int tested = 0;
  while (tested < 300) {
    Vec3 x(rng.uniform(-0.19, 0.19), rng.uniform(-0.9, 0.9), rng.uniform(-0.9, 0.9));
    if (x.norm() < 0.15) continue;  // sphere SDF is not smooth at the center
    ++tested;
    CHECK(std::abs(g.eval(x) - sphere.eval(x)) < 2e-3);
    // agreement limit: blending equals min-union equals the common field
    CHECK(std::abs(g.eval(x) - g.eval_min_union(x)) < 2e-3);
  }
}

TEST_CASE("scale-corrected evaluation: s=2 halves local values") {
  Aabb domain{Vec3(-1, -1, -1), Vec3(1, 1, 1)};
  NodeField f = constant_field(domain, 0.5);
  SimilarityTransform t;
  t.s = 2.0;
  GlobalField g({{0, domain, t, &f}}, BlendConfig{});
  CHECK(g.eval(Vec3(0, 0, 0)) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("min-union picks the smaller value") {
  Aabb domain{Vec3(-1, -1, -1), Vec3(1, 1, 1)};
  NodeField fa = constant_field(domain, 0.5);
  NodeField fb = constant_field(domain, -0.2);
  BlendConfig cfg;
  cfg.mode = BlendConfig::Mode::min_union;
  GlobalField g({{0, domain, SimilarityTransform::identity(), &fa},
                 {1, domain, SimilarityTransform::identity(), &fb}},
                cfg);
  CHECK(g.eval(Vec3(0, 0, 0)) == doctest::Approx(-0.2));
}

TEST_CASE("conflicting planar grids: softmax seam is far below the min-union seam") {
  // overlap x in [-0.2, 0.2]; node fields disagree by delta everywhere
  const double delta = 0.052;
  Aabb da{Vec3(-1, -1, -1), Vec3(0.2, 1, 1)};
  Aabb db{Vec3(-0.2, -1, -1), Vec3(1, 1, 1)};
  NodeField fa = plane_field(da, 0.0);
  NodeField fb = plane_field(db, delta);
  std::vector<GlobalField::Entry> entries{{0, da, SimilarityTransform::identity(), &fa},
                                          {1, db, SimilarityTransform::identity(), &fb}};
  BlendConfig soft;
  BlendConfig minu;
  minu.mode = BlendConfig::Mode::min_union;
  GlobalField gs(entries, soft);
  GlobalField gm(entries, minu);

  Vec3 a(-0.6, 0, 0.5), b(0.6, 0, 0.5);
  SeamProfile ps = seam_profile(gs, a, b, 4001);
  SeamProfile pm = seam_profile(gm, a, b, 4001);

  CHECK(pm.max_jump >= 0.05);
  CHECK(ps.max_jump <= 1e-3);
  CHECK(ps.max_jump < 0.1 * pm.max_jump);

  // analytic bound: the softmax jump at a node boundary with overlap
  // margin m is at most exp(-beta*m) * |f_i - f_j|
  const double m = 0.2;
  CHECK(ps.max_jump <= std::exp(-soft.beta * m) * delta + 1e-6);
}

TEST_CASE("approximate continuity across margins 0.1 and 0.2") {
  const double delta = 0.08;
  for (double m : {0.1, 0.2}) {
    Aabb da{Vec3(-1, -1, -1), Vec3(m, 1, 1)};
    Aabb db{Vec3(-m, -1, -1), Vec3(1, 1, 1)};
    NodeField fa = plane_field(da, 0.0);
    NodeField fb = plane_field(db, delta);
    GlobalField g({{0, da, SimilarityTransform::identity(), &fa},
                   {1, db, SimilarityTransform::identity(), &fb}},
                  BlendConfig{});
    SeamProfile p = seam_profile(g, Vec3(-0.5, 0, 0.5), Vec3(0.5, 0, 0.5), 8001);
    double sampling_term = 2.0 * (0.08 * 10.0) * (1.0 / 8000);
    CHECK(p.max_jump <= std::exp(-10.0 * m) * delta + sampling_term);
  }
}

TEST_CASE("weights localize toward single-cover regions") {
  const double delta = 0.05;
  Aabb da{Vec3(-1, -1, -1), Vec3(0.2, 1, 1)};
  Aabb db{Vec3(-0.2, -1, -1), Vec3(1, 1, 1)};
  NodeField fa = plane_field(da, 0.0);
  NodeField fb = plane_field(db, delta);
  GlobalField g({{0, da, SimilarityTransform::identity(), &fa},
                 {1, db, SimilarityTransform::identity(), &fb}},
                BlendConfig{});
  // walking toward node 1's exclusive region, the blend approaches f_b
  double fb_val = 0.5 - delta;
  double prev_gap = 1e9;
  for (double x : {-0.15, -0.05, 0.05, 0.19}) {
    double gap = std::abs(g.eval(Vec3(x, 0, 0.5)) - fb_val);
    CHECK(gap < prev_gap + 1e-12);
    // node a's weight at offset x is 1/(1+e^(2*beta*x)): the gap follows it
    double analytic = delta / (1.0 + std::exp(10.0 * 2.0 * x));
    CHECK(gap == doctest::Approx(analytic).epsilon(0.1));
    prev_gap = gap;
  }
  // past the overlap the blend equals node b's field exactly
  Vec3 outside(0.3, 0, 0.5);
  CHECK(g.eval(outside) == eval_sdf(fb.sdf, outside));
}

TEST_CASE("edit_node: identity leaves the field pointwise unchanged") {
  Aabb domain{Vec3(-1, -1, -1), Vec3(1, 1, 1)};
  NodeField f = bake(AnalyticSdf::sphere(Vec3::Zero(), 0.5), make_colorizer("constant"), domain,
                     17, 17, 17);
  GlobalField g({{0, domain, SimilarityTransform::identity(), &f}}, BlendConfig{});
  GlobalField edited = g.edited(0, SimilarityTransform::identity());
  Rng rng(31);
  for (int rep = 0; rep < 50; ++rep) {
    Vec3 x(rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5));
    CHECK(edited.eval(x) == g.eval(x));
  }
  CHECK_THROWS_WITH_AS(g.edited(7, SimilarityTransform::identity()),
                       doctest::Contains("unknown node"), Error);
}

TEST_CASE("edit_node: translating an isolated node moves its surface exactly") {
  Aabb domain{Vec3(-1, -1, -1), Vec3(1, 1, 1)};
  NodeField f = bake(AnalyticSdf::sphere(Vec3::Zero(), 0.4), make_colorizer("constant"), domain,
                     33, 33, 33);
  GlobalField g({{0, domain, SimilarityTransform::identity(), &f}}, BlendConfig{});
  Vec3 v(0.12, -0.07, 0.05);
  SimilarityTransform delta;
  delta.T = v;
  GlobalField moved = g.edited(0, delta);
  Rng rng(33);
  for (int rep = 0; rep < 100; ++rep) {
    Vec3 x(rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8));
    CHECK(moved.eval(x + v) == doctest::Approx(g.eval(x)).epsilon(1e-12));
  }
}

TEST_CASE("edit_node: rotating one node keeps the softmax seam below min-union") {
  AnalyticSdf sphere = AnalyticSdf::sphere(Vec3::Zero(), 0.5);
  Colorizer c = make_colorizer("constant");
  Aabb da{Vec3(-1, -1, -1), Vec3(0.2, 1, 1)};
  Aabb db{Vec3(-0.2, -1, -1), Vec3(1, 1, 1)};
  NodeField fa = bake(sphere, c, da, 49, 49, 49);
  NodeField fb = bake(sphere, c, db, 49, 49, 49);
  std::vector<GlobalField::Entry> entries{{0, da, SimilarityTransform::identity(), &fa},
                                          {1, db, SimilarityTransform::identity(), &fb}};
  BlendConfig minu;
  minu.mode = BlendConfig::Mode::min_union;
  SimilarityTransform rot;
  rot.R = Eigen::AngleAxisd(10.0 * M_PI / 180.0, Vec3(0, 0, 1)).toRotationMatrix();
  GlobalField gs = GlobalField(entries, BlendConfig{}).edited(1, rot);
  GlobalField gm = GlobalField(entries, minu).edited(1, rot);

  double worst_soft = 0, worst_min = 0;
  for (double z : {-0.3, 0.0, 0.3}) {
    SeamProfile ps = seam_profile(gs, Vec3(-0.5, 0.05, z), Vec3(0.5, 0.05, z), 2001);
    SeamProfile pm = seam_profile(gm, Vec3(-0.5, 0.05, z), Vec3(0.5, 0.05, z), 2001);
    worst_soft = std::max(worst_soft, ps.max_jump);
    worst_min = std::max(worst_min, pm.max_jump);
  }
  CHECK(worst_soft < worst_min);
}

TEST_CASE("seam_profile basics") {
  Aabb domain{Vec3(-1, -1, -1), Vec3(1, 1, 1)};
  NodeField f = constant_field(domain, 0.3);
  GlobalField g({{0, domain, SimilarityTransform::identity(), &f}}, BlendConfig{});
  SeamProfile p = seam_profile(g, Vec3(-0.5, 0, 0), Vec3(0.5, 0, 0), 101);
  CHECK(p.max_jump == 0.0);

  // linear field: adjacent-sample jump equals slope * step
  SdfGrid lin;
  lin.domain = domain;
  lin.nx = lin.ny = lin.nz = 5;
  lin.values.resize(125);
  for (int iz = 0; iz < 5; ++iz)
    for (int iy = 0; iy < 5; ++iy)
      for (int ix = 0; ix < 5; ++ix)
        lin.values[lin.index(ix, iy, iz)] =
            static_cast<float>(lin.vertex_position(ix, iy, iz).x());
  NodeField lf{lin, std::nullopt};
  GlobalField gl({{0, domain, SimilarityTransform::identity(), &lf}}, BlendConfig{});
  SeamProfile pl = seam_profile(gl, Vec3(-0.5, 0, 0), Vec3(0.5, 0, 0), 101);
  CHECK(pl.max_jump == doctest::Approx(0.01).epsilon(1e-9));

  CHECK_THROWS_AS(seam_profile(gl, Vec3(0, 0, 0), Vec3(1, 0, 0), 1), Error);
}
