#include <doctest.h>

#include <cstdlib>

#include "sdfuse/pipeline.hpp"
#include "test_helpers.hpp"

using namespace sdfuse;

TEST_CASE("partition_boxes matches the two-cell overlap arithmetic") {
  int counts[3] = {2, 1, 1};
  auto boxes = partition_boxes({Vec3(-1, -1, -1), Vec3(1, 1, 1)}, counts, 0.2);
  REQUIRE(boxes.size() == 2);
  CHECK(boxes[0].lo.x() == doctest::Approx(-1.0));
  CHECK(boxes[0].hi.x() == doctest::Approx(0.2));
  CHECK(boxes[1].lo.x() == doctest::Approx(-0.2));
  CHECK(boxes[1].hi.x() == doctest::Approx(1.0));
  CHECK(boxes[0].lo.y() == doctest::Approx(-1.0));
  CHECK(boxes[0].hi.y() == doctest::Approx(1.0));
}

TEST_CASE("gen: zero disturbance bounds give identity true transforms") {
  test::TempDir tmp("gen_zero");
  SceneSpec spec = preset_sphere_pair(5);
  spec.grid_dims = 17;
  spec.rig.cams_per_node = 4;
  spec.rig.cams_per_edge = 4;
  spec.disturbance = {0.0, 0.0, 0.0};
  GenResult r = gen_scene(spec, tmp.path);
  for (const auto& t : r.true_to_global)
    CHECK(test::max_entry_error(t, SimilarityTransform::identity()) == 0.0);

  auto gt = read_ground_truth(r.ground_truth_path);
  REQUIRE(gt.size() == 2);
  CHECK(test::max_entry_error(gt[1].second, SimilarityTransform::identity()) == 0.0);
}

TEST_CASE("gen rejects an out-of-range overlap fraction") {
  SceneSpec spec = preset_sphere_pair(1);
  spec.overlap_fraction = 0.7;
  CHECK_THROWS_WITH_AS(gen_scene(spec, "unused"), doctest::Contains("overlap"), Error);
}

TEST_CASE("gen: 25-node grid yields a connected graph with grid adjacency") {
  test::TempDir tmp("gen_grid25");
  SceneSpec spec = preset_grid25(11);
  spec.grid_dims = 9;  // tiny grids; adjacency only
  spec.rig.cams_per_node = 2;
  spec.rig.cams_per_edge = 2;
  GenResult r = gen_scene(spec, tmp.path);
  Manifest m = read_manifest(r.manifest_path);
  SdfGraph g = load_graph(m, r.manifest_path);
  auto edges = build_edges(g.nodes);  // throws if disconnected
  // every edge connects nodes whose partition boxes overlap (grid adjacency,
  // diagonals included)
  for (const auto& e : edges) {
    int xi = e.i % 5, yi = e.i / 5, xj = e.j % 5, yj = e.j / 5;
    CHECK(std::abs(xi - xj) <= 1);
    CHECK(std::abs(yi - yj) <= 1);
  }
  auto mst = minimum_spanning_tree(g.nodes.size(), edges);
  CHECK(mst.size() == 24);
}

TEST_CASE("pose file and manifest round trips") {
  test::TempDir tmp("manifest_io");
  Rng rng(21);
  std::vector<GraphNode::PoseEntry> entries;
  for (int k = 0; k < 3; ++k) {
    GraphNode::PoseEntry e;
    e.image_id = str_printf("img%d", k);
    e.pose = test::random_pose(rng);
    e.intr = {80, 82, 31.5, 32.5, 64, 64};
    entries.push_back(e);
  }
  write_pose_file(entries, tmp.path / "poses.json");
  auto back = read_pose_file(tmp.path / "poses.json");
  REQUIRE(back.size() == 3);
  for (size_t k = 0; k < 3; ++k) {
    CHECK((back[k].pose.R - entries[k].pose.R).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back[k].pose.T - entries[k].pose.T).norm() == 0.0);
    CHECK(back[k].intr == entries[k].intr);
  }

  Manifest m;
  ManifestNode n;
  n.id = 0;
  n.grid_path = "node00.sdfg";
  n.pose_path = "poses.json";
  n.domain = {Vec3(-1, -1, -1), Vec3(1, 1, 1)};
  n.image_ids = {"img0", "img1", "img2"};
  n.to_global = test::random_similarity(rng).homogeneous();
  m.nodes.push_back(n);
  m.edge_transforms[{0, 1}] = test::random_similarity(rng).homogeneous();
  write_manifest(m, tmp.path / "manifest.json");
  Manifest mb = read_manifest(tmp.path / "manifest.json");
  REQUIRE(mb.nodes.size() == 1);
  CHECK((*mb.nodes[0].to_global - *m.nodes[0].to_global).cwiseAbs().maxCoeff() == 0.0);
  CHECK(mb.edge_transforms.size() == 1);
}

TEST_CASE("single-node manifest meshes the lone field") {
  test::TempDir tmp("single_node");
  Aabb domain{Vec3(-1, -1, -1), Vec3(1, 1, 1)};
  NodeField f = bake(AnalyticSdf::sphere(Vec3::Zero(), 0.5), make_colorizer("trig"), domain, 17,
                     17, 17);
  write_grid(f, tmp.path / "n0.sdfg");
  Manifest m;
  ManifestNode n;
  n.id = 0;
  n.grid_path = "n0.sdfg";
  n.domain = domain;
  m.nodes.push_back(n);
  write_manifest(m, tmp.path / "manifest.json");

  PipelineConfig cfg;
  cfg.manifest_path = tmp.path / "manifest.json";
  cfg.outdir = tmp.path / "out";
  cfg.mc_res = 32;
  cfg.verbose = false;
  PipelineResult r = run_pipeline(cfg);
  CHECK(!r.mesh.empty());
  for (const Vec3& v : r.mesh.vertices)
    CHECK(std::abs(v.norm() - 0.5) < 2.5 * (domain.extent() / 31.0).norm());
}

TEST_CASE("gen -> pipeline closure on an undisturbed scene") {
  test::TempDir tmp("closure");
  SceneSpec spec = preset_sphere_pair(31);
  spec.grid_dims = 33;
  spec.rig.cams_per_node = 6;
  spec.rig.cams_per_edge = 6;
  spec.rig.intr = {40, 40, 16, 16, 32, 32};
  spec.disturbance = {0.0, 0.0, 0.0};
  GenResult g = gen_scene(spec, tmp.path / "scene");

  PipelineConfig cfg;
  cfg.manifest_path = g.manifest_path;
  cfg.outdir = tmp.path / "run";
  cfg.mc_res = 48;
  cfg.refine.iterations = 20;
  cfg.refine.rays_per_iter = 256;
  cfg.refine.render.n_samples = 48;
  cfg.scene_path = g.scene_path;
  cfg.metric_samples = 20000;
  cfg.verbose = false;
  PipelineResult r = run_pipeline(cfg);

  for (const auto& node : r.graph.nodes)
    CHECK(test::max_entry_error(node.to_global, SimilarityTransform::identity()) < 1e-9);

  // final mesh is close to the undivided scene's mesh
  SceneDescription scene = read_scene_description(g.scene_path);
  TriangleMesh whole = marching_cubes([&](const Vec3& p) { return scene.scene.eval(p); },
                                      r.mesh_region, 48, 48, 48);
  auto samples = sample_surface(whole, 20000, 5);
  TriangleBvh bvh(r.mesh);
  double cd = chamfer(samples, bvh, /*squared=*/false);
  CHECK(cd < 2.0 * (r.mesh_region.extent() / 47.0).norm());
  REQUIRE(r.metrics.has_value());
  CHECK(r.metrics->f_score > 0.98);
}

TEST_CASE("pipeline recovers disturbed ground truth and is deterministic") {
  test::TempDir tmp("recovery");
  SceneSpec spec = preset_sphere_pair(77);
  spec.grid_dims = 33;
  spec.rig.cams_per_node = 6;
  spec.rig.cams_per_edge = 8;
  spec.rig.intr = {40, 40, 16, 16, 32, 32};
  GenResult g = gen_scene(spec, tmp.path / "scene");

  PipelineConfig cfg;
  cfg.manifest_path = g.manifest_path;
  cfg.outdir = tmp.path / "run1";
  cfg.mc_res = 40;
  cfg.seed = 5;
  cfg.refine.iterations = 25;
  cfg.refine.rays_per_iter = 256;
  cfg.refine.render.n_samples = 48;
  cfg.verbose = false;
  PipelineResult r1 = run_pipeline(cfg);

  // propagated transforms match the generator's ground truth (root frame
  // is node 0's frame, which gen keeps identical to the scene frame)
  auto gt = read_ground_truth(g.ground_truth_path);
  for (const auto& [id, truth] : gt) {
    const SimilarityTransform& got = r1.graph.node(id).to_global;
    CHECK(rotation_angle_between(got.R, truth.R) < 0.1 * M_PI / 180.0);
    CHECK((got.T - truth.T).norm() < 1e-3);
    CHECK(std::abs(got.s - truth.s) / truth.s < 1e-3);
  }

  cfg.outdir = tmp.path / "run2";
  PipelineResult r2 = run_pipeline(cfg);
  CHECK(test::files_identical(r1.mesh_ply, r2.mesh_ply));
  CHECK(test::files_identical(r1.mesh_obj, r2.mesh_obj));
  CHECK(test::files_identical(r1.report_path, r2.report_path));
  CHECK(test::files_identical(tmp.path / "run1/traces/edge_00_01.csv",
                              tmp.path / "run2/traces/edge_00_01.csv"));
}

TEST_CASE("pipeline propagates stage-tagged errors") {
  test::TempDir tmp("stage_err");
  Manifest m;
  ManifestNode n;
  n.id = 0;
  n.grid_path = "missing.sdfg";
  n.domain = {Vec3(-1, -1, -1), Vec3(1, 1, 1)};
  m.nodes.push_back(n);
  write_manifest(m, tmp.path / "manifest.json");
  PipelineConfig cfg;
  cfg.manifest_path = tmp.path / "manifest.json";
  cfg.outdir = tmp.path / "out";
  cfg.verbose = false;
  CHECK_THROWS_WITH_AS(run_pipeline(cfg), doctest::Contains("stage=load"), Error);
}

#ifdef SDFUSE_CLI_PATH
namespace {

int run_cli(const std::string& args) {
  std::string cmd = std::string(SDFUSE_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  return std::system(cmd.c_str());
}

}  // namespace

TEST_CASE("command-line interface round trip") {
  test::TempDir tmp("cli");
  std::string base = tmp.path.string();
  CHECK(run_cli("gen --preset sphere-pair --dims 17 --out " + base + "/scene --seed 3") == 0);
  CHECK(run_cli("pipeline --manifest " + base + "/scene/manifest.json --out " + base +
                "/run --iters 5 --rays 128 --samples 32 --mc-res 24 --seed 3 --scene " + base +
                "/scene/scene.json") == 0);
  CHECK(std::filesystem::exists(tmp.path / "run/mesh.obj"));
  CHECK(std::filesystem::exists(tmp.path / "run/mesh.ply"));
  CHECK(std::filesystem::exists(tmp.path / "run/report.txt"));
  CHECK(std::filesystem::exists(tmp.path / "run/run.log"));
  CHECK(std::filesystem::exists(tmp.path / "run/traces/edge_00_01.csv"));

  CHECK(run_cli("register-init --manifest " + base + "/scene/manifest.json --edge 0 1 --out " +
                base + "/init") == 0);
  CHECK(std::filesystem::exists(tmp.path / "init/init_00_01.txt"));

  CHECK(run_cli("render --manifest " + base + "/scene/manifest.json --node 0 --out " + base +
                "/render --samples 32") == 0);
  CHECK(std::filesystem::exists(tmp.path / "render/color.ppm"));
  CHECK(std::filesystem::exists(tmp.path / "render/color16.ppm"));
  CHECK(std::filesystem::exists(tmp.path / "render/opacity.pgm"));

  // conflict scene: seam-scan in both modes, softmax below min-union
  CHECK(run_cli("gen --preset conflict-planes --out " + base + "/conflict") == 0);
  CHECK(run_cli("seam-scan --manifest " + base + "/conflict/manifest.json --out " + base +
                "/seam_soft --blend softmax") == 0);
  CHECK(run_cli("seam-scan --manifest " + base + "/conflict/manifest.json --out " + base +
                "/seam_min --blend min") == 0);
  CHECK(std::filesystem::exists(tmp.path / "seam_soft/seam.csv"));

  // edit with identity delta reproduces the blend-mesh output byte for byte
  CHECK(run_cli("blend-mesh --manifest " + base + "/run/registered_manifest.json --out " + base +
                "/mesh0 --mc-res 24") == 0);
  CHECK(run_cli("edit --manifest " + base + "/run/registered_manifest.json --node 1 "
                "--translate 0 0 0 --out " + base + "/mesh1 --mc-res 24") == 0);
  CHECK(test::files_identical(tmp.path / "mesh0/mesh.ply", tmp.path / "mesh1/mesh.ply"));

  CHECK(run_cli("eval --mesh " + base + "/run/mesh.ply --scene " + base +
                "/scene/scene.json --manifest " + base + "/run/registered_manifest.json --out " +
                base + "/eval --points 5000 --mc-res 24") == 0);
  CHECK(std::filesystem::exists(tmp.path / "eval/metrics.txt"));

  // bad arguments exit nonzero
  CHECK(run_cli("pipeline --manifest /nonexistent.json --out " + base + "/bad") != 0);
  CHECK(run_cli("register-init --manifest " + base + "/scene/manifest.json --edge 0 7 --out " +
                base + "/bad2") != 0);
}
#endif
