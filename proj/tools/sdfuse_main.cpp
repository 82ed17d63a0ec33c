#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "sdfuse/blend.hpp"
#include "sdfuse/manifest.hpp"
#include "sdfuse/mesh.hpp"
#include "sdfuse/pipeline.hpp"
#include "sdfuse/registration.hpp"
#include "sdfuse/scene_gen.hpp"

namespace fs = std::filesystem;
using namespace sdfuse;

namespace {

struct CommonOpts {
  std::string manifest;
  std::string out = "out";
  uint64_t seed = 0;
  double beta = 10.0;
  int iters = 5000;
  double lr0 = 5e-5;
  int rays = 2048;
  int mc_res = 128;
  std::string blend_mode = "softmax";
  std::string loss = "l1";
  int root = 0;
  int samples = 128;  // render samples per ray
};

BlendConfig blend_config(const CommonOpts& o) {
  BlendConfig b;
  b.beta = o.beta;
  if (o.blend_mode == "softmax")
    b.mode = BlendConfig::Mode::softmax;
  else if (o.blend_mode == "min")
    b.mode = BlendConfig::Mode::min_union;
  else
    throw Error("--blend must be softmax or min");
  return b;
}

RefineConfig refine_config(const CommonOpts& o) {
  RefineConfig r;
  r.iterations = std::max(1, o.iters);
  r.lr0 = o.lr0;
  r.rays_per_iter = o.rays;
  r.loss_norm = o.loss == "l2" ? RefineConfig::LossNorm::l2 : RefineConfig::LossNorm::l1;
  r.render.n_samples = o.samples;
  return r;
}

void add_common(CLI::App* cmd, CommonOpts& o, bool needs_manifest = true) {
  if (needs_manifest)
    cmd->add_option("--manifest", o.manifest, "graph manifest path")->required();
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--seed", o.seed, "global random seed");
  cmd->add_option("--beta", o.beta, "softmax blending sharpness");
  cmd->add_option("--iters", o.iters, "refinement iterations (0 = init only)");
  cmd->add_option("--lr0", o.lr0, "initial learning rate");
  cmd->add_option("--rays", o.rays, "rays per refinement iteration");
  cmd->add_option("--mc-res", o.mc_res, "marching cubes samples per axis");
  cmd->add_option("--blend", o.blend_mode, "blending mode: softmax|min");
  cmd->add_option("--loss", o.loss, "refinement loss norm: l1|l2");
  cmd->add_option("--root", o.root, "root node for propagation");
  cmd->add_option("--samples", o.samples, "render samples per ray");
}

SimilarityTransform load_edge_init(const fs::path& path) {
  auto list = read_ground_truth(path);
  if (list.size() != 1) throw Error("expected exactly one transform in " + path.string());
  return list[0].second;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SDF-graph fusion toolkit: register, align, blend and mesh overlapping "
               "local signed-distance fields"};
  app.require_subcommand(1);

  CommonOpts o;

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic scene with ground truth");
  std::string preset = "sphere-pair";
  double overlap = -1.0;
  int dims = -1;
  double noise = 0.0;
  double disturb_rot = -1.0, disturb_trans = -1.0, disturb_scale = -1.0;
  gen->add_option("--preset", preset, "sphere-pair | grid5x5 | conflict-planes");
  gen->add_option("--overlap", overlap, "overlap fraction of the global range");
  gen->add_option("--dims", dims, "per-node grid dims");
  gen->add_option("--noise", noise, "bake noise amplitude");
  gen->add_option("--disturb-rot", disturb_rot, "max disturbance rotation (deg)");
  gen->add_option("--disturb-trans", disturb_trans, "max disturbance translation");
  gen->add_option("--disturb-scale", disturb_scale, "max disturbance scale deviation");
  add_common(gen, o, /*needs_manifest=*/false);

  // pipeline
  auto* pipe = app.add_subcommand("pipeline", "run register -> propagate -> blend -> mesh -> eval");
  std::string scene_json;
  bool renders = false;
  pipe->add_option("--scene", scene_json, "analytic scene description for metrics");
  pipe->add_flag("--renders", renders, "write before/after renders per edge");
  add_common(pipe, o);

  // register-init
  auto* rinit = app.add_subcommand("register-init", "closed-form registration of one edge");
  std::vector<int> edge{-1, -1};
  rinit->add_option("--edge", edge, "edge endpoints i j")->expected(2);
  add_common(rinit, o);

  // register-refine
  auto* rref = app.add_subcommand("register-refine", "rendering-supervised refinement of one edge");
  std::string init_file;
  bool dump_images = false;
  rref->add_option("--edge", edge, "edge endpoints i j")->expected(2);
  rref->add_option("--init-file", init_file, "initial transform file (default: closed-form init)");
  rref->add_flag("--dump-images", dump_images, "write target/before/after/error images and masks");
  add_common(rref, o);

  // propagate
  auto* prop = app.add_subcommand("propagate", "place all nodes via MST edge transforms");
  add_common(prop, o);

  // blend-mesh
  auto* bmesh = app.add_subcommand("blend-mesh", "blend a registered manifest and extract a mesh");
  std::vector<double> region;
  bmesh->add_option("--region", region, "mesh region x0 y0 z0 x1 y1 z1")->expected(6);
  add_common(bmesh, o);

  // render
  auto* rend = app.add_subcommand("render", "render one node at one of its poses");
  int node_id = 0;
  std::string image_id;
  double slope = 40.0;
  rend->add_option("--node", node_id, "node id")->required();
  rend->add_option("--image", image_id, "image id (default: first pose)");
  rend->add_option("--slope", slope, "SDF-to-density logistic slope");
  add_common(rend, o);

  // edit
  auto* edit = app.add_subcommand("edit", "apply a delta transform to a node and re-mesh");
  std::vector<double> translate{0, 0, 0};
  std::vector<double> rotate_axis{0, 0, 1};
  double rotate_deg = 0.0;
  double scale_factor = 1.0;
  edit->add_option("--node", node_id, "node id")->required();
  edit->add_option("--translate", translate, "translation x y z")->expected(3);
  edit->add_option("--rotate-axis", rotate_axis, "rotation axis")->expected(3);
  edit->add_option("--rotate-deg", rotate_deg, "rotation angle (degrees)");
  edit->add_option("--scale", scale_factor, "uniform scale factor (>0)");
  edit->add_option("--region", region, "mesh region x0 y0 z0 x1 y1 z1")->expected(6);
  add_common(edit, o);

  // eval
  auto* eval = app.add_subcommand("eval", "geometric metrics for a mesh");
  std::string mesh_path, ref_mesh, scene_path2;
  double threshold = 0.0;
  size_t n_samples = 100000;
  eval->add_option("--mesh", mesh_path, "mesh to evaluate (.obj or .ply)")->required();
  eval->add_option("--ref-mesh", ref_mesh, "ground-truth mesh");
  eval->add_option("--scene", scene_path2, "analytic scene description");
  eval->add_option("--threshold", threshold, "f-score distance threshold");
  eval->add_option("--points", n_samples, "surface sample count");
  add_common(eval, o);
  eval->get_option("--manifest")->required(false);

  // seam-scan
  auto* seam = app.add_subcommand("seam-scan", "max adjacent-sample jump along a segment");
  std::vector<double> from{-0.6, 0, 0.5}, to{0.6, 0, 0.5};
  int seam_n = 4001;
  seam->add_option("--from", from, "segment start x y z")->expected(3);
  seam->add_option("--to", to, "segment end x y z")->expected(3);
  seam->add_option("--n", seam_n, "sample count");
  add_common(seam, o);

  CLI11_PARSE(app, argc, argv);

  try {
    fs::path out(o.out);

    if (*gen) {
      if (preset == "conflict-planes") {
        GenResult r = gen_conflict_planes(out, 0.052, 0.2, dims > 0 ? dims : 33);
        std::cout << "manifest=" << r.manifest_path.string() << "\n";
      } else {
        SceneSpec spec = preset == "grid5x5" ? preset_grid25(o.seed) : preset_sphere_pair(o.seed);
        if (preset != "grid5x5" && preset != "sphere-pair")
          throw Error("unknown preset: " + preset);
        if (overlap > 0) spec.overlap_fraction = overlap;
        if (dims > 1) spec.grid_dims = dims;
        spec.bake_noise = noise;
        if (disturb_rot >= 0) spec.disturbance.max_rotation_deg = disturb_rot;
        if (disturb_trans >= 0) spec.disturbance.max_translation = disturb_trans;
        if (disturb_scale >= 0) spec.disturbance.max_scale_dev = disturb_scale;
        GenResult r = gen_scene(spec, out);
        for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
        std::cout << "manifest=" << r.manifest_path.string() << "\n";
        std::cout << "ground_truth=" << r.ground_truth_path.string() << "\n";
        std::cout << "scene=" << r.scene_path.string() << "\n";
      }
      return 0;
    }

    if (*pipe) {
      PipelineConfig cfg;
      cfg.manifest_path = o.manifest;
      cfg.outdir = out;
      cfg.root = o.root;
      cfg.seed = o.seed;
      cfg.refine = refine_config(o);
      cfg.skip_refine = o.iters == 0;
      cfg.blend = blend_config(o);
      cfg.mc_res = o.mc_res;
      if (!scene_json.empty()) cfg.scene_path = scene_json;
      cfg.write_renders = renders;
      run_pipeline(cfg);
      return 0;
    }

    if (*rinit || *rref) {
      if (edge[0] < 0 || edge[1] < 0) throw Error("--edge i j is required");
      Manifest m = read_manifest(o.manifest);
      SdfGraph graph = load_graph(m, o.manifest);
      graph.edges = build_edges(graph.nodes);
      const GraphEdge* e = nullptr;
      for (const auto& ge : graph.edges)
        if (ge.i == std::min(edge[0], edge[1]) && ge.j == std::max(edge[0], edge[1])) e = &ge;
      if (!e) throw Error(str_printf("no overlap edge (%d,%d)", edge[0], edge[1]));
      std::vector<PosePair> pairs = edge_pose_pairs(graph, *e);
      double residual = 0.0;
      SimilarityTransform t0 = init_registration(pairs, 0.5, &residual);
      fs::create_directories(out);
      if (*rinit) {
        write_ground_truth({{e->j, t0}}, out / str_printf("init_%02d_%02d.txt", e->i, e->j));
        std::cout << str_printf("edge=(%d,%d) shared=%zu residual=%.6g s=%.9g\n", e->i, e->j,
                                pairs.size(), residual, t0.s);
        return 0;
      }
      if (!init_file.empty()) t0 = load_edge_init(init_file);
      RefineConfig rc = refine_config(o);
      rc.seed = substream(o.seed, "edge-refine", e->i, e->j);
      const NodeField& fi = graph.node(e->i).field;
      const NodeField& fj = graph.node(e->j).field;
      std::vector<MaskImage> masks = compute_masks(fi, fj, t0, pairs, rc.render);
      RefineResult rr = refine_registration(fj, pairs, masks, t0, rc);
      write_ground_truth({{e->j, rr.transform}},
                         out / str_printf("refined_%02d_%02d.txt", e->i, e->j));
      write_loss_trace_csv(rr.trace, out / str_printf("trace_%02d_%02d.csv", e->i, e->j));
      if (dump_images && !pairs.empty()) {
        const PosePair& pp = pairs.front();
        write_pgm(masks.front(), out / "mask0.pgm");
        auto target = render_image(fj, pp.pose_j, pp.intr, rc.render);
        auto before = render_image(fj, transform_pose(pp.pose_i, t0).pose, pp.intr, rc.render);
        auto after =
            render_image(fj, transform_pose(pp.pose_i, rr.transform).pose, pp.intr, rc.render);
        write_ppm(target.color, out / "target.ppm");
        write_ppm(before.color, out / "before.ppm");
        write_ppm(after.color, out / "after.ppm");
        Image3 err(pp.intr.width, pp.intr.height);
        for (int y = 0; y < err.height; ++y)
          for (int x = 0; x < err.width; ++x)
            err.at(x, y) = (after.color.at(x, y) - target.color.at(x, y)).cwiseAbs();
        write_ppm(err, out / "error.ppm");
      }
      for (const auto& ev : rr.events) std::cerr << "note: " << ev << "\n";
      std::cout << str_printf("edge=(%d,%d) loss0=%.8g lossN=%.8g iters=%d\n", e->i, e->j,
                              rr.initial_loss, rr.final_loss, rr.iterations_run);
      return 0;
    }

    if (*prop) {
      Manifest m = read_manifest(o.manifest);
      if (m.edge_transforms.empty())
        throw Error("manifest has no edge_transforms to propagate");
      SdfGraph graph = load_graph(m, o.manifest);
      graph.edges = build_edges(graph.nodes);
      auto mst = minimum_spanning_tree(graph.nodes.size(), graph.edges);
      EdgeTransforms ts;
      for (const auto& [key, h] : m.edge_transforms)
        ts.emplace(EdgeKey(key.first, key.second), SimilarityTransform::from_homogeneous(h));
      propagate_transforms(graph, mst, o.root, ts);
      fs::create_directories(out);
      fs::path reg = out / "registered_manifest.json";
      write_registered_manifest(m, o.manifest, graph, ts, reg);
      std::cout << "registered=" << reg.string() << "\n";
      return 0;
    }

    if (*bmesh || *edit || *seam) {
      Manifest m = read_manifest(o.manifest);
      SdfGraph graph = load_graph(m, o.manifest);
      for (const auto& mn : m.nodes)
        if (!mn.to_global)
          throw Error(str_printf("node %d has no to_global; run pipeline or propagate first",
                                 mn.id));
      GlobalField field = make_global_field(graph, blend_config(o));
      fs::create_directories(out);

      if (*seam) {
        Vec3 a(from[0], from[1], from[2]), b(to[0], to[1], to[2]);
        SeamProfile prof = seam_profile(field, a, b, seam_n);
        fs::path csv = out / "seam.csv";
        std::ofstream os(csv);
        os << "t,value\n";
        for (size_t k = 0; k < prof.values.size(); ++k)
          os << str_printf("%.17g,%.17g\n", prof.ts[k], prof.values[k]);
        std::cout << str_printf("max_jump=%.9g location_t=%.6g csv=%s\n", prof.max_jump,
                                prof.location_t, csv.string().c_str());
        return 0;
      }

      if (*edit) {
        SimilarityTransform delta;
        delta.T = Vec3(translate[0], translate[1], translate[2]);
        if (rotate_deg != 0.0) {
          Vec3 axis(rotate_axis[0], rotate_axis[1], rotate_axis[2]);
          if (axis.norm() < 1e-12) throw Error("rotation axis must be non-zero");
          delta.R = Eigen::AngleAxisd(rotate_deg * M_PI / 180.0, axis.normalized())
                        .toRotationMatrix();
        }
        if (!(scale_factor > 0.0)) throw Error("--scale must be positive");
        delta.s = 1.0 / scale_factor;  // scale_factor > 1 grows the node in the scene
        field = field.edited(node_id, delta);
        graph.node(node_id).to_global = delta.compose(graph.node(node_id).to_global);
        write_registered_manifest(m, o.manifest, graph, {}, out / "registered_manifest.json");
      }

      Aabb mesh_region =
          region.size() == 6
              ? Aabb{Vec3(region[0], region[1], region[2]), Vec3(region[3], region[4], region[5])}
              : field.bounding_box();
      TriangleMesh mesh = marching_cubes([&](const Vec3& p) { return field.eval(p); },
                                         mesh_region, o.mc_res, o.mc_res, o.mc_res);
      export_obj(mesh, out / "mesh.obj");
      export_ply(mesh, out / "mesh.ply");
      std::cout << str_printf("mesh vertices=%zu triangles=%zu out=%s\n", mesh.vertices.size(),
                              mesh.triangles.size(), (out / "mesh.obj").string().c_str());
      return 0;
    }

    if (*rend) {
      Manifest m = read_manifest(o.manifest);
      SdfGraph graph = load_graph(m, o.manifest);
      const GraphNode& node = graph.node(node_id);
      if (node.poses.empty()) throw Error(str_printf("node %d has no poses", node_id));
      const GraphNode::PoseEntry* pe = image_id.empty() ? &node.poses.front()
                                                        : node.find_pose(image_id);
      if (!pe) throw Error("no pose for image id " + image_id);
      RenderConfig rc;
      rc.n_samples = o.samples;
      rc.slope_s = slope;
      RenderedView view = render_image(node.field, pe->pose, pe->intr, rc);
      fs::create_directories(out);
      write_ppm(view.color, out / "color.ppm");
      write_ppm16(view.color, out / "color16.ppm");
      write_pgm(view.opacity, out / "opacity.pgm");
      std::cout << "rendered image_id=" << pe->image_id << " out=" << out.string() << "\n";
      return 0;
    }

    if (*eval) {
      TriangleMesh mesh = mesh_path.ends_with(".ply") ? import_ply(mesh_path)
                                                      : import_obj(mesh_path);
      if (mesh.empty()) throw Error("mesh is empty");
      std::vector<Vec3> ref_samples;
      FieldEval sdf_eval;
      std::optional<GlobalField> gfield;
      SdfGraph graph;
      if (!scene_path2.empty()) {
        SceneDescription scene = read_scene_description(scene_path2);
        ref_samples = analytic_surface_samples(scene.scene, scene.bbox, n_samples,
                                               substream(o.seed, "eval-gt"));
      } else if (!ref_mesh.empty()) {
        TriangleMesh ref = ref_mesh.ends_with(".ply") ? import_ply(ref_mesh)
                                                      : import_obj(ref_mesh);
        ref_samples = sample_surface(ref, n_samples, substream(o.seed, "eval-gt"));
      } else {
        throw Error("eval needs --scene or --ref-mesh");
      }
      if (!o.manifest.empty()) {
        Manifest m = read_manifest(o.manifest);
        graph = load_graph(m, o.manifest);
        gfield.emplace(make_global_field(graph, blend_config(o)));
        sdf_eval = [&](const Vec3& p) { return gfield->eval(p); };
      }
      if (threshold <= 0.0) {
        Vec3 cell = mesh.bounding_box().extent() / static_cast<double>(o.mc_res - 1);
        threshold = 2.0 * cell.norm();
      }
      MetricReport mr;
      mr.threshold = threshold;
      TriangleBvh bvh(mesh);
      mr.chamfer = chamfer(ref_samples, bvh, /*squared=*/true);
      mr.f_score = f_score(ref_samples, sample_surface(mesh, n_samples,
                                                       substream(o.seed, "eval-mesh")),
                           threshold);
      mr.mean_abs_sdf = sdf_eval ? mean_abs_sdf(ref_samples, sdf_eval) : 0.0;
      mr.validate();
      fs::create_directories(out);
      std::ofstream os(out / "metrics.txt");
      os << mr.to_text();
      std::ofstream csv(out / "metrics.csv");
      csv << MetricReport::csv_header() << "\n" << mr.to_csv_row() << "\n";
      std::cout << mr.to_text();
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
