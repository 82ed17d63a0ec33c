#include "sdfuse/pipeline.hpp"

#include <chrono>
#include <fstream>

namespace sdfuse {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

[[noreturn]] void stage_error(const std::string& stage, const std::string& what) {
  throw Error("stage=" + stage + ": " + what);
}

}  // namespace

std::vector<PosePair> edge_pose_pairs(const SdfGraph& graph, const GraphEdge& edge) {
  const GraphNode& ni = graph.node(edge.i);
  const GraphNode& nj = graph.node(edge.j);
  std::vector<PosePair> pairs;
  for (const std::string& id : edge.shared_ids) {
    const auto* pi = ni.find_pose(id);
    const auto* pj = nj.find_pose(id);
    if (!pi || !pj)
      throw Error(str_printf("edge (%d,%d): shared image '%s' missing a pose entry", edge.i,
                             edge.j, id.c_str()));
    if (!(pi->intr == pj->intr))
      throw Error(str_printf("edge (%d,%d): intrinsics differ for image '%s'", edge.i, edge.j,
                             id.c_str()));
    pairs.push_back({id, pi->pose, pj->pose, pi->intr});
  }
  return pairs;
}

void write_registered_manifest(const Manifest& input, const std::filesystem::path& input_path,
                               const SdfGraph& graph, const EdgeTransforms& transforms,
                               const std::filesystem::path& path) {
  Manifest out = input;
  std::filesystem::path in_base = std::filesystem::absolute(input_path).parent_path();
  std::filesystem::path out_base = std::filesystem::absolute(path).parent_path();
  for (auto& mn : out.nodes) {
    auto rel = [&](const std::string& p) {
      if (p.empty()) return p;
      std::error_code ec;
      auto r = std::filesystem::relative(in_base / p, out_base, ec);
      return ec ? (in_base / p).string() : r.string();
    };
    mn.grid_path = rel(mn.grid_path);
    mn.pose_path = rel(mn.pose_path);
    mn.to_global = graph.node(mn.id).to_global.homogeneous();
  }
  out.edge_transforms.clear();
  for (const auto& [key, t] : transforms)
    out.edge_transforms[{key.i, key.j}] = t.homogeneous();
  write_manifest(out, path);
}

PipelineResult run_pipeline(const PipelineConfig& cfg) {
  auto t0 = std::chrono::steady_clock::now();
  std::filesystem::create_directories(cfg.outdir);
  RunLog log(cfg.outdir / "run.log", cfg.verbose);
  log.put("config", str_printf("manifest=%s seed=%llu root=%d mc_res=%d blend=%s beta=%g",
                               cfg.manifest_path.string().c_str(),
                               static_cast<unsigned long long>(cfg.seed), cfg.root, cfg.mc_res,
                               cfg.blend.mode == BlendConfig::Mode::softmax ? "softmax" : "min",
                               cfg.blend.beta));

  PipelineResult res;
  Manifest manifest;
  try {
    manifest = read_manifest(cfg.manifest_path);
    res.graph = load_graph(manifest, cfg.manifest_path);
  } catch (const Error& e) {
    stage_error("load", e.what());
  }
  log.put("load", str_printf("nodes=%zu elapsed=%.2fs", res.graph.nodes.size(),
                             seconds_since(t0)));

  const bool single_node = res.graph.nodes.size() == 1;
  if (!single_node) {
    try {
      res.graph.edges = build_edges(res.graph.nodes);
    } catch (const Error& e) {
      stage_error("graph", e.what());
    }
    log.put("graph", str_printf("edges=%zu", res.graph.edges.size()));

    try {
      res.mst = minimum_spanning_tree(res.graph.nodes.size(), res.graph.edges);
    } catch (const Error& e) {
      stage_error("mst", e.what());
    }
    log.put("mst", str_printf("edges=%zu", res.mst.size()));

    std::filesystem::path trace_dir = cfg.outdir / "traces";
    std::filesystem::create_directories(trace_dir);
    std::filesystem::path render_dir = cfg.outdir / "renders";
    if (cfg.write_renders) std::filesystem::create_directories(render_dir);

    for (const GraphEdge& edge : res.mst) {
      auto te = std::chrono::steady_clock::now();
      const GraphNode& ni = res.graph.node(edge.i);
      const GraphNode& nj = res.graph.node(edge.j);
      try {
        std::vector<PosePair> pairs = edge_pose_pairs(res.graph, edge);
        double residual = 0.0;
        SimilarityTransform t0_edge = init_registration(pairs, 0.5, &residual);

        SimilarityTransform t_edge = t0_edge;
        if (!cfg.skip_refine) {
          std::vector<MaskImage> masks =
              compute_masks(ni.field, nj.field, t0_edge, pairs, cfg.refine.render, cfg.mask_tau);
          RefineConfig rc = cfg.refine;
          rc.seed = substream(cfg.seed, "edge-refine", static_cast<uint64_t>(edge.i),
                              static_cast<uint64_t>(edge.j));
          RefineResult rr = refine_registration(nj.field, pairs, masks, t0_edge, rc);
          t_edge = rr.transform;
          write_loss_trace_csv(rr.trace,
                               trace_dir / str_printf("edge_%02d_%02d.csv", edge.i, edge.j));
          if (cfg.write_renders && !pairs.empty()) {
            const PosePair& pp = pairs.front();
            auto before =
                render_image(nj.field, transform_pose(pp.pose_i, t0_edge).pose, pp.intr,
                             cfg.refine.render);
            auto after = render_image(nj.field, transform_pose(pp.pose_i, t_edge).pose, pp.intr,
                                      cfg.refine.render);
            auto target = render_image(nj.field, pp.pose_j, pp.intr, cfg.refine.render);
            auto tag = str_printf("edge_%02d_%02d", edge.i, edge.j);
            write_ppm(before.color, render_dir / (tag + "_before.ppm"));
            write_ppm(after.color, render_dir / (tag + "_after.ppm"));
            write_ppm(target.color, render_dir / (tag + "_target.ppm"));
            Image3 err(pp.intr.width, pp.intr.height);
            for (int y = 0; y < err.height; ++y)
              for (int x = 0; x < err.width; ++x)
                err.at(x, y) = (after.color.at(x, y) - target.color.at(x, y)).cwiseAbs();
            write_ppm(err, render_dir / (tag + "_error.ppm"));
          }
          log.put("register",
                  str_printf("edge=(%d,%d) shared=%zu residual=%.3g loss0=%.6g lossN=%.6g "
                             "iters=%d elapsed=%.2fs",
                             edge.i, edge.j, pairs.size(), residual, rr.initial_loss,
                             rr.final_loss, rr.iterations_run, seconds_since(te)));
        } else {
          log.put("register", str_printf("edge=(%d,%d) shared=%zu residual=%.3g init-only",
                                         edge.i, edge.j, pairs.size(), residual));
        }
        res.edge_transforms.emplace(EdgeKey(edge.i, edge.j), t_edge);
      } catch (const Error& e) {
        stage_error(str_printf("register edge=(%d,%d)", edge.i, edge.j), e.what());
      }
    }

    try {
      propagate_transforms(res.graph, res.mst, cfg.root, res.edge_transforms);
    } catch (const Error& e) {
      stage_error("propagate", e.what());
    }
    log.put("propagate", str_printf("root=%d", cfg.root));
  } else {
    res.graph.nodes[0].to_global = SimilarityTransform::identity();
    log.put("register", "single-node manifest, registration skipped");
  }

  res.registered_manifest = cfg.outdir / "registered_manifest.json";
  write_registered_manifest(manifest, cfg.manifest_path, res.graph, res.edge_transforms,
                            res.registered_manifest);

  GlobalField field = make_global_field(res.graph, cfg.blend);
  res.mesh_region = cfg.mesh_region.value_or(field.bounding_box());
  log.put("blend", str_printf("entries=%zu mode=%s beta=%g", field.entries().size(),
                              cfg.blend.mode == BlendConfig::Mode::softmax ? "softmax" : "min",
                              cfg.blend.beta));

  try {
    auto tm = std::chrono::steady_clock::now();
    res.mesh = marching_cubes([&](const Vec3& p) { return field.eval(p); }, res.mesh_region,
                              cfg.mc_res, cfg.mc_res, cfg.mc_res);
    res.mesh_obj = cfg.outdir / "mesh.obj";
    res.mesh_ply = cfg.outdir / "mesh.ply";
    export_obj(res.mesh, res.mesh_obj);
    export_ply(res.mesh, res.mesh_ply);
    log.put("mesh", str_printf("vertices=%zu triangles=%zu elapsed=%.2fs",
                               res.mesh.vertices.size(), res.mesh.triangles.size(),
                               seconds_since(tm)));
  } catch (const Error& e) {
    stage_error("mesh", e.what());
  }

  // Report: mesh-extraction settings always recorded; ground-truth metrics
  // when the analytic scene is available.
  std::string report;
  report += str_printf("mc_res=%d\n", cfg.mc_res);
  report += str_printf("region_lo=%.17g %.17g %.17g\n", res.mesh_region.lo.x(),
                       res.mesh_region.lo.y(), res.mesh_region.lo.z());
  report += str_printf("region_hi=%.17g %.17g %.17g\n", res.mesh_region.hi.x(),
                       res.mesh_region.hi.y(), res.mesh_region.hi.z());
  report += str_printf("blend=%s\nbeta=%.17g\n",
                       cfg.blend.mode == BlendConfig::Mode::softmax ? "softmax" : "min",
                       cfg.blend.beta);
  report += str_printf("vertices=%zu\ntriangles=%zu\n", res.mesh.vertices.size(),
                       res.mesh.triangles.size());

  if (cfg.scene_path) {
    try {
      SceneDescription scene = read_scene_description(*cfg.scene_path);
      if (res.mesh.empty()) stage_error("metrics", "empty mesh, nothing to evaluate");
      Vec3 cell = res.mesh_region.extent() / static_cast<double>(cfg.mc_res - 1);
      double cell_diag = cell.norm();
      std::vector<Vec3> gt_samples = analytic_surface_samples(
          scene.scene, scene.bbox, cfg.metric_samples, substream(cfg.seed, "metrics-gt"));
      std::vector<Vec3> mesh_samples =
          sample_surface(res.mesh, cfg.metric_samples, substream(cfg.seed, "metrics-mesh"));
      TriangleBvh bvh(res.mesh);
      MetricReport mr;
      mr.threshold = 2.0 * cell_diag;
      mr.chamfer = chamfer(gt_samples, bvh, /*squared=*/true);
      mr.f_score = f_score(gt_samples, mesh_samples, mr.threshold);
      mr.mean_abs_sdf = mean_abs_sdf(gt_samples, [&](const Vec3& p) { return field.eval(p); });
      mr.validate();
      res.metrics = mr;
      report += mr.to_text();
      log.put("metrics",
              str_printf("chamfer=%.6g f_score=%.4f mean_abs_sdf=%.6g threshold=%.6g",
                         mr.chamfer, mr.f_score, mr.mean_abs_sdf, mr.threshold));
    } catch (const Error& e) {
      stage_error("metrics", e.what());
    }
  }

  res.report_path = cfg.outdir / "report.txt";
  {
    std::ofstream os(res.report_path);
    os << report;
    if (!os) stage_error("report", "write failed");
  }
  std::ofstream csv(cfg.outdir / "report.csv");
  csv << MetricReport::csv_header() << "\n";
  if (res.metrics) csv << res.metrics->to_csv_row() << "\n";

  log.put("done", str_printf("elapsed=%.2fs", seconds_since(t0)));
  return res;
}

}  // namespace sdfuse
