#include "sdfuse/manifest.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

namespace sdfuse {

using json = nlohmann::ordered_json;

namespace {

json vec3_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw Error("expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json mat_to_json(const Mat4& m) {
  json a = json::array();
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) a.push_back(m(r, c));
  return a;
}

Mat4 mat_from_json(const json& j) {
  if (!j.is_array() || j.size() != 16) throw Error("expected 16 matrix entries");
  Mat4 m;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) m(r, c) = j[4 * r + c].get<double>();
  return m;
}

json load_json(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open: " + path.string());
  json j;
  try {
    is >> j;
  } catch (const std::exception& e) {
    throw Error("bad json in " + path.string() + ": " + e.what());
  }
  return j;
}

void save_json(const json& j, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open for writing: " + path.string());
  os << j.dump(2) << "\n";
  if (!os) throw Error("write failed: " + path.string());
}

}  // namespace

void write_pose_file(const std::vector<GraphNode::PoseEntry>& entries,
                     const std::filesystem::path& path) {
  json images = json::array();
  for (const auto& e : entries) {
    json r = json::array();
    for (int row = 0; row < 3; ++row)
      for (int col = 0; col < 3; ++col) r.push_back(e.pose.R(row, col));
    images.push_back({{"image_id", e.image_id},
                      {"R", r},
                      {"T", vec3_to_json(e.pose.T)},
                      {"fx", e.intr.fx},
                      {"fy", e.intr.fy},
                      {"cx", e.intr.cx},
                      {"cy", e.intr.cy},
                      {"width", e.intr.width},
                      {"height", e.intr.height}});
  }
  save_json(json{{"images", images}}, path);
}

std::vector<GraphNode::PoseEntry> read_pose_file(const std::filesystem::path& path) {
  json j = load_json(path);
  if (!j.contains("images")) throw Error("pose file missing 'images': " + path.string());
  std::vector<GraphNode::PoseEntry> out;
  for (const json& im : j["images"]) {
    GraphNode::PoseEntry e;
    e.image_id = im.at("image_id").get<std::string>();
    const json& r = im.at("R");
    if (!r.is_array() || r.size() != 9) throw Error("pose file: R must have 9 entries");
    for (int row = 0; row < 3; ++row)
      for (int col = 0; col < 3; ++col) e.pose.R(row, col) = r[3 * row + col].get<double>();
    e.pose.T = vec3_from_json(im.at("T"));
    e.intr.fx = im.at("fx").get<double>();
    e.intr.fy = im.at("fy").get<double>();
    e.intr.cx = im.at("cx").get<double>();
    e.intr.cy = im.at("cy").get<double>();
    e.intr.width = im.at("width").get<int>();
    e.intr.height = im.at("height").get<int>();
    e.pose.validate();
    e.intr.validate();
    out.push_back(std::move(e));
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.image_id < b.image_id; });
  return out;
}

void write_manifest(const Manifest& m, const std::filesystem::path& path) {
  json nodes = json::array();
  for (const auto& n : m.nodes) {
    json jn = {{"id", n.id},
               {"grid", n.grid_path},
               {"poses", n.pose_path},
               {"domain", {{"lo", vec3_to_json(n.domain.lo)}, {"hi", vec3_to_json(n.domain.hi)}}},
               {"image_ids", n.image_ids}};
    if (n.to_global) jn["to_global"] = mat_to_json(*n.to_global);
    nodes.push_back(std::move(jn));
  }
  json j = {{"version", 1}, {"nodes", nodes}};
  if (!m.edge_transforms.empty()) {
    json edges = json::array();
    for (const auto& [key, h] : m.edge_transforms)
      edges.push_back({{"i", key.first}, {"j", key.second}, {"h", mat_to_json(h)}});
    j["edge_transforms"] = edges;
  }
  save_json(j, path);
}

Manifest read_manifest(const std::filesystem::path& path) {
  json j = load_json(path);
  if (!j.contains("nodes")) throw Error("manifest missing 'nodes': " + path.string());
  Manifest m;
  for (const json& jn : j["nodes"]) {
    ManifestNode n;
    n.id = jn.at("id").get<int>();
    n.grid_path = jn.at("grid").get<std::string>();
    n.pose_path = jn.value("poses", std::string{});
    n.domain.lo = vec3_from_json(jn.at("domain").at("lo"));
    n.domain.hi = vec3_from_json(jn.at("domain").at("hi"));
    if (!n.domain.valid()) throw Error("manifest: invalid node domain");
    if (jn.contains("image_ids"))
      n.image_ids = jn["image_ids"].get<std::vector<std::string>>();
    if (jn.contains("to_global")) n.to_global = mat_from_json(jn["to_global"]);
    m.nodes.push_back(std::move(n));
  }
  if (j.contains("edge_transforms")) {
    for (const json& je : j["edge_transforms"]) {
      int i = je.at("i").get<int>();
      int jj = je.at("j").get<int>();
      m.edge_transforms[{i, jj}] = mat_from_json(je.at("h"));
    }
  }
  return m;
}

SdfGraph load_graph(const Manifest& m, const std::filesystem::path& manifest_path) {
  std::filesystem::path base = manifest_path.parent_path();
  SdfGraph g;
  for (const auto& mn : m.nodes) {
    GraphNode n;
    n.id = mn.id;
    n.domain = mn.domain;
    n.field = read_grid(base / mn.grid_path);
    if ((n.field.domain().lo - mn.domain.lo).cwiseAbs().maxCoeff() > 1e-9 ||
        (n.field.domain().hi - mn.domain.hi).cwiseAbs().maxCoeff() > 1e-9)
      throw Error(str_printf("node %d: grid domain does not match manifest domain", mn.id));
    if (!mn.pose_path.empty()) n.poses = read_pose_file(base / mn.pose_path);
    n.image_ids = mn.image_ids;
    std::sort(n.image_ids.begin(), n.image_ids.end());
    for (const auto& p : n.poses)
      if (!std::binary_search(n.image_ids.begin(), n.image_ids.end(), p.image_id))
        throw Error(str_printf("node %d: pose for unknown image id '%s'", mn.id,
                               p.image_id.c_str()));
    if (mn.to_global) {
      n.to_global = SimilarityTransform::from_homogeneous(*mn.to_global);
      n.to_global.validate(1e-6);
    }
    g.nodes.push_back(std::move(n));
  }
  return g;
}

void write_ground_truth(const std::vector<std::pair<NodeId, SimilarityTransform>>& transforms,
                        const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open for writing: " + path.string());
  os << "# node <id> <to-global homogeneous 4x4, row-major>\n";
  for (const auto& [id, t] : transforms) {
    os << "node " << id;
    Mat4 h = t.homogeneous();
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) os << str_printf(" %.17g", h(r, c));
    os << "\n";
  }
  if (!os) throw Error("write failed: " + path.string());
}

std::vector<std::pair<NodeId, SimilarityTransform>> read_ground_truth(
    const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open: " + path.string());
  std::vector<std::pair<NodeId, SimilarityTransform>> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string kw;
    int id;
    ls >> kw >> id;
    if (kw != "node" || !ls) throw Error("ground truth: bad line: " + line);
    Mat4 h;
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) ls >> h(r, c);
    if (!ls) throw Error("ground truth: bad line: " + line);
    out.emplace_back(id, SimilarityTransform::from_homogeneous(h));
  }
  return out;
}

void write_scene_description(const SceneDescription& s, const std::filesystem::path& path) {
  json shapes = json::array();
  for (const auto& shape : s.scene.shapes) {
    if (const auto* sp = std::get_if<AnalyticSdf::Sphere>(&shape)) {
      shapes.push_back(
          {{"type", "sphere"}, {"center", vec3_to_json(sp->center)}, {"radius", sp->radius}});
    } else if (const auto* bx = std::get_if<AnalyticSdf::Box>(&shape)) {
      shapes.push_back({{"type", "box"},
                        {"center", vec3_to_json(bx->center)},
                        {"half_extents", vec3_to_json(bx->half_extents)}});
    } else {
      const auto& pl = std::get<AnalyticSdf::Plane>(shape);
      shapes.push_back(
          {{"type", "plane"}, {"normal", vec3_to_json(pl.normal)}, {"offset", pl.offset}});
    }
  }
  json j = {{"shapes", shapes},
            {"colorizer", s.colorizer_id},
            {"bbox", {{"lo", vec3_to_json(s.bbox.lo)}, {"hi", vec3_to_json(s.bbox.hi)}}}};
  save_json(j, path);
}

SceneDescription read_scene_description(const std::filesystem::path& path) {
  json j = load_json(path);
  SceneDescription s;
  for (const json& js : j.at("shapes")) {
    std::string type = js.at("type").get<std::string>();
    if (type == "sphere")
      s.scene.add(AnalyticSdf::Sphere{vec3_from_json(js.at("center")),
                                      js.at("radius").get<double>()});
    else if (type == "box")
      s.scene.add(
          AnalyticSdf::Box{vec3_from_json(js.at("center")), vec3_from_json(js.at("half_extents"))});
    else if (type == "plane")
      s.scene.add(AnalyticSdf::Plane{vec3_from_json(js.at("normal")).normalized(),
                                     js.at("offset").get<double>()});
    else
      throw Error("scene description: unknown shape type " + type);
  }
  s.colorizer_id = j.value("colorizer", std::string("trig"));
  s.bbox.lo = vec3_from_json(j.at("bbox").at("lo"));
  s.bbox.hi = vec3_from_json(j.at("bbox").at("hi"));
  s.scene.validate();
  return s;
}

RunLog::RunLog(const std::filesystem::path& path, bool verbose)
    : out_(std::make_shared<std::ofstream>(path, std::ios::trunc)), verbose_(verbose) {}

void RunLog::put(const std::string& stage, const std::string& keyvals) {
  std::string line = "stage=" + stage + " " + keyvals + "\n";
  if (verbose_) std::cout << line;
  if (out_ && out_->is_open()) {
    *out_ << line;
    out_->flush();
  }
}

}  // namespace sdfuse
