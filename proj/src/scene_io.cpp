#include "tgrd/scene_io.h"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <set>
#include <stdexcept>
#include <string>

namespace tgrd {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw std::runtime_error(where + ": " + what);
}

void expect_keys(const json& j, const std::string& where,
                 std::initializer_list<const char*> keys) {
  if (!j.is_object()) fail(where, "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : keys)
      if (it.key() == k) {
        known = true;
        break;
      }
    if (!known) fail(where, "unknown key '" + it.key() + "'");
  }
}

const json* find(const json& j, const char* key) {
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

double get_num(const json& j, const std::string& where, const char* key) {
  const json* v = find(j, key);
  if (!v) fail(where, std::string("missing '") + key + "'");
  if (!v->is_number()) fail(where + "." + key, "expected a number");
  return v->get<double>();
}

double get_num_or(const json& j, const std::string& where, const char* key, double def) {
  const json* v = find(j, key);
  if (!v) return def;
  if (!v->is_number()) fail(where + "." + key, "expected a number");
  return v->get<double>();
}

int get_int(const json& j, const std::string& where, const char* key) {
  const json* v = find(j, key);
  if (!v) fail(where, std::string("missing '") + key + "'");
  if (!v->is_number_integer()) fail(where + "." + key, "expected an integer");
  return v->get<int>();
}

int get_int_or(const json& j, const std::string& where, const char* key, int def) {
  const json* v = find(j, key);
  if (!v) return def;
  if (!v->is_number_integer()) fail(where + "." + key, "expected an integer");
  return v->get<int>();
}

std::string get_str(const json& j, const std::string& where, const char* key) {
  const json* v = find(j, key);
  if (!v) fail(where, std::string("missing '") + key + "'");
  if (!v->is_string()) fail(where + "." + key, "expected a string");
  return v->get<std::string>();
}

Vec3 parse_vec3(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 3 || !v[0].is_number() || !v[1].is_number() ||
      !v[2].is_number())
    fail(where, "expected [x, y, z]");
  return Vec3(v[0].get<double>(), v[1].get<double>(), v[2].get<double>());
}

Vec3 get_vec3(const json& j, const std::string& where, const char* key) {
  const json* v = find(j, key);
  if (!v) fail(where, std::string("missing '") + key + "'");
  return parse_vec3(*v, where + "." + key);
}

Vec3 get_vec3_or(const json& j, const std::string& where, const char* key, const Vec3& def) {
  const json* v = find(j, key);
  if (!v) return def;
  return parse_vec3(*v, where + "." + key);
}

TemporalProfile parse_profile(const json& j, const std::string& where) {
  if (!j.is_object()) fail(where, "expected a profile object");
  const std::string type = get_str(j, where, "type");
  if (type == "delta") {
    expect_keys(j, where, {"type", "time"});
    return TemporalProfile::delta(get_num_or(j, where, "time", 0.0));
  }
  if (type == "box") {
    expect_keys(j, where, {"type", "start", "end", "amplitude"});
    const double a = get_num(j, where, "start"), b = get_num(j, where, "end");
    if (!(b > a)) fail(where, "box profile needs end > start");
    return TemporalProfile::box(a, b, get_num_or(j, where, "amplitude", 1.0));
  }
  if (type == "triangle") {
    expect_keys(j, where, {"type", "center", "half_width", "peak"});
    const double w = get_num(j, where, "half_width");
    if (!(w > 0.0)) fail(where, "triangle profile needs half_width > 0");
    return TemporalProfile::triangle(get_num(j, where, "center"), w,
                                     get_num_or(j, where, "peak", 1.0));
  }
  if (type == "gaussian") {
    expect_keys(j, where, {"type", "mean", "sigma", "amplitude"});
    const double s = get_num(j, where, "sigma");
    if (!(s > 0.0)) fail(where, "gaussian profile needs sigma > 0");
    return TemporalProfile::gaussian(get_num(j, where, "mean"), s,
                                     get_num_or(j, where, "amplitude", 1.0));
  }
  fail(where + ".type", "unknown profile type '" + type + "'");
}

Material parse_material(const json& j, const std::string& where) {
  Material m;
  const std::string type = get_str(j, where, "type");
  if (type == "lambertian") {
    expect_keys(j, where, {"type", "albedo"});
    m.kind = Material::Kind::Lambertian;
    m.albedo = get_num_or(j, where, "albedo", 0.5);
    if (m.albedo < 0.0 || m.albedo > 1.0) fail(where + ".albedo", "must be in [0, 1]");
  } else if (type == "rough_conductor") {
    expect_keys(j, where, {"type", "alpha", "reflectance"});
    m.kind = Material::Kind::RoughConductor;
    m.alpha = get_num_or(j, where, "alpha", 0.2);
    m.reflectance = get_num_or(j, where, "reflectance", 0.9);
    if (m.alpha < 0.05) fail(where + ".alpha", "roughness below 0.05 is not supported");
    if (m.reflectance < 0.0 || m.reflectance > 1.0)
      fail(where + ".reflectance", "must be in [0, 1]");
  } else {
    fail(where + ".type", "unknown material type '" + type + "'");
  }
  return m;
}

}  // namespace

Mesh make_quad(const Vec3& origin, const Vec3& eu, const Vec3& ev) {
  Mesh m;
  m.vertices = {origin, origin + eu, origin + eu + ev, origin + ev};
  m.faces = {{{0, 1, 2}}, {{0, 2, 3}}};
  return m;
}

Mesh make_box(const Vec3& lo, const Vec3& hi) {
  Mesh m;
  for (int i = 0; i < 8; ++i)
    m.vertices.push_back(Vec3(i & 1 ? hi.x() : lo.x(), i & 2 ? hi.y() : lo.y(),
                              i & 4 ? hi.z() : lo.z()));
  // Outward-facing winding for each axis-aligned face.
  const int f[6][4] = {
      {0, 4, 6, 2},  // -x
      {1, 3, 7, 5},  // +x
      {0, 1, 5, 4},  // -y
      {2, 6, 7, 3},  // +y
      {0, 2, 3, 1},  // -z
      {4, 5, 7, 6},  // +z
  };
  for (const auto& q : f) {
    m.faces.push_back({{q[0], q[1], q[2]}});
    m.faces.push_back({{q[0], q[2], q[3]}});
  }
  return m;
}

namespace {

Mesh parse_mesh_geometry(const json& j, const std::string& where,
                         const std::filesystem::path& base_dir) {
  const bool has_obj = find(j, "obj") != nullptr;
  const bool has_quad = find(j, "quad") != nullptr;
  const bool has_box = find(j, "box") != nullptr;
  if (int(has_obj) + int(has_quad) + int(has_box) != 1)
    fail(where, "needs exactly one of 'obj', 'quad', 'box'");
  if (has_obj) {
    const std::string rel = get_str(j, where, "obj");
    return load_obj((base_dir / rel).string());
  }
  if (has_quad) {
    const json& q = *find(j, "quad");
    const std::string qw = where + ".quad";
    expect_keys(q, qw, {"origin", "edge_u", "edge_v"});
    const Vec3 o = get_vec3(q, qw, "origin");
    const Vec3 eu = get_vec3(q, qw, "edge_u");
    const Vec3 ev = get_vec3(q, qw, "edge_v");
    if (eu.cross(ev).norm() <= 0.0) fail(qw, "degenerate quad");
    return make_quad(o, eu, ev);
  }
  const json& bx = *find(j, "box");
  const std::string bw = where + ".box";
  expect_keys(bx, bw, {"min", "max"});
  const Vec3 lo = get_vec3(bx, bw, "min");
  const Vec3 hi = get_vec3(bx, bw, "max");
  if (!(lo.x() < hi.x() && lo.y() < hi.y() && lo.z() < hi.z()))
    fail(bw, "needs min < max componentwise");
  return make_box(lo, hi);
}

Binding parse_binding(const json& j, const std::string& where, const SceneDesc& d) {
  expect_keys(j, where, {"param", "target", "index", "kind", "axis", "point"});
  Binding b;
  b.param = get_int(j, where, "param");
  if (b.param < 0) fail(where + ".param", "must be >= 0");
  const std::string target = get_str(j, where, "target");
  const std::string kind = get_str(j, where, "kind");
  b.target_index = get_int_or(j, where, "index", 0);

  if (target == "mesh") {
    b.target = Binding::Target::Mesh;
    if (b.target_index < 0 || b.target_index >= static_cast<int>(d.meshes.size()))
      fail(where + ".index", "mesh index out of range");
  } else if (target == "emitter") {
    b.target = Binding::Target::Emitter;
    if (b.target_index < 0 || b.target_index >= static_cast<int>(d.emitters.size()))
      fail(where + ".index", "emitter index out of range");
  } else if (target == "sensor") {
    b.target = Binding::Target::Sensor;
    b.target_index = 0;
  } else if (target == "medium") {
    b.target = Binding::Target::Medium;
    if (b.target_index < 0 || b.target_index >= static_cast<int>(d.media.size()))
      fail(where + ".index", "medium index out of range");
  } else {
    fail(where + ".target", "unknown target '" + target + "'");
  }

  if (kind == "translation") {
    b.kind = Binding::Kind::Translation;
    b.axis = get_vec3(j, where, "axis");
    if (!(b.axis.norm() > 0.0)) fail(where + ".axis", "must be non-zero");
  } else if (kind == "rotation") {
    b.kind = Binding::Kind::Rotation;
    b.axis = get_vec3(j, where, "axis");
    if (!(b.axis.norm() > 0.0)) fail(where + ".axis", "must be non-zero");
    b.axis.normalize();
    b.point = get_vec3_or(j, where, "point", Vec3::Zero());
  } else if (kind == "refractive_index") {
    b.kind = Binding::Kind::RefractiveIndex;
  } else {
    fail(where + ".kind", "unknown kind '" + kind + "'");
  }

  if (b.target == Binding::Target::Medium && b.kind != Binding::Kind::RefractiveIndex)
    fail(where, "medium targets only take kind 'refractive_index'");
  if (b.target != Binding::Target::Medium && b.kind == Binding::Kind::RefractiveIndex)
    fail(where, "'refractive_index' needs a medium target");
  return b;
}

}  // namespace

SceneDesc load_scene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scene file: " + path);
  json root;
  try {
    root = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  const std::filesystem::path base_dir = std::filesystem::path(path).parent_path();

  SceneDesc d;
  expect_keys(root, "scene",
              {"light_speed", "camera", "sensor", "meshes", "media", "parameters",
               "estimator"});
  d.c = get_num_or(root, "scene", "light_speed", 0.299792458);
  if (!(d.c > 0.0)) fail("scene.light_speed", "must be > 0");

  // --- camera --------------------------------------------------------------
  const json* cam = find(root, "camera");
  if (!cam) fail("scene", "missing 'camera'");
  expect_keys(*cam, "camera", {"position", "look_at", "up", "fov_y", "width", "height"});
  d.camera.pos = get_vec3(*cam, "camera", "position");
  const Vec3 look_at = get_vec3(*cam, "camera", "look_at");
  const Vec3 up_hint = get_vec3_or(*cam, "camera", "up", Vec3(0, 1, 0));
  const Vec3 fwd = look_at - d.camera.pos;
  if (!(fwd.norm() > 0.0)) fail("camera.look_at", "coincides with position");
  d.camera.fwd = fwd.normalized();
  const Vec3 right = d.camera.fwd.cross(up_hint);
  if (!(right.norm() > 1e-9)) fail("camera.up", "parallel to the view direction");
  d.camera.right = right.normalized();
  d.camera.up = d.camera.right.cross(d.camera.fwd);
  d.camera.fov_y_deg = get_num_or(*cam, "camera", "fov_y", 50.0);
  if (!(d.camera.fov_y_deg > 0.0 && d.camera.fov_y_deg < 180.0))
    fail("camera.fov_y", "must be in (0, 180)");
  d.camera.width = get_int(*cam, "camera", "width");
  d.camera.height = get_int(*cam, "camera", "height");
  if (d.camera.width < 1 || d.camera.height < 1)
    fail("camera", "width and height must be >= 1");

  // --- sensor (exactly one) --------------------------------------------------
  const json* sensor = find(root, "sensor");
  if (!sensor) fail("scene", "missing 'sensor'");
  expect_keys(*sensor, "sensor", {"response", "frames"});
  const json* resp = find(*sensor, "response");
  if (!resp) fail("sensor", "missing 'response'");
  d.sensor_profile = parse_profile(*resp, "sensor.response");
  if (d.sensor_profile.kind == TemporalProfile::Kind::Delta)
    fail("sensor.response", "delta sensor responses are not supported");
  const json* frames = find(*sensor, "frames");
  if (!frames) fail("sensor", "missing 'frames'");
  expect_keys(*frames, "sensor.frames", {"count", "exposure", "start"});
  d.frames.count = get_int(*frames, "sensor.frames", "count");
  d.frames.exposure = get_num(*frames, "sensor.frames", "exposure");
  d.frames.start = get_num_or(*frames, "sensor.frames", "start", 0.0);
  if (d.frames.count < 1) fail("sensor.frames.count", "must be >= 1");
  if (!(d.frames.exposure > 0.0)) fail("sensor.frames.exposure", "must be > 0");

  // --- meshes ----------------------------------------------------------------
  const json* meshes = find(root, "meshes");
  if (!meshes || !meshes->is_array() || meshes->empty())
    fail("scene.meshes", "need at least one mesh");
  int mi = 0;
  for (const json& jm : *meshes) {
    const std::string where = "meshes[" + std::to_string(mi) + "]";
    expect_keys(jm, where, {"name", "obj", "quad", "box", "material", "emission"});
    Mesh mesh = parse_mesh_geometry(jm, where, base_dir);
    mesh.name = find(jm, "name") ? get_str(jm, where, "name") : where;
    Material mat;
    if (const json* jmat = find(jm, "material"))
      mat = parse_material(*jmat, where + ".material");
    if (const json* jem = find(jm, "emission")) {
      const std::string ew = where + ".emission";
      expect_keys(*jem, ew, {"radiance", "profile"});
      EmitterDesc em;
      em.mesh = mi;
      em.radiance = get_num(*jem, ew, "radiance");
      if (!(em.radiance > 0.0)) fail(ew + ".radiance", "must be > 0");
      const json* prof = find(*jem, "profile");
      if (!prof) fail(ew, "missing 'profile'");
      em.profile = parse_profile(*prof, ew + ".profile");
      d.emitters.push_back(em);
    }
    d.meshes.push_back(std::move(mesh));
    d.materials.push_back(mat);
    ++mi;
  }
  if (d.emitters.empty()) fail("scene.meshes", "need at least one emitting mesh");

  // --- media -------------------------------------------------------------------
  if (const json* media = find(root, "media")) {
    if (!media->is_array() || media->empty()) fail("scene.media", "expected a non-empty array");
    d.media.clear();
    int i = 0;
    for (const json& jm : *media) {
      const std::string where = "media[" + std::to_string(i++) + "]";
      expect_keys(jm, where, {"eta"});
      Medium m;
      m.eta = get_num(jm, where, "eta");
      if (!(m.eta > 0.0)) fail(where + ".eta", "must be > 0");
      d.media.push_back(m);
    }
  }

  // --- parameter bindings --------------------------------------------------------
  if (const json* params = find(root, "parameters")) {
    if (!params->is_array()) fail("scene.parameters", "expected an array");
    int i = 0;
    for (const json& jb : *params)
      d.bindings.push_back(parse_binding(jb, "parameters[" + std::to_string(i++) + "]", d));
    if (static_cast<int>(d.bindings.size()) > kMaxSlots)
      fail("scene.parameters",
           "at most " + std::to_string(kMaxSlots) + " binding entries are supported");
    std::set<int> used;
    int max_param = -1;
    for (const Binding& b : d.bindings) {
      used.insert(b.param);
      max_param = std::max(max_param, b.param);
    }
    d.param_count = max_param + 1;
    for (int p = 0; p <= max_param; ++p)
      if (!used.count(p))
        fail("scene.parameters", "parameter indices must be contiguous; " +
                                     std::to_string(p) + " is unused");
  }

  // --- estimator settings -----------------------------------------------------------
  if (const json* est = find(root, "estimator")) {
    expect_keys(*est, "estimator",
                {"spp_interior", "spp_boundary", "max_depth", "seed", "dihedral_tol"});
    d.est.spp_interior = get_int_or(*est, "estimator", "spp_interior", d.est.spp_interior);
    d.est.spp_boundary = get_int_or(*est, "estimator", "spp_boundary", d.est.spp_boundary);
    d.est.max_depth = get_int_or(*est, "estimator", "max_depth", d.est.max_depth);
    if (const json* seed = find(*est, "seed")) {
      if (!seed->is_number_unsigned() && !seed->is_number_integer())
        fail("estimator.seed", "expected an integer");
      d.est.seed = seed->get<uint64_t>();
    }
    d.est.dihedral_tol = get_num_or(*est, "estimator", "dihedral_tol", d.est.dihedral_tol);
    if (d.est.spp_interior < 0) fail("estimator.spp_interior", "must be >= 0");
    if (d.est.spp_boundary < 0) fail("estimator.spp_boundary", "must be >= 0");
    if (d.est.max_depth < 1 || d.est.max_depth > 30)
      fail("estimator.max_depth", "must be in [1, 30]");
    if (!(d.est.dihedral_tol > 0.0)) fail("estimator.dihedral_tol", "must be > 0");
  }

  return d;
}

}  // namespace tgrd
