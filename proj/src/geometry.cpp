#include "tgrd/geometry.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "tgrd/scene.h"

namespace tgrd {

Mesh load_obj(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open OBJ file: " + path);
  Mesh mesh;
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& msg) {
    throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag)) continue;
    if (tag[0] == '#') continue;
    if (tag == "vn" || tag == "vt" || tag == "s" || tag == "o" || tag == "g" ||
        tag == "mtllib" || tag == "usemtl")
      continue;
    if (tag == "v") {
      double x, y, z;
      if (!(ss >> x >> y >> z)) fail("malformed vertex");
      mesh.vertices.emplace_back(x, y, z);
    } else if (tag == "f") {
      std::string tok;
      std::vector<int> idx;
      while (ss >> tok) {
        size_t slash = tok.find('/');
        int v = 0;
        try {
          v = std::stoi(slash == std::string::npos ? tok : tok.substr(0, slash));
        } catch (...) {
          fail("malformed face index '" + tok + "'");
        }
        if (v <= 0 || v > static_cast<int>(mesh.vertices.size()))
          fail("face index out of range: " + std::to_string(v));
        idx.push_back(v - 1);
      }
      if (idx.size() != 3) fail("only triangular faces are supported");
      mesh.faces.push_back({{idx[0], idx[1], idx[2]}});
    } else {
      fail("unsupported OBJ directive '" + tag + "'");
    }
  }
  return mesh;
}

void build_edges(Mesh& mesh) {
  mesh.edges.clear();
  std::map<std::pair<int, int>, int> table;  // (v0,v1) -> edge index
  for (int f = 0; f < static_cast<int>(mesh.faces.size()); ++f) {
    const Face& fc = mesh.faces[f];
    for (int k = 0; k < 3; ++k) {
      int a = fc.v[k], b = fc.v[(k + 1) % 3];
      if (a == b) throw std::runtime_error("degenerate face in mesh " + mesh.name);
      if (a > b) std::swap(a, b);
      auto [it, inserted] = table.try_emplace({a, b}, static_cast<int>(mesh.edges.size()));
      if (inserted) {
        mesh.edges.push_back({a, b, f, -1, EdgeClass::Smooth});
      } else {
        Edge& e = mesh.edges[it->second];
        if (e.f1 >= 0)
          throw std::runtime_error("non-manifold edge (three or more faces) in mesh " +
                                   mesh.name);
        e.f1 = f;
      }
    }
  }
}

void classify_edges(Mesh& mesh, double tol) {
  for (Edge& e : mesh.edges) {
    if (e.f1 < 0) {
      e.cls = EdgeClass::Boundary;
      continue;
    }
    const Vec3 n0 = mesh.face_normal(e.f0);
    const Vec3 n1 = mesh.face_normal(e.f1);
    const double angle = std::atan2(n0.cross(n1).norm(), n0.dot(n1));
    e.cls = angle > tol ? EdgeClass::Sharp : EdgeClass::Smooth;
  }
}

bool is_silhouette(const Mesh& mesh, const Edge& edge, const Vec3& x, const Vec3& y) {
  switch (edge.cls) {
    case EdgeClass::Boundary:
      return true;
    case EdgeClass::Smooth:
      return false;
    case EdgeClass::Sharp: {
      const Vec3 d = y - x;
      const double s0 = mesh.face_normal_unnormalized(edge.f0).dot(d);
      const double s1 = mesh.face_normal_unnormalized(edge.f1).dot(d);
      return s0 * s1 <= 0.0;
    }
  }
  return false;
}

double Camera::tan_half_y() const { return std::tan(0.5 * fov_y_deg * M_PI / 180.0); }
double Camera::tan_half_x() const { return tan_half_y() * width / static_cast<double>(height); }
double Camera::pixel_area() const {
  return (2.0 * tan_half_x() / width) * (2.0 * tan_half_y() / height);
}

namespace {

Eigen::Matrix3d rodrigues(const Vec3& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

// Applies the binding chain to one point, tracking per-slot velocities by the
// chain rule. `rotate_only` handles direction vectors (camera basis).
struct DeformState {
  Vec3 x;
  SlotVec v = zero_slots();
};

void apply_binding(DeformState& s, const Binding& b, int slot, double theta, bool rotate_only) {
  if (b.kind == Binding::Kind::Translation) {
    if (!rotate_only) {
      s.x += theta * b.axis;
      s.v[slot] += b.axis;
    }
  } else if (b.kind == Binding::Kind::Rotation) {
    const Eigen::Matrix3d R = rodrigues(b.axis, theta);
    const Vec3 pivot = rotate_only ? Vec3::Zero() : b.point;
    s.x = pivot + R * (s.x - pivot);
    for (auto& vv : s.v) vv = R * vv;
    s.v[slot] += b.axis.normalized().cross(s.x - pivot);
  }
}

}  // namespace

SceneGeom build_geometry(const SceneDesc& desc, const std::vector<double>& theta) {
  if (static_cast<int>(theta.size()) != desc.param_count)
    throw std::runtime_error("theta size does not match scene parameter count");
  if (static_cast<int>(desc.bindings.size()) > kMaxSlots)
    throw std::runtime_error("too many binding entries (max " + std::to_string(kMaxSlots) + ")");

  SceneGeom g;
  g.desc = &desc;
  g.theta = theta;
  g.meshes = desc.meshes;
  g.camera = desc.camera;
  g.nslots = static_cast<int>(desc.bindings.size());
  g.slot_param.resize(g.nslots);
  for (int s = 0; s < g.nslots; ++s) g.slot_param[s] = desc.bindings[s].param;

  g.eta.resize(desc.media.size());
  for (size_t m = 0; m < desc.media.size(); ++m) g.eta[m] = Dual(desc.media[m].eta);

  // Deform meshes and accumulate velocities.
  g.vel.resize(g.meshes.size());
  for (size_t m = 0; m < g.meshes.size(); ++m)
    g.vel[m].assign(g.meshes[m].vertices.size(), zero_slots());

  g.emitter_of_mesh.assign(g.meshes.size(), -1);
  for (size_t e = 0; e < desc.emitters.size(); ++e)
    g.emitter_of_mesh[desc.emitters[e].mesh] = static_cast<int>(e);

  for (int slot = 0; slot < g.nslots; ++slot) {
    const Binding& b = desc.bindings[slot];
    const double th = theta[b.param];
    switch (b.target) {
      case Binding::Target::Medium:
        if (b.kind != Binding::Kind::RefractiveIndex)
          throw std::runtime_error("medium bindings must be refractive_index");
        g.eta[b.target_index].v += th;
        g.eta[b.target_index].g[slot] += 1.0;
        break;
      case Binding::Target::Mesh:
      case Binding::Target::Emitter: {
        const int mi = b.target == Binding::Target::Mesh
                           ? b.target_index
                           : desc.emitters[b.target_index].mesh;
        Mesh& mesh = g.meshes[mi];
        for (size_t v = 0; v < mesh.vertices.size(); ++v) {
          DeformState st{mesh.vertices[v], g.vel[mi][v]};
          apply_binding(st, b, slot, th, false);
          mesh.vertices[v] = st.x;
          g.vel[mi][v] = st.v;
        }
        break;
      }
      case Binding::Target::Sensor: {
        DeformState pos{g.camera.pos, g.cam_pos_vel};
        apply_binding(pos, b, slot, th, false);
        g.camera.pos = pos.x;
        g.cam_pos_vel = pos.v;
        auto rot_axis = [&](Vec3& a, SlotVec& av) {
          DeformState st{a, av};
          apply_binding(st, b, slot, th, true);
          a = st.x;
          av = st.v;
        };
        rot_axis(g.camera.fwd, g.cam_fwd_vel);
        rot_axis(g.camera.right, g.cam_right_vel);
        rot_axis(g.camera.up, g.cam_up_vel);
        break;
      }
    }
  }

  // Edge tables on the deformed configuration.
  for (Mesh& mesh : g.meshes) {
    if (mesh.edges.empty()) build_edges(mesh);
    classify_edges(mesh, desc.est.dihedral_tol);
  }

  // Bounding boxes and scene scale.
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  g.bbox_lo.resize(g.meshes.size());
  g.bbox_hi.resize(g.meshes.size());
  for (size_t m = 0; m < g.meshes.size(); ++m) {
    Vec3 mlo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 mhi = -mlo;
    for (const Vec3& v : g.meshes[m].vertices) {
      mlo = mlo.cwiseMin(v);
      mhi = mhi.cwiseMax(v);
    }
    g.bbox_lo[m] = mlo;
    g.bbox_hi[m] = mhi;
    lo = lo.cwiseMin(mlo);
    hi = hi.cwiseMax(mhi);
  }
  g.scene_scale = g.meshes.empty() ? 1.0 : (hi - lo).norm();
  if (!(g.scene_scale > 0.0)) g.scene_scale = 1.0;
  g.ray_eps = 1e-4 * g.scene_scale;

  // Pooled emitter-area table.
  double area_acc = 0.0;
  for (const EmitterDesc& em : desc.emitters) {
    const Mesh& mesh = g.meshes[em.mesh];
    for (int f = 0; f < static_cast<int>(mesh.faces.size()); ++f) {
      area_acc += mesh.face_area(f);
      g.emitter_tris.push_back({em.mesh, f, area_acc});
    }
  }
  g.emitter_area = area_acc;
  if (area_acc > 0.0)
    for (auto& t : g.emitter_tris) t.cdf /= area_acc;

  // Pooled silhouette-candidate edges (Boundary + Sharp), length-weighted.
  double len_acc = 0.0;
  for (size_t m = 0; m < g.meshes.size(); ++m) {
    const Mesh& mesh = g.meshes[m];
    for (int e = 0; e < static_cast<int>(mesh.edges.size()); ++e) {
      const Edge& ed = mesh.edges[e];
      if (ed.cls == EdgeClass::Smooth) continue;
      const double len = (mesh.vertices[ed.v1] - mesh.vertices[ed.v0]).norm();
      if (!(len > 0.0)) continue;
      len_acc += len;
      g.sample_edges.push_back({static_cast<int>(m), e, len_acc});
    }
  }
  g.edge_length = len_acc;
  for (auto& e : g.sample_edges) e.cdf /= len_acc;

  // Correlation kernels, one per emitter.
  for (const EmitterDesc& em : desc.emitters) {
    std::string warn;
    g.kernels.push_back(correlate(em.profile, desc.sensor_profile, &warn));
    if (!warn.empty()) g.warnings.push_back("emitter '" + g.meshes[em.mesh].name + "': " + warn);
  }
  return g;
}

// Moller-Trumbore, two-sided.
bool ray_triangle(const Vec3& o, const Vec3& d, const Vec3& p0, const Vec3& p1, const Vec3& p2,
                  double& t, double& b1, double& b2) {
  const Vec3 e1 = p1 - p0, e2 = p2 - p0;
  const Vec3 pv = d.cross(e2);
  const double det = e1.dot(pv);
  if (std::abs(det) < 1e-14) return false;
  const double inv = 1.0 / det;
  const Vec3 tv = o - p0;
  const double u = tv.dot(pv) * inv;
  if (u < 0.0 || u > 1.0) return false;
  const Vec3 qv = tv.cross(e1);
  const double v = d.dot(qv) * inv;
  if (v < 0.0 || u + v > 1.0) return false;
  const double tt = e2.dot(qv) * inv;
  if (tt <= 0.0) return false;
  t = tt;
  b1 = u;
  b2 = v;
  return true;
}

namespace {

bool ray_box(const Vec3& o, const Vec3& inv_d, const Vec3& lo, const Vec3& hi, double tmax) {
  double t0 = 0.0, t1 = tmax;
  for (int k = 0; k < 3; ++k) {
    double a = (lo[k] - o[k]) * inv_d[k];
    double b = (hi[k] - o[k]) * inv_d[k];
    if (a > b) std::swap(a, b);
    t0 = std::max(t0, a);
    t1 = std::min(t1, b);
    if (t0 > t1) return false;
  }
  return true;
}

}  // namespace

Hit SceneGeom::intersect(const Vec3& o, const Vec3& d, double tmax) const {
  Hit best;
  best.t = tmax;
  const Vec3 inv_d = d.cwiseInverse();
  for (size_t m = 0; m < meshes.size(); ++m) {
    if (!ray_box(o, inv_d, bbox_lo[m] - Vec3::Constant(ray_eps),
                 bbox_hi[m] + Vec3::Constant(ray_eps), best.t))
      continue;
    const Mesh& mesh = meshes[m];
    for (int f = 0; f < static_cast<int>(mesh.faces.size()); ++f) {
      const Face& fc = mesh.faces[f];
      double t, b1, b2;
      if (ray_triangle(o, d, mesh.vertices[fc.v[0]], mesh.vertices[fc.v[1]],
                       mesh.vertices[fc.v[2]], t, b1, b2) &&
          t >= ray_eps && t < best.t) {
        best.t = t;
        best.mesh = static_cast<int>(m);
        best.face = f;
        best.b1 = b1;
        best.b2 = b2;
      }
    }
  }
  if (!best.valid()) best.t = std::numeric_limits<double>::infinity();
  return best;
}

bool SceneGeom::segment_visible(const Vec3& a, const Vec3& b) const {
  const Vec3 d = b - a;
  const double len = d.norm();
  if (!(len > 2.0 * ray_eps)) return true;
  const Vec3 dir = d / len;
  Hit h = intersect(a, dir, len - ray_eps);
  return !h.valid();
}

Vec3 SceneGeom::point(const SurfacePoint& sp) const {
  const Mesh& mesh = meshes[sp.mesh];
  const Face& fc = mesh.faces[sp.face];
  const double b0 = 1.0 - sp.b1 - sp.b2;
  return b0 * mesh.vertices[fc.v[0]] + sp.b1 * mesh.vertices[fc.v[1]] +
         sp.b2 * mesh.vertices[fc.v[2]];
}

DVec3 SceneGeom::dual_vertex(int mesh, int v) const {
  DVec3 r(meshes[mesh].vertices[v]);
  for (int s = 0; s < kMaxSlots; ++s) r.g[s] = vel[mesh][v][s];
  return r;
}

DVec3 SceneGeom::dual_point(const SurfacePoint& sp) const {
  const Face& fc = meshes[sp.mesh].faces[sp.face];
  const double b0 = 1.0 - sp.b1 - sp.b2;
  DVec3 r = b0 * dual_vertex(sp.mesh, fc.v[0]);
  r += sp.b1 * dual_vertex(sp.mesh, fc.v[1]);
  r += sp.b2 * dual_vertex(sp.mesh, fc.v[2]);
  return r;
}

DVec3 SceneGeom::dual_normal(const SurfacePoint& sp) const {
  const Face& fc = meshes[sp.mesh].faces[sp.face];
  const DVec3 a = dual_vertex(sp.mesh, fc.v[0]);
  const DVec3 e1 = dual_vertex(sp.mesh, fc.v[1]) - a;
  const DVec3 e2 = dual_vertex(sp.mesh, fc.v[2]) - a;
  return normalized(cross(e1, e2));
}

Dual SceneGeom::jacobian(const SurfacePoint& sp) const {
  const Face& fc = meshes[sp.mesh].faces[sp.face];
  const DVec3 a = dual_vertex(sp.mesh, fc.v[0]);
  const DVec3 e1 = dual_vertex(sp.mesh, fc.v[1]) - a;
  const DVec3 e2 = dual_vertex(sp.mesh, fc.v[2]) - a;
  return norm(cross(e1, e2));
}

SlotVec SceneGeom::velocity(const SurfacePoint& sp) const {
  const Face& fc = meshes[sp.mesh].faces[sp.face];
  const double b0 = 1.0 - sp.b1 - sp.b2;
  SlotVec r = zero_slots();
  for (int s = 0; s < kMaxSlots; ++s)
    r[s] = b0 * vel[sp.mesh][fc.v[0]][s] + sp.b1 * vel[sp.mesh][fc.v[1]][s] +
           sp.b2 * vel[sp.mesh][fc.v[2]][s];
  return r;
}

DualCamera SceneGeom::dual_camera() const {
  DualCamera c;
  c.pos = DVec3(camera.pos);
  c.fwd = DVec3(camera.fwd);
  c.right = DVec3(camera.right);
  c.up = DVec3(camera.up);
  for (int s = 0; s < kMaxSlots; ++s) {
    c.pos.g[s] = cam_pos_vel[s];
    c.fwd.g[s] = cam_fwd_vel[s];
    c.right.g[s] = cam_right_vel[s];
    c.up.g[s] = cam_up_vel[s];
  }
  return c;
}

SurfacePoint SceneGeom::sample_emitter(double u1, double u2, double u3) const {
  auto it = std::lower_bound(emitter_tris.begin(), emitter_tris.end(), u1,
                             [](const EmitterTri& t, double u) { return t.cdf < u; });
  if (it == emitter_tris.end()) it = std::prev(emitter_tris.end());
  // Uniform barycentrics via the square-root warp.
  const double su = std::sqrt(u2);
  SurfacePoint sp;
  sp.mesh = it->mesh;
  sp.face = it->face;
  sp.b1 = 1.0 - su;
  sp.b2 = u3 * su;
  return sp;
}

SceneGeom::EdgePointSample SceneGeom::sample_edge_point(double u1, double u2) const {
  EdgePointSample r;
  if (sample_edges.empty()) return r;
  auto it = std::lower_bound(sample_edges.begin(), sample_edges.end(), u1,
                             [](const SampleEdge& e, double u) { return e.cdf < u; });
  if (it == sample_edges.end()) it = std::prev(sample_edges.end());
  r.mesh = it->mesh;
  r.edge = it->edge;
  r.s = u2;
  const Mesh& mesh = meshes[r.mesh];
  const Edge& e = mesh.edges[r.edge];
  r.p = (1.0 - u2) * mesh.vertices[e.v0] + u2 * mesh.vertices[e.v1];
  return r;
}

}  // namespace tgrd
