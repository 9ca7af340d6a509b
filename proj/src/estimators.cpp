#include "tgrd/estimators.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>
#include <vector>

#include "tgrd/rng.h"
#include "tgrd/transport.h"

namespace tgrd {
namespace {

constexpr uint64_t kStreamInterior = 1;
constexpr uint64_t kStreamBoundary = 2;
constexpr int kMaxPathVerts = 32;  // scene validation keeps max_depth below this

struct Vertex {
  SurfacePoint sp;
  Vec3 p = Vec3::Zero();
  Vec3 n = Vec3::Zero();
  double pdf_area = 1.0;  // area pdf as sampled along its own subpath
};

struct Ctx {
  const SceneGeom& g;
  FrameSpec frames;
  uint64_t seed;
  int max_depth;
};

double to_area(double pdf_w, const Vec3& a, const Vec3& b, const Vec3& nb) {
  const Vec3 d = b - a;
  const double r2 = d.squaredNorm();
  if (r2 <= 0.0) return 0.0;
  return pdf_w * std::abs(nb.dot(d)) / (r2 * std::sqrt(r2));
}

Dual to_area(const Dual& pdf_w, const DVec3& a, const DVec3& b, const DVec3& nb) {
  const DVec3 d = b - a;
  const Dual r2 = squared_norm(d);
  if (r2.v <= 0.0) return Dual(0.0);
  return pdf_w * abs(dot(nb, d)) / (r2 * sqrt(r2));
}

double scalar_geometry(const Vec3& x, const Vec3& nx, const Vec3& y, const Vec3& ny) {
  const Vec3 d = y - x;
  const double r2 = d.squaredNorm();
  if (r2 <= 0.0) return 0.0;
  return std::abs(nx.dot(d)) * std::abs(ny.dot(d)) / (r2 * r2);
}

double bsdf_scalar(const Material& m, const Vec3& n, const Vec3& wi, const Vec3& wo) {
  return bsdf_eval(m, DVec3(n), DVec3(wi), DVec3(wo)).v;
}

// Dual point of the fixed pixel ray through x0 intersected with the dual
// plane (q0, n). The ray keeps fixed coefficients in the (possibly moving)
// camera frame, so the result tracks how the pixel grid's image moves on
// that plane. False at grazing incidence.
bool ray_plane_point(const DualCamera& cam, const Vec3& x0, const DVec3& q0, const DVec3& n,
                     DVec3* out) {
  const Vec3 d0 = x0 - cam.pos.v;
  const DVec3 dir = d0.dot(cam.fwd.v) * cam.fwd + d0.dot(cam.right.v) * cam.right +
                    d0.dot(cam.up.v) * cam.up;
  const Dual denom = dot(n, dir);
  if (denom.v == 0.0) return false;
  const Dual tt = dot(n, q0 - cam.pos) / denom;
  *out = cam.pos + tt * dir;
  out->v = x0;  // intersection agrees with x0 only up to rounding
  return true;
}

// Dual plane of a face: a vertex and the (unnormalized) normal.
void face_plane(const SceneGeom& g, int mesh, int face, DVec3* q0, DVec3* n) {
  const Face& fc = g.meshes[mesh].faces[face];
  *q0 = g.dual_vertex(mesh, fc.v[0]);
  *n = cross(g.dual_vertex(mesh, fc.v[1]) - *q0, g.dual_vertex(mesh, fc.v[2]) - *q0);
}

// Primary hits are parametrized by their pixel ray, not by material
// coordinates: the point slides along the fixed ray as the surface deforms.
// Under this parametrization the pixel assignment is constant in theta and a
// surface sliding tangentially under a fixed ray correctly shows zero
// shading drift. Velocity: dual ray intersected with the dual plane of the
// hit face.
DVec3 primary_dual_point(const SceneGeom& g, const DualCamera& cam, const SurfacePoint& sp) {
  DVec3 q0, n;
  face_plane(g, sp.mesh, sp.face, &q0, &n);
  DVec3 r;
  if (!ray_plane_point(cam, g.point(sp), q0, n, &r))
    return g.dual_point(sp);  // grazing: keep the material point
  return r;
}

// ---- subpath walks ---------------------------------------------------------

// out[0] is the pinhole pseudo-vertex. Returns the vertex count.
int camera_walk(const SceneGeom& g, int px, int py, int max_surface, Pcg32& rng, Vertex* out) {
  const Camera& cam = g.camera;
  out[0].sp = {};
  out[0].p = cam.pos;
  out[0].n = cam.fwd;
  out[0].pdf_area = 1.0;
  Vec3 o = cam.pos;
  Vec3 d = camera_ray_dir(cam, px, py, rng.uniform(), rng.uniform());
  double pdf_omega = camera_ray_pdf(g, cam.fwd.dot(d));
  int n = 1;
  while (n - 1 < max_surface) {
    const Hit h = g.intersect(o, d);
    if (!h.valid()) break;
    Vertex& v = out[n];
    v.sp = h.sp();
    v.p = g.point(v.sp);
    v.n = g.normal(v.sp);
    v.pdf_area = to_area(pdf_omega, o, v.p, v.n);
    ++n;
    if (n - 1 >= max_surface) break;
    double pdf = 0.0;
    const Vec3 wo = bsdf_sample(g.material(v.sp.mesh), v.n, -d, rng, &pdf);
    if (pdf <= 0.0) break;
    o = v.p;
    d = wo;
    pdf_omega = pdf;
  }
  return n;
}

// out[0] is an area sample on the emitter pool; emission leaves on the
// face-normal side (cosine-weighted). Returns the vertex count.
int light_walk(const SceneGeom& g, int max_verts, Pcg32& rng, Vertex* out) {
  if (g.emitter_area <= 0.0 || max_verts <= 0) return 0;
  const SurfacePoint sp = g.sample_emitter(rng.uniform(), rng.uniform(), rng.uniform());
  out[0].sp = sp;
  out[0].p = g.point(sp);
  out[0].n = g.normal(sp);
  out[0].pdf_area = 1.0 / g.emitter_area;
  int n = 1;
  if (n >= max_verts) return n;
  double pdf_omega = 0.0;
  Vec3 o = out[0].p;
  Vec3 d = cosine_sample(out[0].n, rng.uniform(), rng.uniform(), &pdf_omega);
  if (pdf_omega <= 0.0) return n;
  while (n < max_verts) {
    const Hit h = g.intersect(o, d);
    if (!h.valid()) break;
    Vertex& v = out[n];
    v.sp = h.sp();
    v.p = g.point(v.sp);
    v.n = g.normal(v.sp);
    v.pdf_area = to_area(pdf_omega, o, v.p, v.n);
    ++n;
    if (n >= max_verts) break;
    double pdf = 0.0;
    const Vec3 wo = bsdf_sample(g.material(v.sp.mesh), v.n, -d, rng, &pdf);
    if (pdf <= 0.0) break;
    o = v.p;
    d = wo;
    pdf_omega = pdf;
  }
  return n;
}

// ---- complete-path evaluation ----------------------------------------------

// Area pdfs of sampling vertex i from the light side (pL) and from the
// camera side (pC), needed for i in [0, k-2]. pv[k] is the pinhole; P/N are
// the dual positions/normals of the full chain. The pdfs carry derivative
// channels because the balance-heuristic weight is a smooth function of the
// deformed geometry. The pooled emitter area is constant (bindings are
// rigid), so pL[0] has no derivative.
void strategy_pdfs(const SceneGeom& g, const Vertex* pv, const DVec3* P, const DVec3* N, int k,
                   Dual* pL, Dual* pC) {
  pL[0] = Dual(g.emitter_area > 0.0 ? 1.0 / g.emitter_area : 0.0);
  if (k >= 3) {
    const Dual c0 = dot(N[0], normalized(P[1] - P[0]));
    pL[1] = c0.v > 0.0 ? to_area(c0 * (1.0 / M_PI), P[0], P[1], N[1]) : Dual(0.0);
  }
  for (int i = 2; i <= k - 2; ++i) {
    const DVec3 wi = normalized(P[i - 2] - P[i - 1]);
    const DVec3 wo = normalized(P[i] - P[i - 1]);
    const Dual pw = bsdf_pdf(g.material(pv[i - 1].sp.mesh), N[i - 1], wi, wo);
    pL[i] = to_area(pw, P[i - 1], P[i], N[i]);
  }
  for (int i = k - 2; i >= 0; --i) {
    const DVec3 wi = normalized(P[i + 2] - P[i + 1]);
    const DVec3 wo = normalized(P[i] - P[i + 1]);
    const Dual pw = bsdf_pdf(g.material(pv[i + 1].sp.mesh), N[i + 1], wi, wo);
    pC[i] = to_area(pw, P[i + 1], P[i], N[i]);
  }
}

// Balance heuristic over the implemented strategies s' in [0, k-1] (the
// camera prefix always keeps at least the pinhole and the primary hit, so
// their two pdf factors are common to every strategy and cancel).
Dual mis_weight(const Dual* pL, const Dual* pC, int s, int k) {
  Dual sum(1.0);
  Dual r(1.0);
  for (int i = s - 1; i >= 0; --i) {
    r *= pC[i] / pL[i];
    sum += r;
    if (r.v == 0.0) break;
  }
  r = Dual(1.0);
  for (int i = s; i <= k - 2; ++i) {
    r *= pL[i] / pC[i];
    sum += r;
    if (r.v == 0.0) break;
  }
  if (!std::isfinite(sum.v)) return Dual(0.0);
  return 1.0 / sum;
}

struct PathContrib {
  Dual base;  // (spatial integrand x Jacobian ratios) x mis / pdf, no S factor
  Dual tof;
  int emitter = -1;
  bool ok = false;
};

// Re-evaluates a complete path (pv[0] on an emitter, pv[k] the pinhole) with
// derivative channels at frozen barycentrics. Visibility of the connecting
// segment (strategies with a light subpath) is checked here; walk segments
// are unoccluded by construction.
PathContrib eval_path(const SceneGeom& g, const DualCamera& cam, const Vertex* pv, int s, int k,
                      double pdf_actual) {
  PathContrib out;
  const int e = g.emitter_of_mesh[pv[0].sp.mesh];
  if (e < 0) return out;
  if (pv[0].n.dot(pv[1].p - pv[0].p) <= 0.0) return out;  // one-sided emission
  if (s >= 1 && !g.segment_visible(pv[s - 1].p, pv[s].p)) return out;

  DVec3 P[kMaxPathVerts], N[kMaxPathVerts];
  for (int i = 0; i < k; ++i) {
    P[i] = g.dual_point(pv[i].sp);
    N[i] = g.dual_normal(pv[i].sp);
  }
  P[k - 1] = primary_dual_point(g, cam, pv[k - 1].sp);
  P[k] = cam.pos;
  N[k] = cam.fwd;

  Dual pL[kMaxPathVerts], pC[kMaxPathVerts];
  strategy_pdfs(g, pv, P, N, k, pL, pC);
  const Dual mis = mis_weight(pL, pC, s, k);
  if (!(mis.v > 0.0)) return out;

  Dual f(g.desc->emitters[e].radiance);
  for (int i = 0; i < k; ++i) {
    const Dual J = g.jacobian(pv[i].sp);
    f *= J * (1.0 / J.v);  // value exactly 1; gradient J'/J
  }
  for (int i = 1; i <= k - 1; ++i) {
    f *= geometry_term(P[i - 1], N[i - 1], P[i], N[i]);
    if (f.v == 0.0) return out;
  }
  for (int i = 1; i <= k - 1; ++i) {
    const DVec3 wi = normalized(P[i - 1] - P[i]);
    const DVec3 wo = normalized(P[i + 1] - P[i]);
    f *= bsdf_eval(g.material(pv[i].sp.mesh), N[i], wi, wo);
    if (f.v == 0.0) return out;
  }
  // The primary connection factor We * G is constant under the pixel-ray
  // parametrization: its drift along the ray cancels against the ray-measure
  // Jacobian, so only the value enters.
  f *= geometry_term(P[k - 1], N[k - 1], P[k], N[k]).v * camera_we(g, cam, P[k - 1]).v;
  if (f.v == 0.0) return out;

  out.base = f * mis * (1.0 / pdf_actual);
  out.tof = path_tof(std::span<const DVec3>(P, static_cast<size_t>(k) + 1), g.eta[0],
                     g.desc->c);
  out.emitter = e;
  out.ok = true;
  return out;
}

void deposit_contrib(const Ctx& c, Accum& acc, int px, int py, const PathContrib& pc,
                     double scale, double* temporal_abs) {
  const CorrelationKernel& ker = c.g.kernels[pc.emitter];
  const FrameRange fr = kernel_bin_range(ker, c.frames, pc.tof.v);
  for (int l = fr.first; l <= fr.last; ++l) {
    const Dual w = pc.base * frame_kernel(ker, c.frames, l, pc.tof) * scale;
    acc.deposit(py, px, l, w);
    *temporal_abs += std::abs(pc.base.v) *
                     std::abs(ker.deriv(pc.tof.v - c.frames.start - l * c.frames.exposure));
  }
}

void interior_sample(const Ctx& c, const DualCamera& dcam, int px, int py, int sidx,
                     double inv_spp, Accum& acc, double* temporal_abs) {
  const SceneGeom& g = c.g;
  Pcg32 rng(c.seed,
            hash_stream(c.seed, kStreamInterior,
                        static_cast<uint64_t>(py) * g.camera.width + px,
                        static_cast<uint64_t>(sidx)));
  Vertex camv[kMaxPathVerts], ltv[kMaxPathVerts], pv[kMaxPathVerts];
  const int T = camera_walk(g, px, py, c.max_depth, rng, camv);
  const int S = light_walk(g, c.max_depth - 1, rng, ltv);

  double pdf_cam = camv[0].pdf_area;
  for (int t = 2; t <= T; ++t) {
    pdf_cam *= camv[t - 1].pdf_area;
    if (g.emissive(camv[t - 1].sp.mesh)) {  // s = 0: camera walk hit an emitter
      const int k = t - 1;
      for (int i = 0; i < t; ++i) pv[i] = camv[t - 1 - i];
      const PathContrib pc = eval_path(g, dcam, pv, 0, k, pdf_cam);
      if (pc.ok) deposit_contrib(c, acc, px, py, pc, inv_spp, temporal_abs);
    }
    double pdf_lt = 1.0;
    for (int s = 1; s <= S && s + t - 1 <= c.max_depth; ++s) {
      pdf_lt *= ltv[s - 1].pdf_area;
      const int k = s + t - 1;
      for (int i = 0; i < s; ++i) pv[i] = ltv[i];
      for (int j = 0; j < t; ++j) pv[s + j] = camv[t - 1 - j];
      const PathContrib pc = eval_path(g, dcam, pv, s, k, pdf_lt * pdf_cam);
      if (pc.ok) deposit_contrib(c, acc, px, py, pc, inv_spp, temporal_abs);
    }
  }
}

// ---- boundary (silhouette) estimator ---------------------------------------

// Which side of the curve (+1 along m, -1 against) face fi covers: the
// central projection of the face's interior direction at the edge point,
// transverse to the line direction w, resolved on the plane with normal n_b
// (cb = n_b . w). 0 when the face is profile-degenerate to the line.
int face_side(const Mesh& mesh, int fi, const Edge& edge, const Vec3& xe, const Vec3& w,
              const Vec3& n_b, double cb, const Vec3& m) {
  const Face& fc = mesh.faces[fi];
  const int v3 = fc.v[0] + fc.v[1] + fc.v[2] - edge.v0 - edge.v1;  // vertex off the edge
  const Vec3 d = mesh.vertices[v3] - xe;
  const Vec3 q = d - w * (n_b.dot(d) / cb);  // projection along w onto the plane
  const double s = q.dot(m);
  if (!(std::abs(s) > 1e-9 * d.norm())) return 0;
  return s > 0.0 ? 1 : -1;
}

// A sampled point u on a visibility curve swept over plane B. weight is
// |det J| / pdf of the curve measure with the per-sample scale folded in;
// vrel is the per-slot normal velocity of the curve relative to B's
// parametrization. u always connects straight to the camera here, so B
// carries a primary vertex and the reference parametrization is the
// pixel-ray one, not the material one.
struct CurveSample {
  Vec3 u, n_b;
  double weight;
  double vrel[kMaxSlots];
};

// Camera-side factors shared by every completion of a curve sample.
struct CurveView {
  bool ok = false;
  int px = 0, py = 0;
  double g_uc = 0.0, we = 0.0, t_uc = 0.0, eta = 1.0;
  Vec3 to_cam = Vec3::Zero();
};

// vis_known: the caller's construction already guarantees the segment
// u -> camera is clear. Re-testing it would thread a segment exactly through
// the generating edge (for curves cut by camera-grazing lines), and whether
// the adjacent face reports a hit at its own border is rounding luck.
CurveView curve_view(const SceneGeom& g, const CurveSample& cs, bool vis_known = false) {
  CurveView v;
  double cos_a = 0.0;
  if (!camera_project(g, cs.u, &v.px, &v.py, &cos_a)) return v;
  if (!vis_known && !g.segment_visible(cs.u, g.camera.pos)) return v;
  const double c2 = cos_a * cos_a;
  v.we = 1.0 / (g.camera.pixel_area() * c2 * c2);
  v.g_uc = scalar_geometry(cs.u, cs.n_b, g.camera.pos, g.camera.fwd);
  if (v.g_uc <= 0.0) return v;
  const Vec3 d = g.camera.pos - cs.u;
  v.t_uc = d.norm();
  v.to_cam = d / v.t_uc;
  v.eta = g.eta[0].v;
  v.ok = true;
  return v;
}

// Deposits -f * S_l(tof) * weight * vrel per slot. f > 0 is the integrand on
// the lit side of the curve; the sign pairs with m_lit pointing into the lit
// region (area is lost there as the curve advances). Contributions the pixel
// gains across the curve pass f < 0.
bool curve_deposit(const Ctx& c, const CurveSample& cs, const CurveView& cv, double f,
                   double tof, int e, Accum& acc) {
  if (!(f != 0.0) || !std::isfinite(f)) return false;
  const CorrelationKernel& ker = c.g.kernels[e];
  const FrameRange fr = kernel_bin_range(ker, c.frames, tof);
  bool any = false;
  for (int l = fr.first; l <= fr.last; ++l) {
    const double base = -f * frame_kernel(ker, c.frames, l, tof) * cs.weight;
    for (int s = 0; s < c.g.nslots; ++s) acc.deposit_slot(s, cv.py, cv.px, l, base * cs.vrel[s]);
    any = true;
  }
  return any;
}

// Direction-normal pdf guard: reject lines grazing either surface plane.
constexpr double kMinPlaneCos = 1e-4;

// In-plane frame of the curve traced on plane B (normal n_b) by the edge
// under central projection along the grazing line w: tangent direction,
// lit-side normal (the side where the grazing segment clears the edge's
// faces), and the curve speed |du/dl| per unit edge arclength (proj_ratio
// carries the projection's distance ratio; pass 1 when unused).
struct CurveFrame {
  bool ok = false;
  Vec3 chat = Vec3::Zero(), m_lit = Vec3::Zero();
  double du_dl = 0.0;
};

CurveFrame curve_frame(const Mesh& mesh, const Edge& edge, const Vec3& xe, const Vec3& n_b,
                       const Vec3& w, double proj_ratio) {
  CurveFrame r;
  const double cb = n_b.dot(w);
  if (std::abs(cb) < kMinPlaneCos) return r;
  const Vec3 ehat = (mesh.vertices[edge.v1] - mesh.vertices[edge.v0]).normalized();
  const Vec3 t = ehat - w * (n_b.dot(ehat) / cb);  // projected along w onto B
  const double tl = t.norm();
  if (tl < 1e-12) return r;
  r.chat = t / tl;
  const Vec3 m = n_b.cross(r.chat).normalized();
  const int s0 = face_side(mesh, edge.f0, edge, xe, w, n_b, cb, m);
  if (s0 == 0) return r;
  if (edge.f1 >= 0) {
    const int s1 = face_side(mesh, edge.f1, edge, xe, w, n_b, cb, m);
    if (s1 != s0) return r;  // profile face, or the line is blocked both ways
  }
  r.m_lit = s0 > 0 ? -m : m;
  r.du_dl = proj_ratio * tl;
  r.ok = true;
  return r;
}

// Per-slot normal velocity of the curve point: the line through the (moving)
// anchor and the (moving) edge point, intersected with the plane (q0, nd) of
// face B; minus the pixel-ray parametrization velocity of the same point on
// the same plane.
bool curve_velocity(const SceneGeom& g, const DualCamera& dcam,
                    const SceneGeom::EdgePointSample& es, const Edge& edge, const DVec3& anchor,
                    const DVec3& q0, const DVec3& nd, const Vec3& u, const Vec3& m_lit,
                    double* vrel) {
  const DVec3 e0d = g.dual_vertex(es.mesh, edge.v0);
  const DVec3 e1d = g.dual_vertex(es.mesh, edge.v1);
  const DVec3 xe = (1.0 - es.s) * e0d + es.s * e1d;
  const DVec3 dir = xe - anchor;
  const Dual tt = dot(nd, q0 - anchor) / dot(nd, dir);
  const DVec3 ud = anchor + tt * dir;
  if (!isfinite(ud)) return false;
  DVec3 up;
  if (!ray_plane_point(dcam, u, q0, nd, &up)) return false;
  for (int s = 0; s < g.nslots; ++s) vrel[s] = (ud.g[s] - up.g[s]).dot(m_lit);
  return true;
}

bool boundary_multidirectional(const Ctx& c, const DualCamera& dcam,
                               const SceneGeom::EdgePointSample& es, const Vec3& w,
                               const SurfacePoint& y_sp, double scale, Accum& acc) {
  const SceneGeom& g = c.g;
  if (g.emitter_area <= 0.0) return false;
  const Hit hu = g.intersect(es.p, w);
  const Hit hl = g.intersect(es.p, -w);
  if (!hu.valid() || !hl.valid()) return false;
  const Vec3 u = g.point(hu.sp());
  const Vec3 xl = g.point(hl.sp());
  const Mesh& mesh = g.meshes[es.mesh];
  const Edge& edge = mesh.edges[es.edge];
  if (!is_silhouette(mesh, edge, xl, u)) return false;

  const Vec3 n_b = g.normal(hu.sp());
  const Vec3 n_a = g.normal(hl.sp());
  const double cb = n_b.dot(w), ca = n_a.dot(w);
  if (std::abs(ca) < kMinPlaneCos) return false;
  const CurveFrame cf = curve_frame(mesh, edge, es.p, n_b, w, 1.0);
  if (!cf.ok) return false;

  // Change of variables (edge length x sphere direction) -> (area on the
  // near surface x arclength on the shadow curve): 3x3 determinant of the
  // analytic differentials, projected on an area basis of plane A and the
  // curve tangent on plane B.
  Vec3 a = std::abs(n_a.x()) < 0.9 ? Vec3(1, 0, 0) : Vec3(0, 1, 0);
  a = n_a.cross(a).normalized();
  const Vec3 b = n_a.cross(a);
  Vec3 e1 = std::abs(w.x()) < 0.9 ? Vec3(1, 0, 0) : Vec3(0, 1, 0);
  e1 = w.cross(e1).normalized();
  const Vec3 e2 = w.cross(e1);
  const double ta = (xl - es.p).norm();
  const double tb = (u - es.p).norm();
  const Vec3 ehat = (mesh.vertices[edge.v1] - mesh.vertices[edge.v0]).normalized();
  const auto proj_a = [&](const Vec3& v) { return Vec3(v - w * (n_a.dot(v) / ca)); };
  const auto proj_b = [&](const Vec3& v) { return Vec3(v - w * (n_b.dot(v) / cb)); };
  Eigen::Matrix3d J;
  const Vec3 col_l_a = proj_a(ehat);
  const Vec3 col_w1_a = -ta * proj_a(e1);
  const Vec3 col_w2_a = -ta * proj_a(e2);
  const Vec3 col_w1_b = tb * proj_b(e1);
  const Vec3 col_w2_b = tb * proj_b(e2);
  J << a.dot(col_l_a), a.dot(col_w1_a), a.dot(col_w2_a),
       b.dot(col_l_a), b.dot(col_w1_a), b.dot(col_w2_a),
       cf.du_dl, cf.chat.dot(col_w1_b), cf.chat.dot(col_w2_b);
  const double det = std::abs(J.determinant());
  if (!(det > 0.0) || !std::isfinite(det)) return false;

  CurveSample cs;
  cs.u = u;
  cs.n_b = n_b;
  cs.weight = det * g.edge_length * 4.0 * M_PI * scale;
  DVec3 q0, nd;
  face_plane(g, hu.mesh, hu.face, &q0, &nd);
  if (!curve_velocity(g, dcam, es, edge, g.dual_point(hl.sp()), q0, nd, u, cf.m_lit, cs.vrel))
    return false;
  const CurveView cv = curve_view(g, cs);
  if (!cv.ok) return false;

  // Light side relays off xl with one next-event segment; the grazing
  // segment xl -> u is unoccluded by construction (lit-side limit). The
  // direct family (emissive backward hit) belongs to the emitter-anchored
  // strategy instead.
  const double g_lu = scalar_geometry(xl, n_a, u, n_b);
  if (g_lu <= 0.0) return false;
  const double rho_u = bsdf_scalar(g.material(hu.mesh), n_b, (xl - u).normalized(), cv.to_cam);
  if (rho_u == 0.0) return false;
  const Vec3 yp = g.point(y_sp);
  const Vec3 yn = g.normal(y_sp);
  const int ey = g.emitter_of_mesh[y_sp.mesh];
  if (yn.dot(xl - yp) <= 0.0 || !g.segment_visible(yp, xl)) return false;
  const double rho_l = bsdf_scalar(g.material(hl.mesh), n_a, (yp - xl).normalized(),
                                   (u - xl).normalized());
  const double t_lu = (u - xl).norm();
  const double f = g.desc->emitters[ey].radiance * scalar_geometry(yp, yn, xl, n_a) * rho_l *
                   g_lu * rho_u * cv.g_uc * cv.we * g.emitter_area;
  return curve_deposit(c, cs, cv, f, cv.eta * ((xl - yp).norm() + t_lu + cv.t_uc) / g.desc->c,
                       ey, acc);
}

// Grazing lines anchored on the light pool: an edge point seen from an area
// sample y, continued to the receiver. Covers the direct shadow family
// (emitter -> edge -> receiver -> camera) with the light side importance-
// sampled instead of found by a uniform sphere direction.
bool boundary_emitter_anchored(const Ctx& c, const DualCamera& dcam,
                               const SceneGeom::EdgePointSample& es, const SurfacePoint& y_sp,
                               double scale, Accum& acc) {
  const SceneGeom& g = c.g;
  if (g.emitter_area <= 0.0) return false;
  const Vec3 yp = g.point(y_sp);
  const Vec3 yn = g.normal(y_sp);
  const Vec3 te = es.p - yp;
  const double de = te.norm();
  if (de <= g.ray_eps) return false;
  const Vec3 w = te / de;
  if (yn.dot(w) <= 0.0) return false;  // one-sided emission
  if (!g.segment_visible(yp, es.p)) return false;
  const Hit hu = g.intersect(es.p, w);  // continue past the edge
  if (!hu.valid()) return false;
  const Vec3 u = g.point(hu.sp());
  const Mesh& mesh = g.meshes[es.mesh];
  const Edge& edge = mesh.edges[es.edge];
  if (!is_silhouette(mesh, edge, yp, u)) return false;

  const Vec3 n_b = g.normal(hu.sp());
  const double t_yu = (u - yp).norm();
  const CurveFrame cf = curve_frame(mesh, edge, es.p, n_b, w, t_yu / de);
  if (!cf.ok) return false;

  CurveSample cs;
  cs.u = u;
  cs.n_b = n_b;
  cs.weight = cf.du_dl * g.edge_length * g.emitter_area * scale;
  DVec3 q0, nd;
  face_plane(g, hu.mesh, hu.face, &q0, &nd);
  if (!curve_velocity(g, dcam, es, edge, g.dual_point(y_sp), q0, nd, u, cf.m_lit, cs.vrel))
    return false;
  const CurveView cv = curve_view(g, cs);
  if (!cv.ok) return false;

  const double rho_u = bsdf_scalar(g.material(hu.mesh), n_b, (yp - u).normalized(), cv.to_cam);
  const int ey = g.emitter_of_mesh[y_sp.mesh];
  const double f = g.desc->emitters[ey].radiance * scalar_geometry(yp, yn, u, n_b) * rho_u *
                   cv.g_uc * cv.we;
  return curve_deposit(c, cs, cv, f, cv.eta * (t_yu + cv.t_uc) / g.desc->c, ey, acc);
}

// Image silhouettes: the edge seen from the pinhole. The jump is two-sided:
// as the curve sweeps, the pixel trades whatever it sees beyond the edge for
// the radiance of the edge's own camera-facing face, each at its own time of
// flight. The curve measure lives on a fixed virtual screen through the edge
// point — any plane transversal to the ray gives the same image measure
// under central projection — so the near-side term also stands when the ray
// escapes the scene past the edge.
bool boundary_pinhole(const Ctx& c, const DualCamera& dcam, const SceneGeom::EdgePointSample& es,
                      const SurfacePoint& y_sp, double scale, Accum& acc) {
  const SceneGeom& g = c.g;
  const Vec3 cp = g.camera.pos;
  const Vec3 xe = es.p;
  const Vec3 te = xe - cp;
  const double de = te.norm();
  if (de <= g.ray_eps) return false;
  const Vec3 w = te / de;
  if (!g.segment_visible(cp, xe)) return false;
  const Mesh& mesh = g.meshes[es.mesh];
  const Edge& edge = mesh.edges[es.edge];
  if (!is_silhouette(mesh, edge, cp, xe + w)) return false;

  const Vec3 n_v = -g.camera.fwd;  // virtual screen facing the camera
  const CurveFrame cf = curve_frame(mesh, edge, xe, n_v, w, 1.0);
  if (!cf.ok) return false;

  CurveSample cs;
  cs.u = xe;
  cs.n_b = n_v;
  cs.weight = cf.du_dl * g.edge_length * scale;
  if (!curve_velocity(g, dcam, es, edge, dcam.pos, DVec3(xe), DVec3(n_v), xe, cf.m_lit,
                      cs.vrel))
    return false;
  // Camera visibility holds by construction: the camera sees the edge point
  // and the screen passes through it.
  const CurveView cv = curve_view(g, cs, true);
  if (!cv.ok) return false;

  const Vec3 yp = g.point(y_sp);
  const Vec3 yn = g.normal(y_sp);
  const int ey = g.emitter_of_mesh[y_sp.mesh];
  bool any = false;

  // Far side: the pixel loses the surface behind the edge as the curve
  // advances. Radiance factors are evaluated at the real hit; only the curve
  // measure lives on the screen.
  const Hit hu = g.intersect(xe, w);
  if (hu.valid()) {
    const Vec3 u = g.point(hu.sp());
    const Vec3 n_u = g.normal(hu.sp());
    const double t_uc = (u - cp).norm();
    const int eu = g.emitter_of_mesh[hu.mesh];
    if (eu >= 0 && n_u.dot(cp - u) > 0.0)
      any |= curve_deposit(c, cs, cv, g.desc->emitters[eu].radiance * cv.g_uc * cv.we,
                           cv.eta * t_uc / g.desc->c, eu, acc);
    if (g.emitter_area > 0.0 && yn.dot(u - yp) > 0.0 && g.segment_visible(yp, u)) {
      const double rho = bsdf_scalar(g.material(hu.mesh), n_u, (yp - u).normalized(), cv.to_cam);
      const double f = g.desc->emitters[ey].radiance * scalar_geometry(yp, yn, u, n_u) * rho *
                       cv.g_uc * cv.we * g.emitter_area;
      any |= curve_deposit(c, cs, cv, f, cv.eta * ((u - yp).norm() + t_uc) / g.desc->c, ey,
                           acc);
    }
  }

  // Near side: the same sweep hands the pixel the camera-facing face at the
  // edge point.
  int nfi = edge.f0;
  if (edge.f1 >= 0 && mesh.face_normal(edge.f0).dot(w) >= 0.0) nfi = edge.f1;
  const Vec3 n_e = mesh.face_normal(nfi);
  const int en = g.emitter_of_mesh[es.mesh];
  if (en >= 0 && n_e.dot(-w) > 0.0)
    any |= curve_deposit(c, cs, cv, -g.desc->emitters[en].radiance * cv.g_uc * cv.we,
                         cv.eta * de / g.desc->c, en, acc);
  if (g.emitter_area > 0.0 && yn.dot(xe - yp) > 0.0 && g.segment_visible(yp, xe)) {
    const double rho = bsdf_scalar(g.material(es.mesh), n_e, (yp - xe).normalized(), -w);
    const double f = g.desc->emitters[ey].radiance * scalar_geometry(yp, yn, xe, n_e) * rho *
                     cv.g_uc * cv.we * g.emitter_area;
    any |= curve_deposit(c, cs, cv, -f, cv.eta * ((xe - yp).norm() + de) / g.desc->c, ey, acc);
  }
  return any;
}

void boundary_sample(const Ctx& c, const DualCamera& dcam, uint64_t n, double scale, Accum& acc,
                     uint64_t* tried, uint64_t* kept) {
  const SceneGeom& g = c.g;
  Pcg32 rng(c.seed, hash_stream(c.seed, kStreamBoundary, n));
  const auto es = g.sample_edge_point(rng.uniform(), rng.uniform());
  if (es.mesh < 0) return;
  const double z = 1.0 - 2.0 * rng.uniform();
  const double phi = 2.0 * M_PI * rng.uniform();
  const double sq = std::sqrt(std::max(0.0, 1.0 - z * z));
  const Vec3 w(sq * std::cos(phi), sq * std::sin(phi), z);
  SurfacePoint y_sp;
  if (g.emitter_area > 0.0)
    y_sp = g.sample_emitter(rng.uniform(), rng.uniform(), rng.uniform());

  ++*tried;
  bool any = boundary_emitter_anchored(c, dcam, es, y_sp, scale, acc);
  any = boundary_multidirectional(c, dcam, es, w, y_sp, scale, acc) || any;
  any = boundary_pinhole(c, dcam, es, y_sp, scale, acc) || any;
  if (any) ++*kept;
}

}  // namespace

Histogram render(const SceneGeom& g, const RenderOptions& opt, RenderStats* stats) {
  const auto t_begin = std::chrono::steady_clock::now();
  const SceneDesc& d = *g.desc;
  const int W = g.camera.width, H = g.camera.height, F = d.frames.count;
  const int spp_i = opt.spp_interior >= 0 ? opt.spp_interior : d.est.spp_interior;
  const int spp_b = opt.spp_boundary >= 0 ? opt.spp_boundary : d.est.spp_boundary;
  const int nthreads = std::max(1, opt.threads);
  const uint64_t seed = opt.seed >= 0 ? static_cast<uint64_t>(opt.seed) : d.est.seed;
  const Ctx ctx{g, d.frames, seed, d.est.max_depth};
  const DualCamera dcam = g.dual_camera();

  RenderStats st;
  Accum total(H, W, F, g.nslots);

  if (opt.interior && spp_i > 0) {
    std::vector<Accum> accs;
    std::vector<double> tabs(nthreads, 0.0);
    accs.reserve(nthreads);
    for (int i = 0; i < nthreads; ++i) accs.emplace_back(H, W, F, g.nslots);
    const double inv = 1.0 / spp_i;
    auto work = [&](int wk) {
      const int r0 = H * wk / nthreads, r1 = H * (wk + 1) / nthreads;
      for (int py = r0; py < r1; ++py)
        for (int px = 0; px < W; ++px)
          for (int s = 0; s < spp_i; ++s)
            interior_sample(ctx, dcam, px, py, s, inv, accs[wk], &tabs[wk]);
    };
    if (nthreads == 1) {
      work(0);
    } else {
      std::vector<std::thread> pool;
      for (int i = 0; i < nthreads; ++i) pool.emplace_back(work, i);
      for (auto& t : pool) t.join();
    }
    for (int i = 0; i < nthreads; ++i) {
      total.merge(accs[i]);  // disjoint rows: bit-exact for any worker count
      st.temporal_term_abs += tabs[i];
    }
  }

  if (opt.boundary && spp_b > 0 && g.edge_length > 0.0) {
    const uint64_t nb = static_cast<uint64_t>(spp_b) * W * H;
    std::vector<Accum> accs;
    std::vector<uint64_t> tried(nthreads, 0), kept(nthreads, 0);
    accs.reserve(nthreads);
    for (int i = 0; i < nthreads; ++i) accs.emplace_back(H, W, F, g.nslots);
    const double inv = 1.0 / static_cast<double>(nb);
    auto work = [&](int wk) {
      const uint64_t n0 = nb * wk / nthreads, n1 = nb * (wk + 1) / nthreads;
      for (uint64_t n = n0; n < n1; ++n)
        boundary_sample(ctx, dcam, n, inv, accs[wk], &tried[wk], &kept[wk]);
    };
    if (nthreads == 1) {
      work(0);
    } else {
      std::vector<std::thread> pool;
      for (int i = 0; i < nthreads; ++i) pool.emplace_back(work, i);
      for (auto& t : pool) t.join();
    }
    for (int i = 0; i < nthreads; ++i) {  // merged in worker order
      total.merge(accs[i]);
      st.boundary_tried += tried[i];
      st.boundary_kept += kept[i];
    }
  }

  Histogram h = finalize_accum(total, g.slot_param, d.param_count, 1.0, d.frames.start,
                               d.frames.exposure, d.c);
  st.nonfinite = total.nonfinite;
  st.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();
  if (stats) *stats = st;
  return h;
}

Histogram render_scene(const SceneDesc& desc, const std::vector<double>& theta,
                       const RenderOptions& opt, RenderStats* stats) {
  const SceneGeom g = build_geometry(desc, theta);
  return render(g, opt, stats);
}

}  // namespace tgrd
