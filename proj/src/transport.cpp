#include "tgrd/transport.h"

#include <cmath>

namespace tgrd {

Dual geometry_term(const DVec3& x, const DVec3& nx, const DVec3& y, const DVec3& ny) {
  const DVec3 d = y - x;
  const Dual r2 = squared_norm(d);
  if (r2.v <= 0.0) return Dual(0.0);
  const Dual inv_r = 1.0 / sqrt(r2);
  const DVec3 w = inv_r * d;
  return abs(dot(nx, w)) * abs(dot(ny, w)) / r2;
}

namespace {

// GGX normal distribution and Smith masking, isotropic.
Dual ggx_d(double alpha, const Dual& cos_h) {
  const double a2 = alpha * alpha;
  const Dual c2 = cos_h * cos_h;
  const Dual t = c2 * (a2 - 1.0) + 1.0;
  return Dual(a2 / M_PI) / (t * t);
}

Dual smith_g1(double alpha, const Dual& cos_v) {
  const double a2 = alpha * alpha;
  const Dual c2 = cos_v * cos_v;
  return 2.0 * cos_v / (cos_v + sqrt(a2 + (1.0 - a2) * c2));
}

}  // namespace

Dual bsdf_eval(const Material& m, const DVec3& n, const DVec3& wi, const DVec3& wo) {
  Dual ci = dot(n, wi);
  Dual co = dot(n, wo);
  if (ci.v * co.v <= 0.0) return Dual(0.0);  // transmission: not a reflector
  // Flip to the side wi lives on; materials are two-sided.
  DVec3 ns = n;
  if (ci.v < 0.0) {
    ns = -n;
    ci = -ci;
    co = -co;
  }
  switch (m.kind) {
    case Material::Kind::Lambertian:
      return Dual(m.albedo / M_PI);
    case Material::Kind::RoughConductor: {
      const DVec3 h = normalized(wi + wo);
      const Dual ch = dot(ns, h);
      if (ch.v <= 0.0) return Dual(0.0);
      const Dual d = ggx_d(m.alpha, ch);
      const Dual g = smith_g1(m.alpha, ci) * smith_g1(m.alpha, co);
      return m.reflectance * d * g / (4.0 * ci * co);
    }
  }
  return Dual(0.0);
}

double bsdf_pdf(const Material& m, const Vec3& n, const Vec3& wi, const Vec3& wo) {
  const double ci = n.dot(wi);
  const double co = n.dot(wo);
  if (ci * co <= 0.0) return 0.0;
  const Vec3 ns = ci < 0.0 ? Vec3(-n) : n;
  switch (m.kind) {
    case Material::Kind::Lambertian:
      return std::abs(co) / M_PI;
    case Material::Kind::RoughConductor: {
      const Vec3 h = (wi + wo).normalized();
      const double ch = ns.dot(h);
      if (ch <= 0.0) return 0.0;
      const double d = ggx_d(m.alpha, Dual(ch)).v;
      return d * ch / (4.0 * std::abs(wo.dot(h)));
    }
  }
  return 0.0;
}

Dual bsdf_pdf(const Material& m, const DVec3& n, const DVec3& wi, const DVec3& wo) {
  Dual ci = dot(n, wi);
  Dual co = dot(n, wo);
  if (ci.v * co.v <= 0.0) return Dual(0.0);
  DVec3 ns = n;
  if (ci.v < 0.0) {
    ns = -n;
    co = -co;
  }
  switch (m.kind) {
    case Material::Kind::Lambertian:
      return co / M_PI;
    case Material::Kind::RoughConductor: {
      const DVec3 h = normalized(wi + wo);
      const Dual ch = dot(ns, h);
      if (ch.v <= 0.0) return Dual(0.0);
      const Dual d = ggx_d(m.alpha, ch);
      return d * ch / (4.0 * abs(dot(wo, h)));
    }
  }
  return Dual(0.0);
}

Vec3 cosine_sample(const Vec3& n, double u1, double u2, double* pdf) {
  const double r = std::sqrt(u1);
  const double phi = 2.0 * M_PI * u2;
  const double z = std::sqrt(std::max(0.0, 1.0 - u1));
  Vec3 t = std::abs(n.x()) < 0.9 ? Vec3(1, 0, 0) : Vec3(0, 1, 0);
  const Vec3 b1 = n.cross(t).normalized();
  const Vec3 b2 = n.cross(b1);
  const Vec3 d = r * std::cos(phi) * b1 + r * std::sin(phi) * b2 + z * n;
  if (pdf) *pdf = z / M_PI;
  return d;
}

Vec3 bsdf_sample(const Material& m, const Vec3& n, const Vec3& wi, Pcg32& rng, double* pdf) {
  *pdf = 0.0;
  const double ci = n.dot(wi);
  if (ci == 0.0) return Vec3::Zero();
  const Vec3 ns = ci < 0.0 ? Vec3(-n) : n;
  switch (m.kind) {
    case Material::Kind::Lambertian: {
      return cosine_sample(ns, rng.uniform(), rng.uniform(), pdf);
    }
    case Material::Kind::RoughConductor: {
      // Sample the GGX half-vector around ns, reflect wi.
      const double u1 = rng.uniform(), u2 = rng.uniform();
      const double phi = 2.0 * M_PI * u2;
      const double ct = std::sqrt((1.0 - u1) / (1.0 + (m.alpha * m.alpha - 1.0) * u1));
      const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
      Vec3 t = std::abs(ns.x()) < 0.9 ? Vec3(1, 0, 0) : Vec3(0, 1, 0);
      const Vec3 b1 = ns.cross(t).normalized();
      const Vec3 b2 = ns.cross(b1);
      const Vec3 h = st * std::cos(phi) * b1 + st * std::sin(phi) * b2 + ct * ns;
      const Vec3 wo = 2.0 * wi.dot(h) * h - wi;
      if (ns.dot(wo) <= 0.0) return Vec3::Zero();
      *pdf = bsdf_pdf(m, n, wi, wo);
      return wo;
    }
  }
  return Vec3::Zero();
}

Dual segment_optical_length(const DVec3& a, const DVec3& b, const Dual& eta) {
  return eta * norm(b - a);
}

Dual path_tof(std::span<const DVec3> pts, const Dual& eta, double c) {
  Dual d(0.0);
  for (size_t i = 0; i + 1 < pts.size(); ++i)
    d += segment_optical_length(pts[i], pts[i + 1], eta);
  return d / c;
}

Dual camera_we(const SceneGeom& g, const DualCamera& cam, const DVec3& x) {
  const DVec3 d = x - cam.pos;
  const Dual cos_a = dot(cam.fwd, d) / norm(d);
  if (cos_a.v <= 0.0) return Dual(0.0);
  const Dual c2 = cos_a * cos_a;
  return Dual(1.0 / g.camera.pixel_area()) / (c2 * c2);
}

bool camera_project(const SceneGeom& g, const Vec3& x, int* px, int* py, double* cos_alpha) {
  const Camera& cam = g.camera;
  const Vec3 d = x - cam.pos;
  const double z = cam.fwd.dot(d);
  if (z <= 0.0) return false;
  const double u = cam.right.dot(d) / z;
  const double v = cam.up.dot(d) / z;
  const double tx = cam.tan_half_x(), ty = cam.tan_half_y();
  const double fx = (u / tx + 1.0) * 0.5 * cam.width;
  const double fy = (1.0 - v / ty) * 0.5 * cam.height;
  if (fx < 0.0 || fx >= cam.width || fy < 0.0 || fy >= cam.height) return false;
  *px = static_cast<int>(fx);
  *py = static_cast<int>(fy);
  if (cos_alpha) *cos_alpha = z / d.norm();
  return true;
}

double camera_ray_pdf(const SceneGeom& g, double cos_alpha) {
  return 1.0 / (g.camera.pixel_area() * cos_alpha * cos_alpha * cos_alpha);
}

Vec3 camera_ray_dir(const Camera& cam, int px, int py, double jx, double jy) {
  const double tx = cam.tan_half_x(), ty = cam.tan_half_y();
  const double u = ((px + jx) / cam.width * 2.0 - 1.0) * tx;
  const double v = (1.0 - (py + jy) / cam.height * 2.0) * ty;
  return (cam.fwd + u * cam.right + v * cam.up).normalized();
}

}  // namespace tgrd
