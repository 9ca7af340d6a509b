#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>

namespace tgrd {

using Vec3 = Eigen::Vector3d;

// Number of simultaneously tracked derivative slots. Each scene-parameter
// binding entry occupies one slot; parameter gradients are slot sums.
constexpr int kMaxSlots = 6;

// Per-slot vector bundle (velocities, derivative columns). Value-initializing
// an Eigen vector leaves its coefficients unset, so never rely on `{}` here;
// start from zero_slots().
using SlotVec = std::array<Vec3, kMaxSlots>;
inline SlotVec zero_slots() {
  SlotVec a;
  a.fill(Vec3::Zero());
  return a;
}

// Forward-mode scalar: value plus one derivative per slot. Slots beyond the
// scene's active count stay zero and cost only a few fused multiply-adds.
struct Dual {
  double v = 0.0;
  std::array<double, kMaxSlots> g{};

  Dual() = default;
  explicit Dual(double value) : v(value) {}
  Dual(double value, const std::array<double, kMaxSlots>& grad) : v(value), g(grad) {}

  static Dual constant(double value) { return Dual(value); }

  Dual operator-() const {
    Dual r(-v);
    for (int i = 0; i < kMaxSlots; ++i) r.g[i] = -g[i];
    return r;
  }
  Dual& operator+=(const Dual& o) {
    v += o.v;
    for (int i = 0; i < kMaxSlots; ++i) g[i] += o.g[i];
    return *this;
  }
  Dual& operator-=(const Dual& o) {
    v -= o.v;
    for (int i = 0; i < kMaxSlots; ++i) g[i] -= o.g[i];
    return *this;
  }
  Dual& operator*=(const Dual& o) {
    for (int i = 0; i < kMaxSlots; ++i) g[i] = g[i] * o.v + v * o.g[i];
    v *= o.v;
    return *this;
  }
  Dual& operator*=(double s) {
    v *= s;
    for (int i = 0; i < kMaxSlots; ++i) g[i] *= s;
    return *this;
  }
};

inline Dual operator+(Dual a, const Dual& b) { return a += b; }
inline Dual operator-(Dual a, const Dual& b) { return a -= b; }
inline Dual operator*(Dual a, const Dual& b) { return a *= b; }
inline Dual operator*(Dual a, double s) { return a *= s; }
inline Dual operator*(double s, Dual a) { return a *= s; }
inline Dual operator+(Dual a, double s) { a.v += s; return a; }
inline Dual operator+(double s, Dual a) { a.v += s; return a; }
inline Dual operator-(Dual a, double s) { a.v -= s; return a; }
inline Dual operator-(double s, const Dual& a) { return Dual(s) - a; }

inline Dual operator/(const Dual& a, const Dual& b) {
  Dual r(a.v / b.v);
  const double inv = 1.0 / b.v;
  for (int i = 0; i < kMaxSlots; ++i) r.g[i] = (a.g[i] - r.v * b.g[i]) * inv;
  return r;
}
inline Dual operator/(Dual a, double s) { return a *= (1.0 / s); }
inline Dual operator/(double s, const Dual& b) { return Dual(s) / b; }

inline Dual sqrt(const Dual& a) {
  Dual r(std::sqrt(a.v));
  const double d = r.v > 0.0 ? 0.5 / r.v : 0.0;
  for (int i = 0; i < kMaxSlots; ++i) r.g[i] = d * a.g[i];
  return r;
}
inline Dual exp(const Dual& a) {
  Dual r(std::exp(a.v));
  for (int i = 0; i < kMaxSlots; ++i) r.g[i] = r.v * a.g[i];
  return r;
}
inline Dual abs(const Dual& a) {
  if (a.v >= 0.0) return a;
  return -a;
}

inline bool isfinite(const Dual& a) {
  if (!std::isfinite(a.v)) return false;
  for (int i = 0; i < kMaxSlots; ++i)
    if (!std::isfinite(a.g[i])) return false;
  return true;
}

// 3-vector with per-slot derivative columns.
struct DVec3 {
  Vec3 v = Vec3::Zero();
  std::array<Vec3, kMaxSlots> g;

  DVec3() { g.fill(Vec3::Zero()); }
  explicit DVec3(const Vec3& value) : v(value) { g.fill(Vec3::Zero()); }
  DVec3(const Dual& x, const Dual& y, const Dual& z) {
    v = Vec3(x.v, y.v, z.v);
    for (int i = 0; i < kMaxSlots; ++i) g[i] = Vec3(x.g[i], y.g[i], z.g[i]);
  }

  Dual x() const { return component(0); }
  Dual y() const { return component(1); }
  Dual z() const { return component(2); }
  Dual component(int k) const {
    Dual r(v[k]);
    for (int i = 0; i < kMaxSlots; ++i) r.g[i] = g[i][k];
    return r;
  }

  DVec3 operator-() const {
    DVec3 r(-v);
    for (int i = 0; i < kMaxSlots; ++i) r.g[i] = -g[i];
    return r;
  }
  DVec3& operator+=(const DVec3& o) {
    v += o.v;
    for (int i = 0; i < kMaxSlots; ++i) g[i] += o.g[i];
    return *this;
  }
  DVec3& operator-=(const DVec3& o) {
    v -= o.v;
    for (int i = 0; i < kMaxSlots; ++i) g[i] -= o.g[i];
    return *this;
  }
};

inline DVec3 operator+(DVec3 a, const DVec3& b) { return a += b; }
inline DVec3 operator-(DVec3 a, const DVec3& b) { return a -= b; }

inline DVec3 operator*(const Dual& s, const DVec3& a) {
  DVec3 r(s.v * a.v);
  for (int i = 0; i < kMaxSlots; ++i) r.g[i] = s.g[i] * a.v + s.v * a.g[i];
  return r;
}
inline DVec3 operator*(double s, DVec3 a) {
  a.v *= s;
  for (int i = 0; i < kMaxSlots; ++i) a.g[i] *= s;
  return a;
}

inline Dual dot(const DVec3& a, const DVec3& b) {
  Dual r(a.v.dot(b.v));
  for (int i = 0; i < kMaxSlots; ++i) r.g[i] = a.g[i].dot(b.v) + a.v.dot(b.g[i]);
  return r;
}
inline DVec3 cross(const DVec3& a, const DVec3& b) {
  DVec3 r(a.v.cross(b.v));
  for (int i = 0; i < kMaxSlots; ++i) r.g[i] = a.g[i].cross(b.v) + a.v.cross(b.g[i]);
  return r;
}
inline Dual squared_norm(const DVec3& a) { return dot(a, a); }
inline Dual norm(const DVec3& a) { return sqrt(dot(a, a)); }
inline DVec3 normalized(const DVec3& a) {
  const Dual inv = 1.0 / norm(a);
  return inv * a;
}

inline bool isfinite(const DVec3& a) {
  if (!a.v.allFinite()) return false;
  for (int i = 0; i < kMaxSlots; ++i)
    if (!a.g[i].allFinite()) return false;
  return true;
}

}  // namespace tgrd
