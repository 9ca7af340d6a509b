#pragma once

// Small scenes assembled in code for the tests.

#include "tgrd/scene.h"
#include "tgrd/scene_io.h"

namespace tgrd::testscenes {

inline Camera look_at(const Vec3& pos, const Vec3& target, int w, int h,
                      double fov_y = 50.0) {
  Camera c;
  c.pos = pos;
  c.fwd = (target - pos).normalized();
  const Vec3 up_hint(0, 1, 0);
  c.right = c.fwd.cross(up_hint).normalized();
  c.up = c.right.cross(c.fwd);
  c.fov_y_deg = fov_y;
  c.width = w;
  c.height = h;
  return c;
}

// Camera at (0,0,2) staring straight at a 4x4 emitting quad in the z=0 plane
// (normal +z, toward the camera). Every primary ray hits the emitter, and the
// emitter itself is black (albedo 0), so the only transport is direct: each
// pixel must read exactly the emitted radiance.
inline SceneDesc emitter_stare(int res = 8, double radiance = 2.5) {
  SceneDesc d;
  d.meshes.push_back(make_quad(Vec3(-2, -2, 0), Vec3(4, 0, 0), Vec3(0, 4, 0)));
  d.meshes.back().name = "panel";
  Material black;
  black.albedo = 0.0;
  d.materials.push_back(black);
  EmitterDesc em;
  em.mesh = 0;
  em.radiance = radiance;
  em.profile = TemporalProfile::delta(0.0);
  d.emitters.push_back(em);
  d.camera = look_at(Vec3(0, 0, 2), Vec3(0, 0, 0), res, res);
  d.sensor_profile = TemporalProfile::box(0.0, 40.0, 1.0);
  d.frames = {1, 40.0, 0.0};
  d.est.max_depth = 3;  // depth >1 must change nothing: the emitter is black
  d.est.spp_interior = 4;
  d.est.spp_boundary = 0;
  return d;
}

// One-bounce scene with no visibility discontinuities anywhere: a 4x4 floor
// at y=0 lit by a 1x1 downward-facing emitter at y=2, pulled back over the
// camera's shoulder so primary rays never graze it. Binding 0 translates the
// emitter along x, which changes shading smoothly. The box emission keeps the
// correlation kernel continuous (box x box = triangle), so frame histograms
// are differentiable in the time of flight and gradients are comparable to
// finite differences frame by frame.
inline SceneDesc smooth_one_bounce(int res = 16, int frames = 12, int spp = 128) {
  SceneDesc d;
  d.meshes.push_back(make_quad(Vec3(-2, 0, -2), Vec3(4, 0, 0), Vec3(0, 0, 4)));
  d.meshes.back().name = "floor";  // edge_u x edge_v = +y
  Material floor_mat;
  floor_mat.albedo = 0.7;
  d.materials.push_back(floor_mat);

  // edge_u x edge_v = (0,0,-1) x (1,0,0)... build it facing -y (downward).
  d.meshes.push_back(make_quad(Vec3(-0.5, 2, 2.0), Vec3(0, 0, -1), Vec3(1, 0, 0)));
  d.meshes.back().name = "lamp";
  Material lamp_mat;
  lamp_mat.albedo = 0.0;
  d.materials.push_back(lamp_mat);
  EmitterDesc em;
  em.mesh = 1;
  em.radiance = 20.0;
  em.profile = TemporalProfile::box(0.0, 2.0, 1.0);
  d.emitters.push_back(em);

  d.camera = look_at(Vec3(0, 1.5, 2.5), Vec3(0, 0, 0), res, res, 55.0);
  d.sensor_profile = TemporalProfile::box(0.0, 2.0, 1.0);
  d.frames = {frames, 2.0, 8.0};

  Binding b;
  b.param = 0;
  b.target = Binding::Target::Mesh;
  b.target_index = 1;
  b.kind = Binding::Kind::Translation;
  b.axis = Vec3(1, 0, 0);
  d.bindings.push_back(b);
  d.param_count = 1;

  d.est.max_depth = 2;
  d.est.spp_interior = spp;
  d.est.spp_boundary = 0;  // provably no visibility boundary in this scene
  return d;
}

// smooth_one_bounce plus a thin occluder quad hovering between the lamp and
// the floor. Binding 0 translates the occluder along x: the shadow edge it
// casts sweeps across the floor, so the intensity derivative is dominated by
// the visibility jump.
inline SceneDesc occluder_scene(int res = 16, int frames = 12, int spp_i = 128,
                                int spp_b = 128) {
  SceneDesc d = smooth_one_bounce(res, frames, spp_i);
  d.bindings.clear();

  d.meshes.push_back(make_quad(Vec3(-0.45, 1.0, 1.6), Vec3(0, 0, -0.9), Vec3(0.9, 0, 0)));
  d.meshes.back().name = "occluder";
  Material occ_mat;
  occ_mat.albedo = 0.5;
  d.materials.push_back(occ_mat);

  Binding b;
  b.param = 0;
  b.target = Binding::Target::Mesh;
  b.target_index = 2;
  b.kind = Binding::Kind::Translation;
  b.axis = Vec3(1, 0, 0);
  d.bindings.push_back(b);
  d.param_count = 1;

  d.est.spp_boundary = spp_b;
  return d;
}

}  // namespace tgrd::testscenes
