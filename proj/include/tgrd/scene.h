#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "tgrd/dual.h"
#include "tgrd/geometry.h"
#include "tgrd/temporal.h"

namespace tgrd {

struct Material {
  enum class Kind { Lambertian, RoughConductor };
  Kind kind = Kind::Lambertian;
  double albedo = 0.5;       // Lambertian
  double alpha = 0.2;        // RoughConductor GGX roughness
  double reflectance = 0.9;  // RoughConductor Fresnel scale
};

struct Camera {
  Vec3 pos = Vec3::Zero();
  Vec3 fwd = Vec3(0, 0, -1), right = Vec3(1, 0, 0), up = Vec3(0, 1, 0);
  double fov_y_deg = 50.0;
  int width = 64, height = 64;

  double tan_half_y() const;
  double tan_half_x() const;
  // Area of one pixel on the focal plane at unit distance.
  double pixel_area() const;
};

struct EmitterDesc {
  int mesh = -1;          // emitting mesh (emits from the face-normal side)
  double radiance = 1.0;  // spatially uniform
  TemporalProfile profile;
};

struct Medium {
  double eta = 1.0;
};

struct Binding {
  enum class Target { Mesh, Emitter, Sensor, Medium };
  enum class Kind { Translation, Rotation, RefractiveIndex };
  int param = 0;  // public parameter index; several entries may share one
  Target target = Target::Mesh;
  int target_index = 0;  // mesh or medium index (Emitter/Sensor ignore it)
  Kind kind = Kind::Translation;
  Vec3 axis = Vec3(0, 1, 0);   // translation direction / rotation axis (unit)
  Vec3 point = Vec3::Zero();   // rotation pivot
};

struct EstimatorSettings {
  int spp_interior = 64;
  int spp_boundary = 64;
  int max_depth = 6;  // max segments per path
  uint64_t seed = 0;
  double dihedral_tol = 1e-4;  // radians
};

// Parsed scene: base geometry plus parameter bindings. Deformation happens in
// build_geometry, so finite differencing and optimization reuse one path.
struct SceneDesc {
  double c = 0.299792458;  // light speed, scene units (m) per ns
  std::vector<Mesh> meshes;
  std::vector<Material> materials;  // parallel to meshes
  std::vector<EmitterDesc> emitters;
  Camera camera;
  TemporalProfile sensor_profile;
  FrameSpec frames;
  std::vector<Medium> media = {Medium{}};
  std::vector<Binding> bindings;
  int param_count = 0;
  EstimatorSettings est;
};

struct Hit {
  int mesh = -1, face = -1;
  double t = std::numeric_limits<double>::infinity();
  double b1 = 0.0, b2 = 0.0;
  bool valid() const { return mesh >= 0; }
  SurfacePoint sp() const { return {mesh, face, b1, b2}; }
};

struct DualCamera {
  DVec3 pos, fwd, right, up;
};

// Scene geometry frozen at a parameter vector theta: deformed meshes, edge
// classes, per-vertex velocity fields (one slot per binding entry), sampling
// tables and correlation kernels.
struct SceneGeom {
  const SceneDesc* desc = nullptr;
  std::vector<double> theta;

  std::vector<Mesh> meshes;  // deformed
  // vel[mesh][vertex][slot]
  std::vector<std::vector<SlotVec>> vel;
  Camera camera;
  SlotVec cam_pos_vel = zero_slots(), cam_fwd_vel = zero_slots();
  SlotVec cam_right_vel = zero_slots(), cam_up_vel = zero_slots();
  std::vector<Dual> eta;       // per medium, with slot derivatives
  int nslots = 0;              // number of binding entries
  std::vector<int> slot_param; // slot -> public parameter index

  std::vector<int> emitter_of_mesh;  // mesh -> emitter index or -1
  std::vector<CorrelationKernel> kernels;  // per emitter
  std::vector<std::string> warnings;

  struct EmitterTri {
    int mesh, face;
    double cdf;  // cumulative area, normalized to 1 at the back
  };
  std::vector<EmitterTri> emitter_tris;
  double emitter_area = 0.0;

  struct SampleEdge {
    int mesh, edge;
    double cdf;  // cumulative length, normalized
  };
  std::vector<SampleEdge> sample_edges;  // Boundary + Sharp edges
  double edge_length = 0.0;

  std::vector<Vec3> bbox_lo, bbox_hi;  // per mesh
  double scene_scale = 1.0;
  double ray_eps = 1e-4;

  // --- queries -----------------------------------------------------------
  Hit intersect(const Vec3& o, const Vec3& d, double tmax) const;
  Hit intersect(const Vec3& o, const Vec3& d) const {
    return intersect(o, d, std::numeric_limits<double>::infinity());
  }
  // Open-segment visibility with epsilon trimming at both ends.
  bool segment_visible(const Vec3& a, const Vec3& b) const;

  const Material& material(int mesh) const { return desc->materials[mesh]; }
  bool emissive(int mesh) const { return emitter_of_mesh[mesh] >= 0; }

  Vec3 point(const SurfacePoint& sp) const;
  Vec3 normal(const SurfacePoint& sp) const { return meshes[sp.mesh].face_normal(sp.face); }
  DVec3 dual_vertex(int mesh, int v) const;
  DVec3 dual_point(const SurfacePoint& sp) const;
  DVec3 dual_normal(const SurfacePoint& sp) const;  // unit, from deformed vertices
  // Twice the (deformed) area of the face under sp, with derivatives.
  Dual jacobian(const SurfacePoint& sp) const;
  // Velocity of the material point at sp, one vector per slot.
  SlotVec velocity(const SurfacePoint& sp) const;
  DualCamera dual_camera() const;

  // Uniform-area emitter sample from the pooled emissive triangles;
  // pdf is 1/emitter_area in the area measure.
  SurfacePoint sample_emitter(double u1, double u2, double u3) const;
  // Uniform-length point on the silhouette-candidate edge pool.
  struct EdgePointSample {
    int mesh = -1, edge = -1;
    double s = 0.0;  // position along the edge in [0,1]
    Vec3 p = Vec3::Zero();
  };
  EdgePointSample sample_edge_point(double u1, double u2) const;
};

SceneGeom build_geometry(const SceneDesc& desc, const std::vector<double>& theta);

}  // namespace tgrd
