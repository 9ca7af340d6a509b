#pragma once

#include <span>

#include "tgrd/dual.h"
#include "tgrd/rng.h"
#include "tgrd/scene.h"

namespace tgrd {

// Geometry term |cos_x||cos_y| / r^2 between surface points with unit
// normals nx, ny. For the pinhole endpoint pass the camera forward axis.
Dual geometry_term(const DVec3& x, const DVec3& nx, const DVec3& y, const DVec3& ny);

// BSDF value (reflectance per steradian; cosines live in the geometry term).
// Two-sided: wi and wo must leave on the same side of n, else zero.
// Directions point away from the surface point.
Dual bsdf_eval(const Material& m, const DVec3& n, const DVec3& wi, const DVec3& wo);

// Solid-angle pdf of sampling wo from bsdf_sample given incident wi.
// Defective for rough conductors: mass reflected below the horizon is lost
// (the sampler terminates there), so the sphere integral can be < 1.
double bsdf_pdf(const Material& m, const Vec3& n, const Vec3& wi, const Vec3& wo);
// Same pdf with derivative channels; multiple-importance weights are smooth
// functions of the deformed geometry and differentiate through it.
Dual bsdf_pdf(const Material& m, const DVec3& n, const DVec3& wi, const DVec3& wo);

// Importance-samples an outgoing direction; returns pdf via out-param
// (zero pdf = failed sample).
Vec3 bsdf_sample(const Material& m, const Vec3& n, const Vec3& wi, Pcg32& rng, double* pdf);

// Optical length of one segment: eta * |b - a|.
Dual segment_optical_length(const DVec3& a, const DVec3& b, const Dual& eta);

// Time of flight of a full vertex chain (emitter..sensor) in ns:
// sum_i eta * |x_{i+1} - x_i| / c.
Dual path_tof(std::span<const DVec3> pts, const Dual& eta, double c);

// Spatial sensor importance of the segment x -> pinhole, paired with the
// mean-radiance-per-pixel measurement: 1 / (pixel_area * cos^4 alpha),
// alpha measured against the camera forward axis.
Dual camera_we(const SceneGeom& g, const DualCamera& cam, const DVec3& x);

// Pixel under the direction pinhole -> x; false when outside the film or
// behind the camera.
bool camera_project(const SceneGeom& g, const Vec3& x, int* px, int* py, double* cos_alpha);

// Solid-angle pdf of the primary ray through a pixel (uniform jitter over
// the pixel footprint): 1 / (pixel_area * cos^3 alpha).
double camera_ray_pdf(const SceneGeom& g, double cos_alpha);

// Primary ray through pixel (px, py) at jitter (jx, jy) in [0,1)^2.
Vec3 camera_ray_dir(const Camera& cam, int px, int py, double jx, double jy);

// Cosine-hemisphere sample around unit normal n.
Vec3 cosine_sample(const Vec3& n, double u1, double u2, double* pdf);

}  // namespace tgrd
