#pragma once

#include <string>
#include <vector>

#include "tgrd/dual.h"

namespace tgrd {

enum class EdgeClass { Boundary, Sharp, Smooth };

struct Face {
  int v[3];
};

struct Edge {
  int v0 = -1, v1 = -1;  // vertex ids, v0 < v1
  int f0 = -1, f1 = -1;  // adjacent faces; f1 < 0 on boundary edges
  EdgeClass cls = EdgeClass::Smooth;
};

// Triangle mesh with adjacency. `vertices` are world positions; for scene
// descriptions they are the undeformed base, for built geometry the deformed
// configuration at the current parameter vector.
struct Mesh {
  std::string name;
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  std::vector<Edge> edges;

  Vec3 face_normal_unnormalized(int f) const {
    const Face& fc = faces[f];
    const Vec3& a = vertices[fc.v[0]];
    return (vertices[fc.v[1]] - a).cross(vertices[fc.v[2]] - a);
  }
  Vec3 face_normal(int f) const { return face_normal_unnormalized(f).normalized(); }
  double face_area(int f) const { return 0.5 * face_normal_unnormalized(f).norm(); }
};

// Minimal OBJ subset: `v x y z` and triangular `f` statements (index-only or
// slash forms); `#`, `vn`, `vt`, `s`, `o`, `g`, `mtllib`, `usemtl` are
// ignored. Anything else, non-triangle faces, or out-of-range indices throw
// std::runtime_error with the offending line number.
Mesh load_obj(const std::string& path);

// Builds the edge table. Throws if any edge has more than two adjacent faces.
void build_edges(Mesh& mesh);

// Classifies edges from the current vertex positions: single-face edges are
// Boundary; two-face edges are Sharp when the dihedral angle between face
// normals exceeds `tol` radians, else Smooth.
void classify_edges(Mesh& mesh, double tol);

// Silhouette test for the segment x -> y grazing `edge`: Boundary edges
// always qualify; Sharp edges qualify iff the segment direction does not see
// both faces from the same side; Smooth edges never qualify.
bool is_silhouette(const Mesh& mesh, const Edge& edge, const Vec3& x, const Vec3& y);

// Moller-Trumbore against one triangle, two-sided, t > 0. With an
// unnormalized direction, t comes out in units of |d| (segment parameter).
bool ray_triangle(const Vec3& o, const Vec3& d, const Vec3& p0, const Vec3& p1, const Vec3& p2,
                  double& t, double& b1, double& b2);

// Barycentric location on a face: weights (1-b1-b2, b1, b2).
struct SurfacePoint {
  int mesh = -1;
  int face = -1;
  double b1 = 0.0, b2 = 0.0;
};

}  // namespace tgrd
