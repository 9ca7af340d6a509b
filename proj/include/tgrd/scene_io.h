#pragma once

#include <string>

#include "tgrd/scene.h"

namespace tgrd {

// Parses a JSON scene description. Unknown keys are rejected (typo safety),
// mesh paths resolve relative to the scene file, and every schema violation
// throws std::runtime_error with the offending JSON path in the message.
SceneDesc load_scene(const std::string& path);

// Procedural meshes backing the scene format's "quad" and "box" blocks.
// The quad's face normal follows edge_u x edge_v; box faces point outward.
Mesh make_quad(const Vec3& origin, const Vec3& edge_u, const Vec3& edge_v);
Mesh make_box(const Vec3& lo, const Vec3& hi);

}  // namespace tgrd
