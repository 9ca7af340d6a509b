#pragma once

#include <cstdint>

#include "tgrd/histogram.h"
#include "tgrd/scene.h"

namespace tgrd {

struct RenderOptions {
  int spp_interior = -1;  // < 0: use the scene's estimator settings
  int spp_boundary = -1;
  long long seed = -1;    // < 0: use the scene's seed
  int threads = 1;
  bool interior = true;
  bool boundary = true;
};

struct RenderStats {
  uint64_t nonfinite = 0;        // deposits dropped for non-finite values
  uint64_t boundary_tried = 0;   // edge/direction draws
  uint64_t boundary_kept = 0;    // draws that produced a silhouette deposit
  // Sum over interior deposits of |weight| * |dS/dt| at the evaluation
  // point. Exactly zero when every kernel is flat across its support
  // (steady-state check).
  double temporal_term_abs = 0.0;
  double seconds = 0.0;
};

// Renders the transient histogram and all parameter gradient planes in one
// pass. Interior work is partitioned by pixel rows (bit-identical for any
// worker count); boundary samples are partitioned by index and merged in
// worker order.
Histogram render(const SceneGeom& g, const RenderOptions& opt, RenderStats* stats = nullptr);

// Builds the geometry at theta and renders it.
Histogram render_scene(const SceneDesc& desc, const std::vector<double>& theta,
                       const RenderOptions& opt, RenderStats* stats = nullptr);

}  // namespace tgrd
