#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tgrd/dual.h"

namespace tgrd {

// Per-pixel time-resolved radiance with one gradient plane per scene
// parameter. Stored double internally, float32 on disk. Plane layout is
// row-major with the frame index innermost: ((y*W)+x)*F + l.
struct Histogram {
  int height = 0, width = 0, frames = 0, nparams = 0;
  double t0 = 0.0, dt = 0.0, c = 0.0;
  std::vector<double> intensity;  // H*W*F
  std::vector<double> grad;       // nparams planes of H*W*F

  Histogram() = default;
  Histogram(int h, int w, int f, int d)
      : height(h), width(w), frames(f), nparams(d),
        intensity(static_cast<size_t>(h) * w * f, 0.0),
        grad(static_cast<size_t>(d) * h * w * f, 0.0) {}

  size_t plane_size() const { return static_cast<size_t>(height) * width * frames; }
  size_t idx(int y, int x, int l) const {
    return (static_cast<size_t>(y) * width + x) * frames + l;
  }
  double& at(int y, int x, int l) { return intensity[idx(y, x, l)]; }
  double at(int y, int x, int l) const { return intensity[idx(y, x, l)]; }
  double& grad_at(int p, int y, int x, int l) { return grad[p * plane_size() + idx(y, x, l)]; }
  double grad_at(int p, int y, int x, int l) const {
    return grad[p * plane_size() + idx(y, x, l)];
  }
  std::span<const double> grad_plane(int p) const {
    return {grad.data() + p * plane_size(), plane_size()};
  }
};

// Accumulation buffer used inside the estimators: intensity plus one plane
// per binding slot. Non-finite deposits are dropped and counted.
struct Accum {
  int height = 0, width = 0, frames = 0, nslots = 0;
  std::vector<double> intensity;
  std::vector<double> slots;  // nslots planes
  uint64_t nonfinite = 0;

  Accum() = default;
  Accum(int h, int w, int f, int s)
      : height(h), width(w), frames(f), nslots(s),
        intensity(static_cast<size_t>(h) * w * f, 0.0),
        slots(static_cast<size_t>(s) * h * w * f, 0.0) {}

  size_t plane_size() const { return static_cast<size_t>(height) * width * frames; }
  size_t idx(int y, int x, int l) const {
    return (static_cast<size_t>(y) * width + x) * frames + l;
  }

  void deposit(int y, int x, int l, const Dual& v) {
    if (!isfinite(v)) {
      ++nonfinite;
      return;
    }
    const size_t i = idx(y, x, l);
    intensity[i] += v.v;
    for (int s = 0; s < nslots; ++s) slots[s * plane_size() + i] += v.g[s];
  }
  // Gradient-only deposit (boundary estimator).
  void deposit_slot(int s, int y, int x, int l, double v) {
    if (!std::isfinite(v)) {
      ++nonfinite;
      return;
    }
    slots[s * plane_size() + idx(y, x, l)] += v;
  }
  void merge(const Accum& o) {
    for (size_t i = 0; i < intensity.size(); ++i) intensity[i] += o.intensity[i];
    for (size_t i = 0; i < slots.size(); ++i) slots[i] += o.slots[i];
    nonfinite += o.nonfinite;
  }
};

// Collapses binding slots into parameter planes (sum in slot order) and
// applies a scale factor.
Histogram finalize_accum(const Accum& a, std::span<const int> slot_param, int nparams,
                         double scale, double t0, double dt, double c);

// TGRD container: magic "TGRD", u32 version, u32 dims H, W, N_f, d,
// f64 t0 / frame spacing / light speed, then (1+d) float32 planes.
void write_tgrd(const std::string& path, const Histogram& h);
Histogram read_tgrd(const std::string& path);

// One row per (pixel, frame): y,x,frame,intensity,grad0,..
void write_csv(const std::string& path, const Histogram& h);

// Per-frame 8-bit PNGs. plane = -1 exports intensity (linear scale to the
// global max, gamma 2.2); plane >= 0 exports that signed gradient plane on a
// blue-white-red diverging scale. Files are named <prefix>_0000.png etc.
void write_frame_pngs(const std::string& dir, const std::string& prefix, const Histogram& h,
                      int plane);

}  // namespace tgrd
