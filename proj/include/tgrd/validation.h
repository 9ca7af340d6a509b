#pragma once

#include <span>
#include <string>
#include <vector>

#include "tgrd/estimators.h"

namespace tgrd {

// Central finite difference of the intensity field w.r.t. parameter p, using
// common random numbers: both perturbed renders reuse the same seed.
std::vector<double> fd_intensity(const SceneDesc& desc, const std::vector<double>& theta,
                                 int p, double eps, const RenderOptions& opt);

// Per-bin mean and squared standard error of a repeated estimate.
struct BatchField {
  int batches = 0;
  std::vector<double> mean;  // H*W*F
  std::vector<double> sem2;  // squared standard error of the mean, per bin
};

// Repeats the analytic render `batches` times with decorrelated seeds and
// summarizes gradient plane p. Each batch renders at opt's spp, so the total
// cost is `batches` renders.
BatchField batched_gradient(const SceneDesc& desc, const std::vector<double>& theta,
                            int p, int batches, const RenderOptions& opt);

// Same for the finite-difference estimate: batch b uses one seed for both of
// its perturbed renders (common random numbers within the batch).
BatchField batched_fd(const SceneDesc& desc, const std::vector<double>& theta, int p,
                      double eps, int batches, const RenderOptions& opt);

// Same for the intensity itself.
BatchField batched_intensity(const SceneDesc& desc, const std::vector<double>& theta,
                             int batches, const RenderOptions& opt);

struct FrameStats {
  int frame = -1;
  double pearson = 0.0;    // correlation of a vs b across pixels
  double rmse = 0.0;       // RMS of (a - b)
  double rmse_pred = 0.0;  // Monte Carlo prediction of that RMS if a == b
  double max_abs = 0.0;    // max |a - b|
  double ref_rms = 0.0;    // RMS of b (signal scale)
  int n = 0;
};

// Compares fields a and b restricted to frame l (layout ((y*W)+x)*F + l).
// sem2a / sem2b may be empty; present ones add into rmse_pred.
FrameStats compare_frame(std::span<const double> a, std::span<const double> b,
                         std::span<const double> sem2a, std::span<const double> sem2b,
                         int height, int width, int frames, int l);

// All frames at once (frame = -1 in the result).
FrameStats compare_all(std::span<const double> a, std::span<const double> b,
                       std::span<const double> sem2a, std::span<const double> sem2b);

// One row per frame: frame,pearson,rmse,rmse_pred,max_abs,ref_rms,n
void write_frame_stats_csv(const std::string& path, const std::vector<FrameStats>& stats);

}  // namespace tgrd
