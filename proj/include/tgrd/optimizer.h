#pragma once

#include <functional>
#include <string>
#include <vector>

#include "tgrd/estimators.h"

namespace tgrd {

struct AdamConfig {
  double lr = 0.07;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  int iterations = 60;
  std::vector<double> lower, upper;  // per-parameter clamps; empty = unbounded
  std::string trace_csv;             // per-iteration log; empty = off
  std::string checkpoint;            // resume state path; empty = off
  RenderOptions render;              // seed is the base; iteration i perturbs it
  // Called after each step with (iteration, loss, theta after the step).
  std::function<void(int, double, const std::vector<double>&)> on_iteration;
};

struct AdamState {
  int iter = 0;
  std::vector<double> theta, m, v;
};

struct FitResult {
  AdamState state;
  std::vector<double> loss_history;  // one entry per completed iteration
  bool aborted = false;              // non-finite loss or gradient
  std::string abort_reason;
};

// RMSE over all histogram bins.
double rmse_loss(const Histogram& got, const Histogram& target);

// d(rmse)/d(theta_p) through the histogram's analytic gradient planes.
std::vector<double> rmse_loss_grad(const Histogram& got, const Histogram& target);

// Minimizes rmse_loss(render(theta), target) with Adam. Each iteration renders
// with a fresh seed derived from the base so gradient noise is re-drawn. If
// cfg.checkpoint names an existing file the state is loaded from it and the
// iteration count continues; the file is rewritten after every step.
FitResult adam_fit(const SceneDesc& desc, const Histogram& target,
                   const std::vector<double>& theta0, const AdamConfig& cfg);

void save_state(const std::string& path, const AdamState& s);
AdamState load_state(const std::string& path);

}  // namespace tgrd
