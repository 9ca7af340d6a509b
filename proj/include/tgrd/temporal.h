#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tgrd/dual.h"

namespace tgrd {

// Emission / sensor response profiles over time (nanoseconds).
// Amplitudes are peak values; Delta carries unit integral.
struct TemporalProfile {
  enum class Kind { Delta, Box, Triangle, Gaussian };
  Kind kind = Kind::Delta;
  // Delta: a = position. Box: [a, b], amplitude amp.
  // Triangle: center a, half-width b, peak amp. Gaussian: mean a, sigma b, peak amp.
  double a = 0.0, b = 0.0, amp = 1.0;

  static TemporalProfile delta(double t0) { return {Kind::Delta, t0, 0.0, 1.0}; }
  static TemporalProfile box(double t0, double t1, double amplitude) {
    return {Kind::Box, t0, t1, amplitude};
  }
  static TemporalProfile triangle(double center, double half_width, double peak) {
    return {Kind::Triangle, center, half_width, peak};
  }
  static TemporalProfile gaussian(double mean, double sigma, double amplitude) {
    return {Kind::Gaussian, mean, sigma, amplitude};
  }

  // Pointwise evaluation (Delta is not pointwise-evaluable; callers must not ask).
  double eval(double t) const;
  // Support interval [lo, hi]; Gaussians truncated at +/- 8 sigma.
  std::pair<double, double> support() const;
  double integral() const;
};

// Time-cross-correlation S(t) = integral L(u) W(u + t) du of an emission
// profile with a sensor response. Stored as contiguous polynomial segments
// (degree <= 2, local coordinates for conditioning) plus an optional
// Gaussian term; evaluation is exact for the analytic pairs and piecewise
// linear (dense tabulation) for the rest.
struct CorrelationKernel {
  struct Segment {
    double t0, t1;      // [t0, t1]
    double c0, c1, c2;  // value = c0 + c1*(t - t0) + c2*(t - t0)^2
  };
  std::vector<Segment> segments;  // sorted, non-overlapping
  bool has_gaussian = false;
  double g_amp = 0.0, g_mean = 0.0, g_sigma = 1.0;
  double tmin = 0.0, tmax = 0.0;  // support hull
  bool tabulated = false;         // built by quadrature fallback

  double eval(double t) const;
  // dS/dt; at segment joins returns the mean of the one-sided limits.
  double deriv(double t) const;
  Dual eval(const Dual& t) const;
  std::pair<double, double> support() const { return {tmin, tmax}; }
  double integral() const;
};

// Builds the kernel for an emitter/sensor profile pair. Sensor Delta
// profiles are rejected upstream (scene validation); passing one here throws.
// Pairs without an analytic form fall back to quadrature tabulation and set
// `tabulated`; `warn` (if non-null) receives a one-line note when that happens.
CorrelationKernel correlate(const TemporalProfile& emission, const TemporalProfile& sensor,
                            std::string* warn = nullptr);

// Frame timing: frame l senses with the base response delayed by start + l*exposure.
struct FrameSpec {
  int count = 1;
  double exposure = 1.0;  // ns
  double start = 0.0;     // ns
};

// Inclusive frame range [first, last] whose shifted kernel is non-zero at
// time-of-flight `tof`; empty() when no frame sees it.
struct FrameRange {
  int first = 0, last = -1;
  bool empty() const { return last < first; }
};
FrameRange kernel_bin_range(const CorrelationKernel& k, const FrameSpec& frames, double tof);

// Shifted per-frame kernel value S_l(tof) = S(tof - start - l*exposure).
inline double frame_kernel(const CorrelationKernel& k, const FrameSpec& f, int l, double tof) {
  return k.eval(tof - f.start - l * f.exposure);
}
inline Dual frame_kernel(const CorrelationKernel& k, const FrameSpec& f, int l, const Dual& tof) {
  return k.eval(tof - (f.start + l * f.exposure));
}

}  // namespace tgrd
