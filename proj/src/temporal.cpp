#include "tgrd/temporal.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tgrd/quadrature.h"

namespace tgrd {

namespace {

constexpr double kGaussCut = 8.0;  // support truncation in sigmas

double tri_eval(double t, double c, double h, double p) {
  const double u = std::abs(t - c);
  return u <= h ? p * (1.0 - u / h) : 0.0;
}

// Integral of Triangle(c, h, p) from -inf to x.
double tri_cdf(double x, double c, double h, double p) {
  if (x <= c - h) return 0.0;
  if (x >= c + h) return p * h;
  if (x <= c) {
    const double s = x - (c - h);
    return p * s * s / (2.0 * h);
  }
  const double s = x - c;
  return p * (h / 2.0 + s - s * s / (2.0 * h));
}

}  // namespace

double TemporalProfile::eval(double t) const {
  switch (kind) {
    case Kind::Delta:
      throw std::logic_error("Delta profile has no pointwise value");
    case Kind::Box:
      return (t >= a && t <= b) ? amp : 0.0;
    case Kind::Triangle:
      return tri_eval(t, a, b, amp);
    case Kind::Gaussian: {
      const double u = (t - a) / b;
      return amp * std::exp(-0.5 * u * u);
    }
  }
  return 0.0;
}

std::pair<double, double> TemporalProfile::support() const {
  switch (kind) {
    case Kind::Delta:
      return {a, a};
    case Kind::Box:
      return {a, b};
    case Kind::Triangle:
      return {a - b, a + b};
    case Kind::Gaussian:
      return {a - kGaussCut * b, a + kGaussCut * b};
  }
  return {0.0, 0.0};
}

double TemporalProfile::integral() const {
  switch (kind) {
    case Kind::Delta:
      return 1.0;
    case Kind::Box:
      return amp * (b - a);
    case Kind::Triangle:
      return amp * b;
    case Kind::Gaussian:
      return amp * b * std::sqrt(2.0 * M_PI);
  }
  return 0.0;
}

double CorrelationKernel::eval(double t) const {
  if (t < tmin || t > tmax) return 0.0;
  if (has_gaussian) {
    const double u = (t - g_mean) / g_sigma;
    return g_amp * std::exp(-0.5 * u * u);
  }
  // Binary search for the segment with t0 <= t <= t1.
  auto it = std::upper_bound(segments.begin(), segments.end(), t,
                             [](double x, const Segment& s) { return x < s.t0; });
  if (it == segments.begin()) return 0.0;
  --it;
  if (t > it->t1) return 0.0;
  const double u = t - it->t0;
  return it->c0 + u * (it->c1 + u * it->c2);
}

double CorrelationKernel::deriv(double t) const {
  if (t < tmin || t > tmax) return 0.0;
  if (has_gaussian) {
    const double u = (t - g_mean) / g_sigma;
    const double d = -g_amp * u / g_sigma * std::exp(-0.5 * u * u);
    // Halve at the truncation boundary: mean of inside slope and outside zero.
    if (t == tmin || t == tmax) return 0.5 * d;
    return d;
  }
  // Segments are sorted by t0, so the candidate holding t is the last one
  // with t0 <= t; a segment starting exactly at t sorts on the same side of
  // upper_bound's partition point and therefore IS that candidate.
  auto it = std::upper_bound(segments.begin(), segments.end(), t,
                             [](double x, const Segment& s) { return x < s.t0; });
  if (it == segments.begin()) return 0.0;
  const auto cur = std::prev(it);
  if (t > cur->t1) return 0.0;  // in a gap
  const double d = cur->c1 + 2.0 * cur->c2 * (t - cur->t0);
  if (t > cur->t0 && t < cur->t1) return d;  // interior
  // At joins and support endpoints: mean of the one-sided slopes, the
  // outside slope counting as zero.
  if (t == cur->t0) {
    double left = 0.0;
    if (cur != segments.begin()) {
      const auto pr = std::prev(cur);
      if (pr->t1 == t) left = pr->c1 + 2.0 * pr->c2 * (t - pr->t0);
    }
    return 0.5 * (left + d);
  }
  return 0.5 * d;  // t == cur->t1 and nothing starts here
}

Dual CorrelationKernel::eval(const Dual& t) const {
  Dual r(eval(t.v));
  const double d = deriv(t.v);
  for (int i = 0; i < kMaxSlots; ++i) r.g[i] = d * t.g[i];
  return r;
}

double CorrelationKernel::integral() const {
  if (has_gaussian) return g_amp * g_sigma * std::sqrt(2.0 * M_PI);
  double total = 0.0;
  for (const auto& s : segments) {
    const double h = s.t1 - s.t0;
    total += s.c0 * h + s.c1 * h * h / 2.0 + s.c2 * h * h * h / 3.0;
  }
  return total;
}

namespace {

using Kind = TemporalProfile::Kind;

void push_segment(CorrelationKernel& k, double t0, double t1, double c0, double c1,
                  double c2 = 0.0) {
  if (!(t1 > t0)) return;
  k.segments.push_back({t0, t1, c0, c1, c2});
}

void finish(CorrelationKernel& k) {
  std::sort(k.segments.begin(), k.segments.end(),
            [](const auto& a, const auto& b) { return a.t0 < b.t0; });
  // Drop identically-zero end segments so the support hull is tight.
  auto zero = [](const CorrelationKernel::Segment& s) {
    const double h = s.t1 - s.t0;
    const double m = std::abs(s.c0) + std::abs(s.c0 + s.c1 * h + s.c2 * h * h) +
                     std::abs(s.c0 + 0.5 * s.c1 * h + 0.25 * s.c2 * h * h);
    return m == 0.0;
  };
  while (!k.segments.empty() && zero(k.segments.front())) k.segments.erase(k.segments.begin());
  while (!k.segments.empty() && zero(k.segments.back())) k.segments.pop_back();
  if (!k.segments.empty()) {
    k.tmin = k.segments.front().t0;
    k.tmax = k.segments.back().t1;
  }
}

// Fits the exact quadratic on [t0, t1] through three evaluations.
template <typename F>
void fit_quadratic(CorrelationKernel& k, const F& f, double t0, double t1) {
  const double h = t1 - t0;
  if (!(h > 0.0)) return;
  const double f0 = f(t0), fm = f(t0 + 0.5 * h), f1 = f(t1);
  const double c2 = 2.0 * (f1 + f0 - 2.0 * fm) / (h * h);
  const double c1 = (4.0 * fm - 3.0 * f0 - f1) / h;
  push_segment(k, t0, t1, f0, c1, c2);
}

CorrelationKernel shift_of_sensor(const TemporalProfile& w, double t0) {
  // L = Delta(t0): S(t) = W(t0 + t), i.e. the sensor shape shifted left by t0.
  CorrelationKernel k;
  switch (w.kind) {
    case Kind::Box:
      push_segment(k, w.a - t0, w.b - t0, w.amp, 0.0);
      break;
    case Kind::Triangle:
      push_segment(k, w.a - w.b - t0, w.a - t0, 0.0, w.amp / w.b);
      push_segment(k, w.a - t0, w.a + w.b - t0, w.amp, -w.amp / w.b);
      break;
    case Kind::Gaussian:
      k.has_gaussian = true;
      k.g_amp = w.amp;
      k.g_mean = w.a - t0;
      k.g_sigma = w.b;
      k.tmin = k.g_mean - kGaussCut * k.g_sigma;
      k.tmax = k.g_mean + kGaussCut * k.g_sigma;
      return k;
    case Kind::Delta:
      throw std::invalid_argument("sensor Delta profile is not supported");
  }
  finish(k);
  return k;
}

CorrelationKernel box_box(const TemporalProfile& l, const TemporalProfile& w) {
  // Overlap length of [l.a, l.b] and [w.a - t, w.b - t]: trapezoid in t.
  CorrelationKernel k;
  const double ab = l.amp * w.amp;
  const double k1 = w.a - l.b;
  const double k4 = w.b - l.a;
  const double k2 = std::min(w.a - l.a, w.b - l.b);
  const double k3 = std::max(w.a - l.a, w.b - l.b);
  push_segment(k, k1, k2, 0.0, ab);
  push_segment(k, k2, k3, ab * (k2 - k1), 0.0);
  push_segment(k, k3, k4, ab * (k2 - k1), -ab);
  finish(k);
  return k;
}

CorrelationKernel box_triangle(const TemporalProfile& box, const TemporalProfile& tri,
                               bool box_is_emission) {
  // Piecewise quadratic; exact evaluator via the triangle CDF, then an exact
  // 3-point quadratic fit on each knot interval.
  auto exact = [&](double t) {
    if (box_is_emission)  // S(t) = A*(TriCDF(b + t) - TriCDF(a + t))
      return box.amp * (tri_cdf(box.b + t, tri.a, tri.b, tri.amp) -
                        tri_cdf(box.a + t, tri.a, tri.b, tri.amp));
    // L triangle, W box: S(t) = B*(TriCDF(w.b - t) - TriCDF(w.a - t))
    return box.amp * (tri_cdf(box.b - t, tri.a, tri.b, tri.amp) -
                      tri_cdf(box.a - t, tri.a, tri.b, tri.amp));
  };
  const double breaks[3] = {tri.a - tri.b, tri.a, tri.a + tri.b};
  std::vector<double> knots;
  for (double br : breaks) {
    if (box_is_emission) {
      knots.push_back(br - box.a);
      knots.push_back(br - box.b);
    } else {
      knots.push_back(box.a - br);
      knots.push_back(box.b - br);
    }
  }
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end(),
                          [](double a, double b) { return std::abs(a - b) < 1e-15; }),
              knots.end());
  CorrelationKernel k;
  for (size_t i = 0; i + 1 < knots.size(); ++i) fit_quadratic(k, exact, knots[i], knots[i + 1]);
  finish(k);
  return k;
}

CorrelationKernel gauss_gauss(const TemporalProfile& l, const TemporalProfile& w) {
  CorrelationKernel k;
  k.has_gaussian = true;
  const double s2 = l.b * l.b + w.b * w.b;
  k.g_sigma = std::sqrt(s2);
  k.g_mean = w.a - l.a;
  k.g_amp = l.amp * w.amp * std::sqrt(2.0 * M_PI * (l.b * l.b) * (w.b * w.b) / s2);
  k.tmin = k.g_mean - kGaussCut * k.g_sigma;
  k.tmax = k.g_mean + kGaussCut * k.g_sigma;
  return k;
}

CorrelationKernel tabulate(const TemporalProfile& l, const TemporalProfile& w) {
  const auto [l0, l1] = l.support();
  const auto [w0, w1] = w.support();
  const double t0 = w0 - l1, t1 = w1 - l0;
  constexpr int kKnots = 2048;
  std::vector<double> val(kKnots + 1);
  for (int i = 0; i <= kKnots; ++i) {
    const double t = t0 + (t1 - t0) * i / kKnots;
    const double a = std::max(l0, w0 - t), b = std::min(l1, w1 - t);
    val[i] = adaptive_simpson([&](double u) { return l.eval(u) * w.eval(u + t); }, a, b, 1e-12);
  }
  CorrelationKernel k;
  for (int i = 0; i < kKnots; ++i) {
    const double a = t0 + (t1 - t0) * i / kKnots;
    const double b = t0 + (t1 - t0) * (i + 1) / kKnots;
    push_segment(k, a, b, val[i], (val[i + 1] - val[i]) / (b - a));
  }
  k.tabulated = true;
  finish(k);
  return k;
}

}  // namespace

CorrelationKernel correlate(const TemporalProfile& emission, const TemporalProfile& sensor,
                            std::string* warn) {
  if (sensor.kind == Kind::Delta)
    throw std::invalid_argument("sensor Delta profile is not supported");
  if (emission.kind == Kind::Delta) return shift_of_sensor(sensor, emission.a);
  if (emission.kind == Kind::Box && sensor.kind == Kind::Box) return box_box(emission, sensor);
  if (emission.kind == Kind::Box && sensor.kind == Kind::Triangle)
    return box_triangle(emission, sensor, /*box_is_emission=*/true);
  if (emission.kind == Kind::Triangle && sensor.kind == Kind::Box)
    return box_triangle(sensor, emission, /*box_is_emission=*/false);
  if (emission.kind == Kind::Gaussian && sensor.kind == Kind::Gaussian)
    return gauss_gauss(emission, sensor);
  if (warn)
    *warn = "no analytic correlation for this profile pair; using tabulated quadrature";
  return tabulate(emission, sensor);
}

FrameRange kernel_bin_range(const CorrelationKernel& k, const FrameSpec& frames, double tof) {
  FrameRange r;
  const auto [smin, smax] = k.support();
  // S(tof - start - l*exposure) != 0 requires the argument inside [smin, smax].
  double lo = (tof - frames.start - smax) / frames.exposure;
  double hi = (tof - frames.start - smin) / frames.exposure;
  int first = static_cast<int>(std::ceil(lo)) - 1;   // widen one frame each side,
  int last = static_cast<int>(std::floor(hi)) + 1;   // then trim by evaluation
  first = std::max(first, 0);
  last = std::min(last, frames.count - 1);
  while (first <= last && frame_kernel(k, frames, first, tof) == 0.0) ++first;
  while (first <= last && frame_kernel(k, frames, last, tof) == 0.0) --last;
  r.first = first;
  r.last = last;
  return r;
}

}  // namespace tgrd
