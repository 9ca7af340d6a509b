#pragma once

#include <cmath>
#include <functional>

namespace tgrd {

namespace detail {
template <typename F>
double simpson_step(const F& f, double a, double b, double fa, double fm, double fb,
                    double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
}  // namespace detail

// Adaptive Simpson with Richardson correction.
template <typename F>
double adaptive_simpson(const F& f, double a, double b, double tol = 1e-10, int max_depth = 40) {
  if (!(b > a)) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  // Split into a few panels first so narrow features are not missed by the
  // initial coarse estimate.
  constexpr int kPanels = 8;
  double total = 0.0;
  for (int i = 0; i < kPanels; ++i) {
    const double x0 = a + (b - a) * i / kPanels;
    const double x1 = a + (b - a) * (i + 1) / kPanels;
    const double xm = 0.5 * (x0 + x1);
    const double f0 = f(x0), fmm = f(xm), f1 = f(x1);
    const double w = (x1 - x0) / 6.0 * (f0 + 4.0 * fmm + f1);
    total += detail::simpson_step(f, x0, x1, f0, fmm, f1, w, tol / kPanels, max_depth);
  }
  (void)whole;
  return total;
}

}  // namespace tgrd
