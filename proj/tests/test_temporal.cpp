#include <doctest.h>

#include <cmath>
#include <string>

#include "tgrd/quadrature.h"
#include "tgrd/temporal.h"

using namespace tgrd;

namespace {

// Quadrature oracle for S(t) = integral L(u) W(u + t) du, built only from
// pointwise profile evaluation. Delta emission short-circuits to W(a + t).
double correlate_ref(const TemporalProfile& L, const TemporalProfile& W, double t) {
  if (L.kind == TemporalProfile::Kind::Delta) return W.eval(L.a + t);
  const auto [l0, l1] = L.support();
  const auto [w0, w1] = W.support();
  const double a = std::max(l0, w0 - t), b = std::min(l1, w1 - t);
  if (!(b > a)) return 0.0;
  return adaptive_simpson([&](double u) { return L.eval(u) * W.eval(u + t); }, a, b, 1e-12);
}

void check_against_quadrature(const TemporalProfile& L, const TemporalProfile& W,
                              double tol) {
  const CorrelationKernel k = correlate(L, W);
  const auto [t0, t1] = k.support();
  REQUIRE(t1 > t0);
  for (int i = 0; i <= 40; ++i) {
    const double t = t0 - 0.05 + (t1 - t0 + 0.1) * i / 40.0;
    // |got - ref| < tol * (1 + max(|got|, |ref|)): absolute near zero.
    CHECK(k.eval(t) == doctest::Approx(correlate_ref(L, W, t)).epsilon(tol).scale(1.0));
  }
}

}  // namespace

TEST_CASE("profile evaluation and integrals") {
  const TemporalProfile box = TemporalProfile::box(1.0, 3.0, 2.5);
  CHECK(box.eval(2.0) == 2.5);
  CHECK(box.eval(0.99) == 0.0);
  CHECK(box.integral() == doctest::Approx(5.0));

  const TemporalProfile tri = TemporalProfile::triangle(2.0, 0.5, 3.0);
  CHECK(tri.eval(2.0) == doctest::Approx(3.0));
  CHECK(tri.eval(2.25) == doctest::Approx(1.5));
  CHECK(tri.eval(2.5) == 0.0);
  CHECK(tri.integral() == doctest::Approx(1.5));  // peak * half_width

  const TemporalProfile g = TemporalProfile::gaussian(1.0, 0.3, 2.0);
  CHECK(g.eval(1.0) == doctest::Approx(2.0));
  CHECK(g.eval(1.3) == doctest::Approx(2.0 * std::exp(-0.5)));
  CHECK(g.integral() == doctest::Approx(2.0 * 0.3 * std::sqrt(2.0 * M_PI)).epsilon(1e-9));
}

TEST_CASE("delta correlated with box is a shifted box") {
  // S(t) = A on [a - d, b - d]: the sensor gate seen from the pulse time.
  const auto k = correlate(TemporalProfile::delta(1.5), TemporalProfile::box(2.0, 5.0, 0.8));
  CHECK(k.support().first == doctest::Approx(0.5));
  CHECK(k.support().second == doctest::Approx(3.5));
  CHECK(k.eval(0.4) == 0.0);
  CHECK(k.eval(0.6) == doctest::Approx(0.8));
  CHECK(k.eval(3.4) == doctest::Approx(0.8));
  CHECK(k.eval(3.6) == 0.0);
  CHECK(k.integral() == doctest::Approx(0.8 * 3.0));

  // Flat across the support: the time derivative vanishes everywhere,
  // including at the support edges.
  for (double t : {0.5, 0.50001, 1.0, 2.0, 3.49999, 3.5})
    CHECK(k.deriv(t) == 0.0);
}

TEST_CASE("equal-width boxes correlate to an exact triangle") {
  const double w = 0.7, A = 2.0, B = 3.0;
  const auto k =
      correlate(TemporalProfile::box(0.0, w, A), TemporalProfile::box(0.0, w, B));
  CHECK(k.support().first == doctest::Approx(-w));
  CHECK(k.support().second == doctest::Approx(w));
  CHECK(k.eval(0.0) == doctest::Approx(A * B * w));  // peak value A*B*w at zero lag
  CHECK(k.eval(0.5 * w) == doctest::Approx(A * B * 0.5 * w));
  CHECK(k.eval(-0.99 * w) == doctest::Approx(A * B * 0.01 * w));
  CHECK(k.eval(1.01 * w) == 0.0);
  CHECK(k.integral() == doctest::Approx(A * w * B * w));

  // Slope is +-A*B inside, averaged to zero exactly at the apex.
  CHECK(k.deriv(-0.3 * w) == doctest::Approx(A * B));
  CHECK(k.deriv(0.3 * w) == doctest::Approx(-A * B));
  CHECK(k.deriv(0.0) == doctest::Approx(0.0));
}

TEST_CASE("gaussian pair matches quadrature to 1e-8") {
  const auto L = TemporalProfile::gaussian(0.4, 0.25, 1.5);
  const auto W = TemporalProfile::gaussian(1.1, 0.6, 0.7);
  check_against_quadrature(L, W, 1e-8);
  const auto k = correlate(L, W);
  CHECK(k.integral() == doctest::Approx(L.integral() * W.integral()).epsilon(1e-8));
}

TEST_CASE("box-triangle pair is analytic") {
  check_against_quadrature(TemporalProfile::box(0.0, 1.0, 2.0),
                           TemporalProfile::triangle(0.5, 0.4, 1.0), 1e-10);
  check_against_quadrature(TemporalProfile::triangle(0.2, 0.8, 2.0),
                           TemporalProfile::box(-0.5, 0.75, 1.5), 1e-10);
}

TEST_CASE("pairs without closed forms fall back to dense tabulation") {
  const auto L = TemporalProfile::triangle(0.0, 0.5, 1.0);
  const auto W = TemporalProfile::triangle(0.3, 0.7, 2.0);
  std::string warn;
  const auto k = correlate(L, W, &warn);
  CHECK(k.tabulated);
  CHECK_FALSE(warn.empty());
  check_against_quadrature(L, W, 1e-5);
  CHECK(k.integral() == doctest::Approx(L.integral() * W.integral()).epsilon(1e-4));

  // Factored-integral identity on a second mixed pair.
  const auto Lg = TemporalProfile::gaussian(0.5, 0.2, 1.0);
  const auto Wt = TemporalProfile::triangle(0.0, 0.4, 1.0);
  const auto k2 = correlate(Lg, Wt);
  CHECK(k2.integral() == doctest::Approx(Lg.integral() * Wt.integral()).epsilon(1e-4));
  check_against_quadrature(Lg, Wt, 2e-5);
}

TEST_CASE("kernel derivative agrees with dual evaluation and differences") {
  const auto k = correlate(TemporalProfile::gaussian(0.3, 0.4, 2.0),
                           TemporalProfile::box(0.0, 1.0, 1.0));
  for (double t : {-0.3, 0.1, 0.42, 0.9, 1.6}) {
    Dual td(t);
    td.g[2] = 1.0;
    const Dual r = k.eval(td);
    CHECK(r.v == doctest::Approx(k.eval(t)));
    CHECK(r.g[2] == doctest::Approx(k.deriv(t)));
    const double fd = (k.eval(t + 5e-7) - k.eval(t - 5e-7)) / 1e-6;
    CHECK(k.deriv(t) == doctest::Approx(fd).epsilon(1e-4).scale(1.0));
  }
}

TEST_CASE("frame ranges cover exactly the frames that see a tof") {
  const auto k = correlate(TemporalProfile::delta(0.0), TemporalProfile::box(0.0, 2.0, 1.0));
  const FrameSpec frames{10, 2.0, 4.0};

  // Hand case: tof 9.0 lands in S(9 - 4 - 2l) != 0 <=> 3.5 <= ... support
  // [0,2]: 0 <= 5 - 2l <= 2 <=> 1.5 <= l <= 2.5 <=> l = 2.
  const FrameRange r = kernel_bin_range(k, frames, 9.0);
  CHECK(r.first == 2);
  CHECK(r.last == 2);

  // Brute force: every frame with a non-zero kernel value lies in the range,
  // and every frame in the range lies inside the support hull.
  const auto check_range = [&](const CorrelationKernel& ker, const FrameSpec& fs, double tof) {
    const FrameRange rr = kernel_bin_range(ker, fs, tof);
    for (int l = 0; l < fs.count; ++l) {
      const double v = frame_kernel(ker, fs, l, tof);
      if (v != 0.0) {
        CHECK(l >= rr.first);
        CHECK(l <= rr.last);
      }
      if (l >= rr.first && l <= rr.last) {
        const double local = tof - fs.start - l * fs.exposure;
        CHECK(local >= ker.support().first - 1e-12);
        CHECK(local <= ker.support().second + 1e-12);
      }
    }
  };
  const auto k2 = correlate(TemporalProfile::gaussian(0.2, 0.3, 1.0),
                            TemporalProfile::box(0.0, 0.5, 1.0));
  for (double tof = -1.0; tof < 30.0; tof += 0.37) {
    check_range(k, frames, tof);
    check_range(k2, frames, tof);
    check_range(k2, FrameSpec{3, 0.25, 1.0}, tof);
  }

  CHECK(kernel_bin_range(k, frames, 100.0).empty());
  CHECK(kernel_bin_range(k, frames, -5.0).empty());
}

TEST_CASE("frame kernels are time-shifted copies of the base kernel") {
  const auto k = correlate(TemporalProfile::delta(0.5), TemporalProfile::box(0.0, 1.0, 2.0));
  const FrameSpec fs{5, 1.5, 2.0};
  for (int l = 0; l < 5; ++l)
    for (double t : {2.6, 3.1, 4.0, 6.7})
      CHECK(frame_kernel(k, fs, l, t) == doctest::Approx(k.eval(t - 2.0 - 1.5 * l)));
}
