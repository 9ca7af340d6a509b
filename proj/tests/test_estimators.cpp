#include <doctest.h>

#include <cmath>
#include <numeric>

#include "test_scenes.h"
#include "tgrd/estimators.h"
#include "tgrd/validation.h"

using namespace tgrd;

TEST_CASE("pixels staring at a uniform emitter read exactly its radiance") {
  // Radiance-meter identity: for a direct hit the pixel importance, the
  // geometry term and the primary-ray pdf cancel, leaving the emitted
  // radiance. The emitter is black so no longer path contributes.
  const double Le = 2.5;
  const SceneDesc d = testscenes::emitter_stare(8, Le);
  const SceneGeom g = build_geometry(d, {});
  RenderStats st;
  const Histogram h = render(g, RenderOptions{}, &st);

  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x)
      CHECK(h.at(y, x, 0) == doctest::Approx(Le).epsilon(1e-12));
  CHECK(st.nonfinite == 0);

  // Depth 1 restricts to exactly these direct paths: nothing changes.
  SceneDesc d1 = d;
  d1.est.max_depth = 1;
  const Histogram h1 = render_scene(d1, {}, RenderOptions{});
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x)
      CHECK(h1.at(y, x, 0) == doctest::Approx(Le).epsilon(1e-12));
}

TEST_CASE("emission is one-sided") {
  SceneDesc d = testscenes::emitter_stare(6, 2.5);
  d.camera = testscenes::look_at(Vec3(0, 0, -2), Vec3(0, 0, 0), 6, 6);
  const Histogram h = render_scene(d, {}, RenderOptions{});
  for (double v : h.intensity) CHECK(v == 0.0);
}

TEST_CASE("interior gradient tracks finite differences on a smooth scene") {
  const SceneDesc d = testscenes::smooth_one_bounce(12, 8, 200);
  const std::vector<double> theta{0.0};

  RenderOptions opt;
  RenderStats st;
  const SceneGeom g = build_geometry(d, theta);
  const Histogram h = render(g, opt, &st);
  const std::vector<double> fd = fd_intensity(d, theta, 0, 0.02, opt);

  const FrameStats s = compare_all(h.grad_plane(0), fd, {}, {});
  CHECK(s.pearson > 0.85);
  CHECK(s.ref_rms > 0.0);  // the derivative signal is not trivially zero
  CHECK(s.rmse < 0.5 * s.ref_rms);

  // This scene has no visibility discontinuities: the boundary sampler must
  // find nothing even when it runs.
  SceneDesc db = d;
  db.est.spp_boundary = 64;
  RenderStats stb;
  render_scene(db, theta, RenderOptions{}, &stb);
  CHECK(stb.boundary_tried > 0);
  CHECK(stb.boundary_kept == 0);
}

TEST_CASE("boundary term carries the occluder derivative") {
  const SceneDesc d = testscenes::occluder_scene(16, 8, 256, 256);
  const std::vector<double> theta{0.0};

  RenderOptions both;
  RenderStats st;
  const Histogram h = render_scene(d, theta, both, &st);
  CHECK(st.boundary_kept > 0);

  RenderOptions interior_only;
  interior_only.boundary = false;
  const Histogram hi = render_scene(d, theta, interior_only);

  const std::vector<double> fd = fd_intensity(d, theta, 0, 0.02, both);
  const FrameStats s_both = compare_all(h.grad_plane(0), fd, {}, {});
  const FrameStats s_int = compare_all(hi.grad_plane(0), fd, {}, {});

  CHECK(s_both.pearson > 0.55);
  // Without the boundary term most of the derivative is simply missing.
  CHECK(s_int.pearson < s_both.pearson - 0.15);
  const double n_both = std::inner_product(h.grad_plane(0).begin(), h.grad_plane(0).end(),
                                           h.grad_plane(0).begin(), 0.0);
  const double n_int = std::inner_product(hi.grad_plane(0).begin(), hi.grad_plane(0).end(),
                                          hi.grad_plane(0).begin(), 0.0);
  CHECK(n_int < 0.5 * n_both);
}

TEST_CASE("gradients of co-bound parameters add bit-for-bit") {
  // Two binding entries on separate parameters...
  SceneDesc split = testscenes::occluder_scene(10, 6, 48, 48);
  split.bindings.clear();
  Binding occ;
  occ.param = 0;
  occ.target = Binding::Target::Mesh;
  occ.target_index = 2;
  occ.kind = Binding::Kind::Translation;
  occ.axis = Vec3(1, 0, 0);
  split.bindings.push_back(occ);
  Binding lamp = occ;
  lamp.param = 1;
  lamp.target_index = 1;
  lamp.axis = Vec3(0.5, 0, 1);
  split.bindings.push_back(lamp);
  split.param_count = 2;

  // ...versus the same two entries fused onto one parameter.
  SceneDesc fused = split;
  fused.bindings[1].param = 0;
  fused.param_count = 1;

  const RenderOptions opt;  // single worker
  const Histogram a = render_scene(split, {0.0, 0.0}, opt);
  const Histogram b = render_scene(fused, {0.0}, opt);

  REQUIRE(a.plane_size() == b.plane_size());
  const auto a0 = a.grad_plane(0), a1 = a.grad_plane(1), f = b.grad_plane(0);
  for (size_t i = 0; i < f.size(); ++i) {
    const double sum = a0[i] + a1[i];
    CHECK(sum == f[i]);  // bitwise: same deposits, same order, same rounding
  }
  // Intensities are untouched by the binding layout.
  for (size_t i = 0; i < a.intensity.size(); ++i) CHECK(a.intensity[i] == b.intensity[i]);
}

TEST_CASE("frame tiling sums to one wide steady-state bin") {
  // 12 exposure-matched box frames against a single frame whose gate spans
  // the same window; with a flat kernel the two renders see identical path
  // weights, so per-pixel sums differ only by summation order.
  SceneDesc tiled = testscenes::occluder_scene(10, 12, 64, 64);
  const double e = tiled.frames.exposure, t0 = tiled.frames.start;
  tiled.emitters[0].profile = TemporalProfile::delta(0.0);  // keep the kernel flat
  tiled.sensor_profile = TemporalProfile::box(0.0, e, 1.0);

  SceneDesc wide = tiled;
  wide.sensor_profile = TemporalProfile::box(0.0, 12 * e, 1.0);
  wide.frames = {1, 12 * e, t0};

  RenderStats st_t, st_w;
  const Histogram ht = render_scene(tiled, {0.0}, RenderOptions{}, &st_t);
  const Histogram hw = render_scene(wide, {0.0}, RenderOptions{}, &st_w);

  // Flat kernels have zero slope everywhere, including the support edges.
  CHECK(st_t.temporal_term_abs == 0.0);
  CHECK(st_w.temporal_term_abs == 0.0);

  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 10; ++x) {
      double sum = 0.0, gsum = 0.0;
      for (int l = 0; l < 12; ++l) {
        sum += ht.at(y, x, l);
        gsum += ht.grad_at(0, y, x, l);
      }
      CHECK(sum == doctest::Approx(hw.at(y, x, 0)).epsilon(1e-9));
      CHECK(gsum == doctest::Approx(hw.grad_at(0, y, x, 0)).epsilon(1e-9).scale(1.0));
    }
}

TEST_CASE("renders are deterministic and worker-count stable") {
  const SceneDesc d = testscenes::occluder_scene(8, 4, 32, 32);

  RenderOptions one;
  const Histogram h1 = render_scene(d, {0.0}, one);
  const Histogram h2 = render_scene(d, {0.0}, one);
  CHECK(h1.intensity == h2.intensity);  // bit-identical replay
  CHECK(h1.grad == h2.grad);

  RenderOptions seeded = one;
  seeded.seed = 1234;
  const Histogram h3 = render_scene(d, {0.0}, seeded);
  bool differs = false;
  for (size_t i = 0; i < h3.intensity.size() && !differs; ++i)
    differs = h3.intensity[i] != h1.intensity[i];
  CHECK(differs);

  // Interior partitions by disjoint pixel rows: any worker count replays the
  // single-worker bits exactly.
  RenderOptions int_only;
  int_only.boundary = false;
  const Histogram i1 = render_scene(d, {0.0}, int_only);
  for (int t : {2, 3, 5}) {
    RenderOptions multi = int_only;
    multi.threads = t;
    const Histogram im = render_scene(d, {0.0}, multi);
    CHECK(im.intensity == i1.intensity);
    CHECK(im.grad == i1.grad);
  }

  // Boundary merging reorders sums across workers: equal to rounding only.
  for (int t : {2, 4}) {
    RenderOptions multi = one;
    multi.threads = t;
    const Histogram hm = render_scene(d, {0.0}, multi);
    for (size_t i = 0; i < hm.grad.size(); ++i)
      CHECK(hm.grad[i] ==
            doctest::Approx(h1.grad[i]).epsilon(1e-12).scale(std::abs(h1.grad[i]) + 1.0));
  }
}

TEST_CASE("sample-count edge cases") {
  const SceneDesc d = testscenes::occluder_scene(6, 4, 16, 16);

  RenderOptions none;
  none.spp_interior = 0;
  none.spp_boundary = 0;
  const Histogram h0 = render_scene(d, {0.0}, none);
  for (double v : h0.intensity) CHECK(v == 0.0);
  for (double v : h0.grad) CHECK(v == 0.0);

  // Boundary alone deposits only into gradients.
  RenderOptions bonly;
  bonly.interior = false;
  const Histogram hb = render_scene(d, {0.0}, bonly);
  for (double v : hb.intensity) CHECK(v == 0.0);
  double gnorm = 0.0;
  for (double v : hb.grad) gnorm += v * v;
  CHECK(gnorm > 0.0);
}
