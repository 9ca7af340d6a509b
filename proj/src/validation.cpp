#include "tgrd/validation.h"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "tgrd/rng.h"

namespace tgrd {
namespace {

// Distinct seed per batch, decorrelated from the base by hashing.
uint64_t batch_seed(uint64_t base, int b) { return mix64(base + 0x1000 + uint64_t(b)); }

BatchField summarize(std::vector<std::vector<double>> runs) {
  BatchField out;
  out.batches = static_cast<int>(runs.size());
  if (runs.empty()) return out;
  const size_t n = runs[0].size();
  out.mean.assign(n, 0.0);
  out.sem2.assign(n, 0.0);
  for (const auto& r : runs)
    for (size_t i = 0; i < n; ++i) out.mean[i] += r[i];
  const double inv_b = 1.0 / out.batches;
  for (size_t i = 0; i < n; ++i) out.mean[i] *= inv_b;
  if (out.batches < 2) return out;
  for (const auto& r : runs)
    for (size_t i = 0; i < n; ++i) {
      const double d = r[i] - out.mean[i];
      out.sem2[i] += d * d;
    }
  // Var of the mean: sample variance / B.
  const double k = 1.0 / (double(out.batches - 1) * out.batches);
  for (size_t i = 0; i < n; ++i) out.sem2[i] *= k;
  return out;
}

std::vector<double> fd_once(const SceneDesc& desc, const std::vector<double>& theta, int p,
                            double eps, const RenderOptions& opt) {
  if (p < 0 || p >= desc.param_count) throw std::runtime_error("fd: parameter out of range");
  std::vector<double> tp = theta, tm = theta;
  tp[p] += eps;
  tm[p] -= eps;
  const Histogram hp = render_scene(desc, tp, opt);
  const Histogram hm = render_scene(desc, tm, opt);
  std::vector<double> fd(hp.intensity.size());
  const double inv = 1.0 / (2.0 * eps);
  for (size_t i = 0; i < fd.size(); ++i) fd[i] = (hp.intensity[i] - hm.intensity[i]) * inv;
  return fd;
}

}  // namespace

std::vector<double> fd_intensity(const SceneDesc& desc, const std::vector<double>& theta,
                                 int p, double eps, const RenderOptions& opt) {
  return fd_once(desc, theta, p, eps, opt);
}

BatchField batched_gradient(const SceneDesc& desc, const std::vector<double>& theta,
                            int p, int batches, const RenderOptions& opt) {
  if (p < 0 || p >= desc.param_count)
    throw std::runtime_error("batched_gradient: parameter out of range");
  const uint64_t base = opt.seed >= 0 ? uint64_t(opt.seed) : desc.est.seed;
  std::vector<std::vector<double>> runs;
  runs.reserve(batches);
  for (int b = 0; b < batches; ++b) {
    RenderOptions o = opt;
    o.seed = static_cast<long long>(batch_seed(base, b) >> 1);
    const Histogram h = render_scene(desc, theta, o);
    auto plane = h.grad_plane(p);
    runs.emplace_back(plane.begin(), plane.end());
  }
  return summarize(std::move(runs));
}

BatchField batched_fd(const SceneDesc& desc, const std::vector<double>& theta, int p,
                      double eps, int batches, const RenderOptions& opt) {
  const uint64_t base = opt.seed >= 0 ? uint64_t(opt.seed) : desc.est.seed;
  std::vector<std::vector<double>> runs;
  runs.reserve(batches);
  for (int b = 0; b < batches; ++b) {
    RenderOptions o = opt;
    o.seed = static_cast<long long>(batch_seed(base, b) >> 1);
    runs.push_back(fd_once(desc, theta, p, eps, o));
  }
  return summarize(std::move(runs));
}

BatchField batched_intensity(const SceneDesc& desc, const std::vector<double>& theta,
                             int batches, const RenderOptions& opt) {
  const uint64_t base = opt.seed >= 0 ? uint64_t(opt.seed) : desc.est.seed;
  std::vector<std::vector<double>> runs;
  runs.reserve(batches);
  for (int b = 0; b < batches; ++b) {
    RenderOptions o = opt;
    o.seed = static_cast<long long>(batch_seed(base, b) >> 1);
    runs.push_back(render_scene(desc, theta, o).intensity);
  }
  return summarize(std::move(runs));
}

namespace {

FrameStats compare_indices(std::span<const double> a, std::span<const double> b,
                           std::span<const double> sem2a, std::span<const double> sem2b,
                           size_t begin, size_t end, size_t stride, int frame) {
  FrameStats st;
  st.frame = frame;
  double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0, sd2 = 0, spred2 = 0, sb2 = 0;
  int n = 0;
  for (size_t i = begin; i < end; i += stride) {
    const double x = a[i], y = b[i];
    sa += x;
    sb += y;
    saa += x * x;
    sbb += y * y;
    sab += x * y;
    const double d = x - y;
    sd2 += d * d;
    st.max_abs = std::max(st.max_abs, std::abs(d));
    if (!sem2a.empty()) spred2 += sem2a[i];
    if (!sem2b.empty()) spred2 += sem2b[i];
    sb2 += y * y;
    ++n;
  }
  st.n = n;
  if (n == 0) return st;
  st.rmse = std::sqrt(sd2 / n);
  st.rmse_pred = std::sqrt(spred2 / n);
  st.ref_rms = std::sqrt(sb2 / n);
  const double cov = sab - sa * sb / n;
  const double va = saa - sa * sa / n;
  const double vb = sbb - sb * sb / n;
  st.pearson = (va > 0 && vb > 0) ? cov / std::sqrt(va * vb) : 0.0;
  return st;
}

}  // namespace

FrameStats compare_frame(std::span<const double> a, std::span<const double> b,
                         std::span<const double> sem2a, std::span<const double> sem2b,
                         int height, int width, int frames, int l) {
  if (a.size() != b.size() || a.size() != size_t(height) * width * frames)
    throw std::runtime_error("compare_frame: size mismatch");
  return compare_indices(a, b, sem2a, sem2b, size_t(l), a.size(), size_t(frames), l);
}

FrameStats compare_all(std::span<const double> a, std::span<const double> b,
                       std::span<const double> sem2a, std::span<const double> sem2b) {
  if (a.size() != b.size()) throw std::runtime_error("compare_all: size mismatch");
  return compare_indices(a, b, sem2a, sem2b, 0, a.size(), 1, -1);
}

void write_frame_stats_csv(const std::string& path, const std::vector<FrameStats>& stats) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  std::fprintf(f, "frame,pearson,rmse,rmse_pred,max_abs,ref_rms,n\n");
  for (const FrameStats& s : stats)
    std::fprintf(f, "%d,%.9g,%.9g,%.9g,%.9g,%.9g,%d\n", s.frame, s.pearson, s.rmse,
                 s.rmse_pred, s.max_abs, s.ref_rms, s.n);
  std::fclose(f);
}

}  // namespace tgrd
