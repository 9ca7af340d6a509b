// Command-line front end: render / fd / compare / optimize / info.
// Exit codes: 0 success, 2 usage, 3 bad input (scene or histogram files),
// 4 internal failure.
#include <CLI11.hpp>

#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "tgrd/estimators.h"
#include "tgrd/optimizer.h"
#include "tgrd/scene_io.h"
#include "tgrd/validation.h"

namespace {

using namespace tgrd;

struct RenderArgs {
  std::string scene;
  std::vector<double> theta;
  RenderOptions opt;
  bool no_interior = false, no_boundary = false;
};

void add_render_args(CLI::App* c, RenderArgs& a) {
  c->add_option("--scene", a.scene, "scene description (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  c->add_option("--theta", a.theta, "parameter values (default: all zero)");
  c->add_option("--spp-interior", a.opt.spp_interior, "interior samples per pixel");
  c->add_option("--spp-boundary", a.opt.spp_boundary, "boundary samples per pixel");
  c->add_option("--seed", a.opt.seed, "RNG seed (default: scene's)");
  c->add_option("--threads", a.opt.threads, "worker count (default: TGRD_THREADS or 1)");
  c->add_flag("--no-interior", a.no_interior, "skip the interior estimator");
  c->add_flag("--no-boundary", a.no_boundary, "skip the boundary estimator");
}

std::vector<double> resolve_theta(const SceneDesc& d, std::vector<double> theta) {
  if (theta.empty()) theta.assign(d.param_count, 0.0);
  if (static_cast<int>(theta.size()) != d.param_count)
    throw std::runtime_error("--theta needs exactly " + std::to_string(d.param_count) +
                             " values for this scene");
  return theta;
}

RenderOptions finish_options(const RenderArgs& a) {
  RenderOptions o = a.opt;
  o.interior = !a.no_interior;
  o.boundary = !a.no_boundary;
  return o;
}

void print_stats(const Histogram& h, const RenderStats& st) {
  std::printf("%dx%d pixels, %d frames, %d parameter planes\n", h.width, h.height, h.frames,
              h.nparams);
  std::printf("frame window: start %g, exposure %g (c = %g)\n", h.t0, h.dt, h.c);
  std::printf("render time: %.2f s\n", st.seconds);
  std::printf("boundary samples kept: %" PRIu64 " / %" PRIu64 "\n", st.boundary_kept,
              st.boundary_tried);
  std::printf("non-finite deposits dropped: %" PRIu64 "\n", st.nonfinite);
  std::printf("temporal kernel-slope mass: %g\n", st.temporal_term_abs);
}

int cmd_render(const RenderArgs& a, const std::string& out, const std::string& csv,
               const std::string& png_dir, int png_plane) {
  const SceneDesc desc = load_scene(a.scene);
  const std::vector<double> theta = resolve_theta(desc, a.theta);
  RenderStats st;
  const Histogram h = render_scene(desc, theta, finish_options(a), &st);
  print_stats(h, st);
  if (!out.empty()) write_tgrd(out, h);
  if (!csv.empty()) write_csv(csv, h);
  if (!png_dir.empty()) write_frame_pngs(png_dir, "frame", h, png_plane);
  return 0;
}

int cmd_fd(const RenderArgs& a, int param, double eps, const std::string& out,
           const std::string& csv) {
  const SceneDesc desc = load_scene(a.scene);
  const std::vector<double> theta = resolve_theta(desc, a.theta);
  const RenderOptions opt = finish_options(a);
  const std::vector<double> fd = fd_intensity(desc, theta, param, eps, opt);
  const Histogram center = render_scene(desc, theta, opt);

  Histogram h(center.height, center.width, center.frames, 1);
  h.t0 = center.t0;
  h.dt = center.dt;
  h.c = center.c;
  h.intensity = center.intensity;
  std::copy(fd.begin(), fd.end(), h.grad.begin());

  const FrameStats s = compare_all(center.grad_plane(param), fd, {}, {});
  std::printf("analytic vs fd (parameter %d, eps %g): pearson %.6f, rmse %.6g, max %.6g\n",
              param, eps, s.pearson, s.rmse, s.max_abs);
  if (!out.empty()) write_tgrd(out, h);
  if (!csv.empty()) write_csv(csv, h);
  return 0;
}

std::span<const double> pick_plane(const Histogram& h, int plane, const std::string& which) {
  if (plane < 0) return h.intensity;
  if (plane >= h.nparams)
    throw std::runtime_error(which + ": plane " + std::to_string(plane) + " out of range (" +
                             std::to_string(h.nparams) + " planes)");
  return h.grad_plane(plane);
}

int cmd_compare(const std::string& fa, const std::string& fb, int plane_a, int plane_b,
                const std::string& per_frame_csv) {
  const Histogram a = read_tgrd(fa);
  const Histogram b = read_tgrd(fb);
  if (a.height != b.height || a.width != b.width || a.frames != b.frames)
    throw std::runtime_error("compare: histogram dimensions differ");
  const auto pa = pick_plane(a, plane_a, fa);
  const auto pb = pick_plane(b, plane_b, fb);
  const FrameStats all = compare_all(pa, pb, {}, {});
  std::printf("pearson %.6f, rmse %.6g, max |diff| %.6g over %d bins\n", all.pearson, all.rmse,
              all.max_abs, all.n);
  if (!per_frame_csv.empty()) {
    std::vector<FrameStats> rows;
    for (int l = 0; l < a.frames; ++l)
      rows.push_back(compare_frame(pa, pb, {}, {}, a.height, a.width, a.frames, l));
    write_frame_stats_csv(per_frame_csv, rows);
  }
  return 0;
}

int cmd_optimize(const RenderArgs& a, const std::string& target_file, int iters, double lr,
                 const std::string& trace, const std::string& checkpoint,
                 std::vector<double> lower, std::vector<double> upper) {
  const SceneDesc desc = load_scene(a.scene);
  const std::vector<double> theta0 = resolve_theta(desc, a.theta);
  const Histogram target = read_tgrd(target_file);

  AdamConfig cfg;
  cfg.lr = lr;
  cfg.iterations = iters;
  cfg.trace_csv = trace;
  cfg.checkpoint = checkpoint;
  cfg.lower = std::move(lower);
  cfg.upper = std::move(upper);
  cfg.render = finish_options(a);
  cfg.on_iteration = [](int it, double loss, const std::vector<double>& th) {
    std::printf("iter %3d  loss %.6g  theta", it, loss);
    for (double t : th) std::printf(" %.6g", t);
    std::printf("\n");
    std::fflush(stdout);
  };

  const FitResult res = adam_fit(desc, target, theta0, cfg);
  if (res.aborted) {
    std::fprintf(stderr, "aborted: %s\n", res.abort_reason.c_str());
    return 4;
  }
  std::printf("final theta:");
  for (double t : res.state.theta) std::printf(" %.9g", t);
  std::printf("\n");
  if (!res.loss_history.empty())
    std::printf("loss: %.6g -> %.6g over %zu iterations\n", res.loss_history.front(),
                res.loss_history.back(), res.loss_history.size());
  return 0;
}

int cmd_info(const std::string& file) {
  const Histogram h = read_tgrd(file);
  std::printf("%dx%d pixels, %d frames, %d parameter planes\n", h.width, h.height, h.frames,
              h.nparams);
  std::printf("frame window: start %g, exposure %g, light speed %g\n", h.t0, h.dt, h.c);
  auto summary = [](const char* name, std::span<const double> p) {
    double lo = 0, hi = 0, sum = 0;
    if (!p.empty()) {
      lo = hi = p[0];
      for (double v : p) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        sum += v;
      }
    }
    std::printf("%s: min %.6g, max %.6g, sum %.6g\n", name, lo, hi, sum);
  };
  summary("intensity", h.intensity);
  for (int p = 0; p < h.nparams; ++p)
    summary(("grad[" + std::to_string(p) + "]").c_str(), h.grad_plane(p));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"transient renderer with analytic parameter gradients"};
  app.require_subcommand(1);

  int default_threads = 1;
  if (const char* s = std::getenv("TGRD_THREADS"))
    default_threads = std::max(1, std::atoi(s));

  RenderArgs render_a;
  std::string render_out, render_csv, render_png;
  int render_png_plane = -1;
  CLI::App* render = app.add_subcommand("render", "render a transient histogram");
  add_render_args(render, render_a);
  render->add_option("--out", render_out, "output histogram (TGRD)");
  render->add_option("--csv", render_csv, "also dump bins as CSV");
  render->add_option("--png-dir", render_png, "export per-frame PNGs into this directory");
  render->add_option("--png-plane", render_png_plane,
                     "-1 = intensity, p = gradient plane p (with --png-dir)");

  RenderArgs fd_a;
  int fd_param = 0;
  double fd_eps = 0.01;
  std::string fd_out, fd_csv;
  CLI::App* fd = app.add_subcommand(
      "fd", "central-finite-difference gradient (common random numbers)");
  add_render_args(fd, fd_a);
  fd->add_option("--param", fd_param, "parameter index")->required();
  fd->add_option("--eps", fd_eps, "step size (default 0.01)");
  fd->add_option("--out", fd_out, "output TGRD (intensity + one FD plane)");
  fd->add_option("--csv", fd_csv, "also dump bins as CSV");

  std::string cmp_a, cmp_b, cmp_csv;
  int cmp_plane_a = -1, cmp_plane_b = -1;
  CLI::App* compare = app.add_subcommand("compare", "compare two histogram files");
  compare->add_option("file_a", cmp_a)->required()->check(CLI::ExistingFile);
  compare->add_option("file_b", cmp_b)->required()->check(CLI::ExistingFile);
  compare->add_option("--plane-a", cmp_plane_a, "-1 = intensity, p = gradient plane p");
  compare->add_option("--plane-b", cmp_plane_b, "-1 = intensity, p = gradient plane p");
  compare->add_option("--per-frame", cmp_csv, "write per-frame stats to this CSV");

  RenderArgs opt_a;
  std::string opt_target, opt_trace, opt_checkpoint;
  int opt_iters = 60;
  double opt_lr = 0.07;
  std::vector<double> opt_lower, opt_upper;
  CLI::App* optimize =
      app.add_subcommand("optimize", "fit scene parameters to a target histogram (Adam)");
  add_render_args(optimize, opt_a);
  optimize->add_option("--target", opt_target, "target histogram (TGRD)")
      ->required()
      ->check(CLI::ExistingFile);
  optimize->add_option("--iters", opt_iters, "iteration budget (default 60)");
  optimize->add_option("--lr", opt_lr, "learning rate (default 0.07)");
  optimize->add_option("--trace", opt_trace, "per-iteration CSV log");
  optimize->add_option("--checkpoint", opt_checkpoint,
                       "state file; resumes from it when it exists");
  optimize->add_option("--lower", opt_lower, "per-parameter lower bounds");
  optimize->add_option("--upper", opt_upper, "per-parameter upper bounds");

  std::string info_file;
  CLI::App* info = app.add_subcommand("info", "print a histogram file's header and ranges");
  info->add_option("file", info_file)->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  render_a.opt.threads = render_a.opt.threads == 1 ? default_threads : render_a.opt.threads;
  fd_a.opt.threads = fd_a.opt.threads == 1 ? default_threads : fd_a.opt.threads;
  opt_a.opt.threads = opt_a.opt.threads == 1 ? default_threads : opt_a.opt.threads;

  try {
    if (render->parsed())
      return cmd_render(render_a, render_out, render_csv, render_png, render_png_plane);
    if (fd->parsed()) return cmd_fd(fd_a, fd_param, fd_eps, fd_out, fd_csv);
    if (compare->parsed())
      return cmd_compare(cmp_a, cmp_b, cmp_plane_a, cmp_plane_b, cmp_csv);
    if (optimize->parsed())
      return cmd_optimize(opt_a, opt_target, opt_iters, opt_lr, opt_trace, opt_checkpoint,
                          opt_lower, opt_upper);
    if (info->parsed()) return cmd_info(info_file);
  } catch (const std::runtime_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 4;
  }
  return 0;
}
