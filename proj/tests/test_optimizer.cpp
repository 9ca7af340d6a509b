#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "test_scenes.h"
#include "tgrd/optimizer.h"

using namespace tgrd;

namespace {

std::filesystem::path tmp(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

// 1-parameter fitting problem: the lamp slides along x, the target sits at a
// known offset. Small and fast; every iteration renders the scene once. The
// default spp suits the mechanics tests; convergence needs enough samples
// that the loss floor (fresh seed vs target seed) sits well under the
// starting loss.
struct ToyProblem {
  SceneDesc desc;
  Histogram target;
  double truth = 0.15;

  explicit ToyProblem(int spp = 32) : desc(testscenes::smooth_one_bounce(8, 4, spp)) {
    RenderOptions opt;
    opt.seed = 4242;
    target = render_scene(desc, {truth}, opt);
  }
};

}  // namespace

TEST_CASE("rmse loss and its gradient through the parameter planes") {
  Histogram got(1, 1, 4, 1), target(1, 1, 4, 1);
  got.intensity = {1, 2, 3, 4};
  target.intensity = {0, 0, 0, 0};
  got.grad = {1, 1, 1, 1};

  const double loss = rmse_loss(got, target);
  CHECK(loss == doctest::Approx(std::sqrt(30.0 / 4.0)));
  const auto g = rmse_loss_grad(got, target);
  REQUIRE(g.size() == 1);
  CHECK(g[0] == doctest::Approx(10.0 / (4.0 * loss)));

  // Zero loss has a well-defined zero gradient.
  const auto g0 = rmse_loss_grad(got, got);
  CHECK(g0[0] == 0.0);

  Histogram other(1, 1, 3, 1);
  CHECK_THROWS_AS(rmse_loss(got, other), std::runtime_error);
}

TEST_CASE("state files round-trip") {
  AdamState s;
  s.iter = 12;
  s.theta = {0.5, -1.25};
  s.m = {0.1, 0.2};
  s.v = {0.01, 0.02};
  const auto path = tmp("tgrd_state.json").string();
  save_state(path, s);
  const AdamState r = load_state(path);
  CHECK(r.iter == 12);
  CHECK(r.theta == s.theta);
  CHECK(r.m == s.m);
  CHECK(r.v == s.v);
  CHECK_THROWS_AS(load_state("/nonexistent/state.json"), std::runtime_error);
}

TEST_CASE("zero learning rate leaves parameters untouched") {
  const ToyProblem p;
  AdamConfig cfg;
  cfg.lr = 0.0;
  cfg.iterations = 3;
  const FitResult r = adam_fit(p.desc, p.target, {0.4}, cfg);
  CHECK_FALSE(r.aborted);
  CHECK(r.state.iter == 3);
  CHECK(r.state.theta[0] == 0.4);
  CHECK(r.loss_history.size() == 3);
}

TEST_CASE("bounds clamp every step") {
  const ToyProblem p;
  AdamConfig cfg;
  cfg.iterations = 5;
  cfg.lower = {0.0};
  cfg.upper = {0.05};
  const FitResult r = adam_fit(p.desc, p.target, {0.0}, cfg);
  CHECK(r.state.theta[0] >= 0.0);
  CHECK(r.state.theta[0] <= 0.05);
}

TEST_CASE("checkpoints resume the iteration count") {
  const ToyProblem p;
  const auto ckpt = tmp("tgrd_ckpt.json").string();
  const auto trace = tmp("tgrd_trace.csv").string();
  std::filesystem::remove(ckpt);
  std::filesystem::remove(trace);

  AdamConfig cfg;
  cfg.iterations = 3;
  cfg.checkpoint = ckpt;
  cfg.trace_csv = trace;
  const FitResult r1 = adam_fit(p.desc, p.target, {0.0}, cfg);
  CHECK(r1.state.iter == 3);
  CHECK(r1.loss_history.size() == 3);

  cfg.iterations = 7;
  const FitResult r2 = adam_fit(p.desc, p.target, {0.0}, cfg);
  CHECK(r2.state.iter == 7);
  CHECK(r2.loss_history.size() == 4);  // only the new iterations ran

  // Trace accumulated all seven data rows behind one header.
  std::ifstream in(trace);
  std::string line;
  int rows = 0;
  bool header_again = false;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.find("iter,loss") != std::string::npos) header_again = true;
    if (!line.empty()) ++rows;
  }
  CHECK(rows == 7);
  CHECK_FALSE(header_again);

  // A fresh run (no checkpoint on disk) restarts at zero.
  std::filesystem::remove(ckpt);
  const FitResult r3 = adam_fit(p.desc, p.target, {0.0}, cfg);
  CHECK(r3.loss_history.size() == 7);
}

TEST_CASE("non-finite targets abort instead of stepping") {
  const ToyProblem p;
  Histogram bad = p.target;
  bad.intensity[0] = std::nan("");
  AdamConfig cfg;
  cfg.iterations = 5;
  const FitResult r = adam_fit(p.desc, bad, {0.3}, cfg);
  CHECK(r.aborted);
  CHECK_FALSE(r.abort_reason.empty());
  CHECK(r.state.theta[0] == 0.3);
  CHECK(r.loss_history.empty());
}

TEST_CASE("the toy problem converges to the planted offset") {
  const ToyProblem p(512);
  AdamConfig cfg;
  cfg.iterations = 45;
  cfg.lr = 0.07;
  const FitResult r = adam_fit(p.desc, p.target, {0.0}, cfg);
  CHECK_FALSE(r.aborted);
  CHECK(std::abs(r.state.theta[0] - p.truth) < 0.06);
  CHECK(r.loss_history.back() < 0.5 * r.loss_history.front());
}
