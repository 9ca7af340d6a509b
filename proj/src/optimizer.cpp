#include "tgrd/optimizer.h"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "tgrd/rng.h"

namespace tgrd {

double rmse_loss(const Histogram& got, const Histogram& target) {
  if (got.intensity.size() != target.intensity.size())
    throw std::runtime_error("rmse_loss: histogram shapes differ");
  double s = 0.0;
  for (size_t i = 0; i < got.intensity.size(); ++i) {
    const double d = got.intensity[i] - target.intensity[i];
    s += d * d;
  }
  return std::sqrt(s / got.intensity.size());
}

std::vector<double> rmse_loss_grad(const Histogram& got, const Histogram& target) {
  const double loss = rmse_loss(got, target);
  const size_t n = got.intensity.size();
  std::vector<double> g(got.nparams, 0.0);
  if (loss <= 0.0) return g;
  const double k = 1.0 / (double(n) * loss);
  for (int p = 0; p < got.nparams; ++p) {
    auto plane = got.grad_plane(p);
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) s += (got.intensity[i] - target.intensity[i]) * plane[i];
    g[p] = k * s;
  }
  return g;
}

void save_state(const std::string& path, const AdamState& s) {
  nlohmann::json j;
  j["iter"] = s.iter;
  j["theta"] = s.theta;
  j["m"] = s.m;
  j["v"] = s.v;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << j.dump(2) << "\n";
}

AdamState load_state(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open state file: " + path);
  nlohmann::json j = nlohmann::json::parse(in);
  AdamState s;
  s.iter = j.at("iter").get<int>();
  s.theta = j.at("theta").get<std::vector<double>>();
  s.m = j.at("m").get<std::vector<double>>();
  s.v = j.at("v").get<std::vector<double>>();
  if (s.m.size() != s.theta.size() || s.v.size() != s.theta.size())
    throw std::runtime_error(path + ": inconsistent state vectors");
  return s;
}

FitResult adam_fit(const SceneDesc& desc, const Histogram& target,
                   const std::vector<double>& theta0, const AdamConfig& cfg) {
  if (static_cast<int>(theta0.size()) != desc.param_count)
    throw std::runtime_error("adam_fit: theta0 size does not match the scene's parameters");
  const size_t np = theta0.size();
  if (!cfg.lower.empty() && cfg.lower.size() != np)
    throw std::runtime_error("adam_fit: lower bound size mismatch");
  if (!cfg.upper.empty() && cfg.upper.size() != np)
    throw std::runtime_error("adam_fit: upper bound size mismatch");

  FitResult res;
  AdamState& st = res.state;
  st.theta = theta0;
  st.m.assign(np, 0.0);
  st.v.assign(np, 0.0);
  if (!cfg.checkpoint.empty() && std::filesystem::exists(cfg.checkpoint)) {
    st = load_state(cfg.checkpoint);
    if (st.theta.size() != np)
      throw std::runtime_error("adam_fit: checkpoint parameter count mismatch");
  }

  std::FILE* trace = nullptr;
  if (!cfg.trace_csv.empty()) {
    const bool fresh = !std::filesystem::exists(cfg.trace_csv) || st.iter == 0;
    trace = std::fopen(cfg.trace_csv.c_str(), fresh ? "w" : "a");
    if (!trace) throw std::runtime_error("cannot open for writing: " + cfg.trace_csv);
    if (fresh) {
      std::fprintf(trace, "iter,loss");
      for (size_t p = 0; p < np; ++p) std::fprintf(trace, ",theta%zu", p);
      for (size_t p = 0; p < np; ++p) std::fprintf(trace, ",grad%zu", p);
      std::fprintf(trace, "\n");
    }
  }

  const uint64_t base =
      cfg.render.seed >= 0 ? uint64_t(cfg.render.seed) : desc.est.seed;

  while (st.iter < cfg.iterations && !res.aborted) {
    RenderOptions opt = cfg.render;
    opt.seed = static_cast<long long>(mix64(base + 0x5EED0000u + uint64_t(st.iter)) >> 1);
    const Histogram h = render_scene(desc, st.theta, opt);
    const double loss = rmse_loss(h, target);
    const std::vector<double> grad = rmse_loss_grad(h, target);

    bool finite = std::isfinite(loss);
    for (double g : grad) finite = finite && std::isfinite(g);
    if (!finite) {
      res.aborted = true;
      res.abort_reason = "non-finite loss or gradient at iteration " +
                         std::to_string(st.iter) + " (theta unchanged)";
      break;
    }

    const int t = st.iter + 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.beta2, t);
    for (size_t p = 0; p < np; ++p) {
      st.m[p] = cfg.beta1 * st.m[p] + (1.0 - cfg.beta1) * grad[p];
      st.v[p] = cfg.beta2 * st.v[p] + (1.0 - cfg.beta2) * grad[p] * grad[p];
      const double step = cfg.lr * (st.m[p] / bc1) / (std::sqrt(st.v[p] / bc2) + cfg.eps);
      st.theta[p] -= step;
      if (!cfg.lower.empty()) st.theta[p] = std::max(st.theta[p], cfg.lower[p]);
      if (!cfg.upper.empty()) st.theta[p] = std::min(st.theta[p], cfg.upper[p]);
    }

    if (trace) {
      std::fprintf(trace, "%d,%.9g", st.iter, loss);
      for (size_t p = 0; p < np; ++p) std::fprintf(trace, ",%.9g", st.theta[p]);
      for (size_t p = 0; p < np; ++p) std::fprintf(trace, ",%.9g", grad[p]);
      std::fprintf(trace, "\n");
      std::fflush(trace);
    }

    res.loss_history.push_back(loss);
    ++st.iter;
    if (!cfg.checkpoint.empty()) save_state(cfg.checkpoint, st);
    if (cfg.on_iteration) cfg.on_iteration(st.iter, loss, st.theta);
  }

  if (trace) std::fclose(trace);
  return res;
}

}  // namespace tgrd
