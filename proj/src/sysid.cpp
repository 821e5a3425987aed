// Copyright 2026 The softcrowd Authors
// SPDX-License-Identifier: Apache-2.0

#include "softcrowd/sysid.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "softcrowd/control.hpp"

namespace softcrowd::sysid {

namespace {

CrowdConfig model_config(const Trajectory& traj, double state_bound) {
  if (traj.horizon() == 0) throw Error("empty horizon");
  const CrowdState& s0 = traj.states.front();
  std::vector<double> x0;
  double largest = 0.0;
  for (std::size_t i = 0; i < s0.size(); ++i) {
    if (!s0.is_active(i)) continue;
    x0.push_back(s0.x[i]);
  }
  for (const auto& s : traj.states)
    for (double v : s.x) largest = std::max(largest, std::abs(v));
  if (x0.empty()) throw Error("empty population");
  CrowdConfig c;
  c.n = x0.size();
  c.gains = {0.5};
  c.noise_sigma = 0.0;
  c.state_bound = std::max(state_bound, largest);
  c.init = ExplicitInit{std::move(x0)};
  return c;
}

constexpr double kMinGain = 1e-3;
constexpr double kMaxGain = 0.999;

}  // namespace

json result_to_json(const SysIdResult& r) {
  json j{{"gain_hat", r.gain_hat},
         {"sigma_hat", r.sigma_hat},
         {"r2", r.r2},
         {"method", r.method == Method::regression ? "regression" : "mc_refined"},
         {"replicates", r.replicates},
         {"seed", r.seed},
         {"objective", r.objective},
         {"converged", r.converged}};
  if (r.beta_hat) j["beta_hat"] = *r.beta_hat;
  if (r.c_hat) j["c_hat"] = *r.c_hat;
  return j;
}

double r_squared(std::span<const double> observed, std::span<const double> fitted) {
  if (observed.size() != fitted.size()) throw Error("series length mismatch");
  if (observed.size() < 2) throw Error("need at least 2 points");
  const double mean =
      std::accumulate(observed.begin(), observed.end(), 0.0) / static_cast<double>(observed.size());
  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (std::size_t k = 0; k < observed.size(); ++k) {
    ss_res += (observed[k] - fitted[k]) * (observed[k] - fitted[k]);
    ss_tot += (observed[k] - mean) * (observed[k] - mean);
  }
  if (ss_tot == 0.0) throw Error("zero variance");
  return 1.0 - ss_res / ss_tot;
}

SysIdResult estimate_open_loop(const Trajectory& traj) {
  const auto& mse = traj.mse;
  if (mse.size() < 3) throw Error("need at least 3 MSE points");
  const std::size_t k = mse.size() - 1;
  const std::span<const double> x(mse.data(), k);
  const std::span<const double> y(mse.data() + 1, k);
  const auto kd = static_cast<double>(k);
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / kd;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / kd;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw Error("zero variance");
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  if (!(slope > 0.0) || !(slope < 1.0)) throw Error("non-contractive fit");

  SysIdResult r;
  r.gain_hat = std::sqrt(slope);
  r.sigma_hat = std::sqrt(std::max(intercept, 0.0));
  r.method = Method::regression;
  std::vector<double> fitted(k);
  for (std::size_t i = 0; i < k; ++i) fitted[i] = intercept + slope * x[i];
  double ss = 0.0;
  for (std::size_t i = 0; i < k; ++i) ss += (y[i] - fitted[i]) * (y[i] - fitted[i]);
  r.objective = ss / kd;
  r.r2 = r_squared(y, fitted);
  return r;
}

SeriesModel::SeriesModel(const Trajectory& traj, const McFitOptions& opts)
    : base_(model_config(traj, 500.0)),
      observed_(traj.mse),
      bank_(base_, traj.horizon(), opts.replicates, opts.seed, opts.exec),
      exec_(opts.exec) {}

std::vector<double> SeriesModel::mean_mse(double gain, double sigma,
                                          const InfluencePolicy& policy) const {
  CrowdConfig c = base_;
  c.gains = {gain};
  c.noise_sigma = sigma;
  const std::vector<InfluencePolicy> ps{policy};
  return mc::evaluate(bank_, c, ps, true, exec_).mean_mse.front();
}

double SeriesModel::objective(double gain, double sigma, const InfluencePolicy& policy) const {
  const auto sim = mean_mse(gain, sigma, policy);
  double ss = 0.0;
  for (std::size_t t = 0; t < sim.size(); ++t) ss += (sim[t] - observed_[t]) * (sim[t] - observed_[t]);
  return ss / static_cast<double>(sim.size());
}

SysIdResult refine_mc(const Trajectory& traj, const SysIdResult& initial, const McFitOptions& opts) {
  const SeriesModel model(traj, opts);
  const double scale = std::sqrt(std::max(traj.mse.front(), 1e-12));

  using Point = std::array<double, 2>;  // gain, sigma
  const auto project = [](Point p) {
    return Point{std::clamp(p[0], kMinGain, kMaxGain), std::abs(p[1])};
  };
  std::size_t evals = 0;
  const auto f = [&](const Point& p) {
    ++evals;
    return model.objective(p[0], p[1], policy::Off{});
  };

  const Point start = project({initial.gain_hat, initial.sigma_hat});
  std::array<Point, 3> simplex{
      start,
      project({start[0] + (start[0] > 0.9 ? -0.05 : 0.05), start[1]}),
      project({start[0], start[1] * 1.25 + 0.05 * scale}),
  };
  std::array<double, 3> fv{};
  for (std::size_t i = 0; i < 3; ++i) fv[i] = f(simplex[i]);

  bool converged = false;
  while (evals < opts.max_evaluations) {
    std::array<std::size_t, 3> idx{0, 1, 2};
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    const std::array<Point, 3> sp{simplex[idx[0]], simplex[idx[1]], simplex[idx[2]]};
    const std::array<double, 3> sf{fv[idx[0]], fv[idx[1]], fv[idx[2]]};
    simplex = sp;
    fv = sf;

    const double size = std::max({std::abs(simplex[1][0] - simplex[0][0]),
                                  std::abs(simplex[2][0] - simplex[0][0]),
                                  std::abs(simplex[1][1] - simplex[0][1]) / scale,
                                  std::abs(simplex[2][1] - simplex[0][1]) / scale});
    if (size < 1e-6 || fv[2] - fv[0] <= 1e-12 * (std::abs(fv[0]) + 1e-300)) {
      converged = true;
      break;
    }

    const Point centroid{(simplex[0][0] + simplex[1][0]) / 2, (simplex[0][1] + simplex[1][1]) / 2};
    const auto along = [&](double t) {
      return project({centroid[0] + t * (simplex[2][0] - centroid[0]),
                      centroid[1] + t * (simplex[2][1] - centroid[1])});
    };
    const Point reflected = along(-1.0);
    const double fr = f(reflected);
    if (fr < fv[0]) {
      const Point expanded = along(-2.0);
      const double fe = f(expanded);
      if (fe < fr) {
        simplex[2] = expanded;
        fv[2] = fe;
      } else {
        simplex[2] = reflected;
        fv[2] = fr;
      }
    } else if (fr < fv[1]) {
      simplex[2] = reflected;
      fv[2] = fr;
    } else {
      const bool outside = fr < fv[2];
      const Point contracted = along(outside ? -0.5 : 0.5);
      const double fc = f(contracted);
      if (fc < (outside ? fr : fv[2])) {
        simplex[2] = contracted;
        fv[2] = fc;
      } else {
        for (std::size_t i = 1; i < 3; ++i) {
          simplex[i] = project({(simplex[i][0] + simplex[0][0]) / 2,
                                (simplex[i][1] + simplex[0][1]) / 2});
          fv[i] = f(simplex[i]);
        }
      }
    }
  }
  const std::size_t best =
      static_cast<std::size_t>(std::min_element(fv.begin(), fv.end()) - fv.begin());

  SysIdResult r = initial;
  r.gain_hat = simplex[best][0];
  r.sigma_hat = simplex[best][1];
  r.objective = fv[best];
  r.method = Method::mc_refined;
  r.replicates = opts.replicates;
  r.seed = opts.seed;
  r.converged = converged;
  r.r2 = r_squared(model.observed(), model.mean_mse(r.gain_hat, r.sigma_hat, policy::Off{}));
  return r;
}

SysIdResult estimate_beta(const Trajectory& traj_soft, const SysIdResult& open_params,
                          const McFitOptions& opts) {
  const SeriesModel model(traj_soft, opts);
  const double g = open_params.gain_hat;
  const double s = open_params.sigma_hat;
  const auto best = control::minimize_1d(
      [&](double b) { return model.objective(g, s, policy::Constant{b}); }, 0.0, 0.99, 0.01,
      control::kRefineTol);

  SysIdResult r = open_params;
  r.beta_hat = best.x;
  r.objective = best.value;
  r.method = Method::mc_refined;
  r.replicates = opts.replicates;
  r.seed = opts.seed;
  r.converged = true;
  r.r2 = r_squared(model.observed(), model.mean_mse(g, s, policy::Constant{best.x}));
  return r;
}

std::vector<InfluenceSample> infer_influence(const Trajectory& traj, double gain, double d_min) {
  std::vector<InfluenceSample> out;
  for (std::size_t t = 0; t + 1 < traj.horizon(); ++t) {
    const CrowdState& cur = traj.states[t];
    const CrowdState& nxt = traj.states[t + 1];
    const double u = population_feedback(cur);
    for (std::size_t i = 0; i < cur.size(); ++i) {
      if (!cur.is_active(i) || !nxt.is_active(i)) continue;
      const double own = gain * cur.x[i];
      const double gap = u - own;
      if (std::abs(gap) <= d_min) continue;
      out.push_back({std::abs(gap), (nxt.x[i] - own) / gap});
    }
  }
  return out;
}

SysIdResult estimate_beta_profile(const Trajectory& traj_soft, const SysIdResult& open_params,
                                  const ProfileOptions& opts) {
  if (opts.bins == 0) throw Error("bins must be positive");
  auto samples = infer_influence(traj_soft, open_params.gain_hat, opts.d_min);
  if (samples.size() < opts.min_observations || samples.size() < opts.bins)
    throw Error("insufficient excitation");
  std::sort(samples.begin(), samples.end(),
            [](const InfluenceSample& a, const InfluenceSample& b) { return a.distance < b.distance; });

  std::vector<double> bin_d;
  std::vector<double> bin_beta;
  const std::size_t total = samples.size();
  for (std::size_t b = 0; b < opts.bins; ++b) {
    const std::size_t lo = b * total / opts.bins;
    const std::size_t hi = (b + 1) * total / opts.bins;
    double sd = 0.0;
    double sb = 0.0;
    for (std::size_t k = lo; k < hi; ++k) {
      sd += samples[k].distance;
      sb += std::clamp(samples[k].beta, 0.0, 1.0);
    }
    const auto cnt = static_cast<double>(hi - lo);
    const double mean_beta = sb / cnt;
    if (mean_beta > 0.0) {
      bin_d.push_back(sd / cnt);
      bin_beta.push_back(mean_beta);
    }
  }
  if (bin_d.size() < 2) throw Error("insufficient excitation");

  // log beta = -c d, fitted through the origin.
  double num = 0.0;
  double den = 0.0;
  for (std::size_t k = 0; k < bin_d.size(); ++k) {
    num += bin_d[k] * std::log(bin_beta[k]);
    den += bin_d[k] * bin_d[k];
  }
  const double c = -num / den;
  if (!(c > 0.0)) throw Error("influence does not decay with opinion distance");

  std::vector<double> fitted(bin_d.size());
  for (std::size_t k = 0; k < bin_d.size(); ++k) fitted[k] = std::exp(-c * bin_d[k]);

  SysIdResult r = open_params;
  r.c_hat = c;
  r.r2 = r_squared(bin_beta, fitted);
  r.objective = 0.0;
  for (std::size_t k = 0; k < bin_d.size(); ++k)
    r.objective += (bin_beta[k] - fitted[k]) * (bin_beta[k] - fitted[k]);
  r.objective /= static_cast<double>(bin_d.size());
  return r;
}

}  // namespace softcrowd::sysid
