// Copyright 2026 The softcrowd Authors
// SPDX-License-Identifier: Apache-2.0

#include "softcrowd/control.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace softcrowd::control {

namespace {

void check_beta(double beta) {
  if (!(beta >= 0.0 && beta < 1.0)) throw Error("invalid influence weight");
}

// Smallest beta grid index whose value is the minimum; ties resolve to the
// smaller beta.
std::size_t argmin(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::min_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

void RobustProblem::validate() const {
  if (!(gain > 0.0 && gain < 1.0)) throw Error("gain must be in (0, 1)");
  if (!(noise_ratio >= 0.0)) throw Error("noise ratio must be nonnegative");
  if (horizon < 1) throw Error("empty horizon");
}

double contraction_factor(double gain, double beta) {
  if (!(gain > 0.0 && gain < 1.0)) throw Error("gain must be in (0, 1)");
  check_beta(beta);
  return (1.0 - beta) * gain + beta;
}

double mse_bound_step(double mse, double gain, double beta, double sigma) {
  if (!(mse >= 0.0)) throw Error("negative mse");
  const double m = contraction_factor(gain, beta);
  return m * m * mse + (1.0 - beta) * (1.0 - beta) * sigma * sigma;
}

double robust_cost_bound(const RobustProblem& problem, double beta) {
  problem.validate();
  const double m = contraction_factor(problem.gain, beta);
  if (!(m < 1.0)) throw Error("not a contraction");
  const auto horizon = static_cast<double>(problem.horizon);
  // 1 - m = (1 - beta)(1 - g); written out to keep precision as beta -> 1.
  const double one_minus_m = (1.0 - beta) * (1.0 - problem.gain);
  const double one_minus_m2 = one_minus_m * (1.0 + m);
  // Leading t = 0 term kept separate so T = 1 gives exactly 1.
  const double geometric =
      1.0 - m * m * std::expm1(2.0 * (horizon - 1.0) * std::log(m)) / one_minus_m2;
  // (1 - beta)^2 / (1 - m^2), simplified.
  const double noise_gain = (1.0 - beta) / ((1.0 - problem.gain) * (1.0 + m));
  return geometric + (horizon - geometric) * noise_gain * problem.noise_ratio;
}

Minimum minimize_1d(const std::function<double(double)>& f, double lo, double hi, double step,
                    double tol) {
  if (!(hi >= lo)) throw Error("empty search interval");
  const auto points = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<double> xs;
  xs.reserve(points + 1);
  for (std::size_t k = 0; k < points; ++k) xs.push_back(lo + step * static_cast<double>(k));
  if (xs.back() < hi) xs.push_back(hi);

  std::vector<double> vals(xs.size());
  for (std::size_t k = 0; k < xs.size(); ++k) vals[k] = f(xs[k]);
  const std::size_t best = argmin(vals);
  Minimum grid_best{xs[best], vals[best]};

  double a = xs[best == 0 ? 0 : best - 1];
  double b = xs[best + 1 == xs.size() ? best : best + 1];
  if (b - a <= tol) return grid_best;

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  const Minimum refined = fc <= fd ? Minimum{c, fc} : Minimum{d, fd};
  return refined.value < grid_best.value ? refined : grid_best;
}

std::string kind_name(DesignKind k) {
  switch (k) {
    case DesignKind::constant:
      return "constant";
    case DesignKind::distance_profile:
      return "distance_profile";
    case DesignKind::dynamic:
      return "dynamic";
  }
  return "constant";
}

InfluencePolicy InfluenceDesign::policy() const {
  switch (kind) {
    case DesignKind::constant:
      return beta == 0.0 ? InfluencePolicy{policy::Off{}} : InfluencePolicy{policy::Constant{beta}};
    case DesignKind::distance_profile:
      return policy::DistanceProfile{c};
    case DesignKind::dynamic:
      return policy::Schedule{schedule};
  }
  return policy::Off{};
}

json design_to_json(const InfluenceDesign& d) {
  json j{{"kind", kind_name(d.kind)},
         {"predicted_cost", d.predicted_cost},
         {"delta_mse", d.delta_mse},
         {"method", d.method},
         {"replicates", d.replicates},
         {"seed", d.seed},
         {"open_loop_cost", d.open_loop_cost}};
  switch (d.kind) {
    case DesignKind::constant:
      j["beta"] = d.beta;
      break;
    case DesignKind::distance_profile:
      j["c"] = d.c;
      break;
    case DesignKind::dynamic:
      j["schedule"] = d.schedule;
      break;
  }
  if (d.method == "monte_carlo") j["cost_se"] = d.cost_se;
  if (d.delta_mse_mc) j["delta_mse_mc"] = *d.delta_mse_mc;
  return j;
}

InfluenceDesign optimize_beta_robust(const RobustProblem& problem) {
  problem.validate();
  const auto best = minimize_1d([&](double b) { return robust_cost_bound(problem, b); }, 0.0,
                                kMaxBeta);
  InfluenceDesign d;
  d.kind = DesignKind::constant;
  d.beta = best.x;
  d.predicted_cost = best.value;
  d.open_loop_cost = robust_cost_bound(problem, 0.0);
  d.delta_mse = delta_mse(d.open_loop_cost, d.predicted_cost);
  d.method = "bound";
  return d;
}

std::vector<double> make_grid(double lo, double hi, double step) {
  if (!(step > 0.0)) throw Error("grid step must be positive");
  if (hi < lo) throw Error("grid stop below start");
  const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<double> g(count);
  // lo + k * step, not a running sum.
  for (std::size_t k = 0; k < count; ++k) g[k] = lo + step * static_cast<double>(k);
  return g;
}

mc::BatchResult evaluate_policies_mc(const CrowdConfig& config, std::size_t horizon,
                                     const std::vector<InfluencePolicy>& policies,
                                     const McOptions& opts, bool keep_series) {
  const mc::DrawBank bank(config, horizon, opts.replicates, opts.seed, opts.exec);
  return mc::evaluate(bank, config, policies, keep_series, opts.exec);
}

namespace {

InfluenceDesign mc_search(const CrowdConfig& config, std::size_t horizon,
                          const std::vector<InfluencePolicy>& candidates, const McOptions& opts) {
  std::vector<InfluencePolicy> policies{policy::Off{}};
  policies.insert(policies.end(), candidates.begin(), candidates.end());
  const auto res = evaluate_policies_mc(config, horizon, policies, opts);
  std::vector<double> costs(res.mean_cost.begin() + 1, res.mean_cost.end());
  const std::size_t best = argmin(costs);

  InfluenceDesign d;
  d.predicted_cost = costs[best];
  d.cost_se = res.cost_se[best + 1];
  d.open_loop_cost = res.mean_cost[0];
  d.delta_mse = delta_mse(d.open_loop_cost, d.predicted_cost);
  d.method = "monte_carlo";
  d.replicates = opts.replicates;
  d.seed = opts.seed;
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, policy::Constant>) {
          d.kind = DesignKind::constant;
          d.beta = p.beta;
        } else if constexpr (std::is_same_v<P, policy::DistanceProfile>) {
          d.kind = DesignKind::distance_profile;
          d.c = p.c;
        }
      },
      candidates[best]);
  return d;
}

}  // namespace

InfluenceDesign optimize_beta_mc(const CrowdConfig& config, std::size_t horizon,
                                 const std::vector<double>& beta_grid, const McOptions& opts) {
  if (beta_grid.empty()) throw Error("empty grid");
  std::vector<InfluencePolicy> candidates;
  for (double b : beta_grid) {
    check_beta(b);
    candidates.emplace_back(policy::Constant{b});
  }
  return mc_search(config, horizon, candidates, opts);
}

InfluenceDesign optimize_profile_mc(const CrowdConfig& config, std::size_t horizon,
                                    const std::vector<double>& c_grid, const McOptions& opts) {
  if (c_grid.empty()) throw Error("empty grid");
  std::vector<InfluencePolicy> candidates;
  for (double c : c_grid) {
    if (!(c > 0.0)) throw Error("profile constant c must be positive");
    candidates.emplace_back(policy::DistanceProfile{c});
  }
  return mc_search(config, horizon, candidates, opts);
}

double schedule_bound_cost(const RobustProblem& problem, const std::vector<double>& schedule) {
  problem.validate();
  double bound = 1.0;
  double total = 0.0;
  for (std::size_t t = 0; t < problem.horizon; ++t) {
    total += bound;
    const double beta = schedule.empty() ? 0.0 : schedule[std::min(t, schedule.size() - 1)];
    // Normalized recursion: sigma^2 / MSE(0) enters as the noise ratio.
    bound = mse_bound_step(bound, problem.gain, beta, std::sqrt(problem.noise_ratio));
  }
  return total;
}

InfluenceDesign robust_dynamic_schedule(const RobustProblem& problem) {
  problem.validate();
  const double sigma = std::sqrt(problem.noise_ratio);
  std::vector<double> schedule(problem.horizon);
  double bound = 1.0;
  double total = 0.0;
  for (std::size_t t = 0; t < problem.horizon; ++t) {
    total += bound;
    const auto step = minimize_1d(
        [&](double b) { return mse_bound_step(bound, problem.gain, b, sigma); }, 0.0, kMaxBeta);
    schedule[t] = step.x;
    bound = step.value;
  }
  InfluenceDesign d;
  d.kind = DesignKind::dynamic;
  d.schedule = std::move(schedule);
  d.predicted_cost = total;
  d.open_loop_cost = robust_cost_bound(problem, 0.0);
  d.delta_mse = delta_mse(d.open_loop_cost, d.predicted_cost);
  d.method = "bound";
  return d;
}

PhaseDiagram phase_diagram(const std::vector<double>& gain_grid,
                           const std::vector<double>& ratio_grid, std::size_t horizon,
                           mc::Exec exec) {
  if (gain_grid.empty() || ratio_grid.empty()) throw Error("empty grid");
  PhaseDiagram pd{gain_grid, ratio_grid, horizon,
                  std::vector<std::vector<double>>(gain_grid.size(),
                                                   std::vector<double>(ratio_grid.size()))};
  for (double g : gain_grid) RobustProblem{g, 0.0, horizon}.validate();
  for (double r : ratio_grid) RobustProblem{0.5, r, horizon}.validate();

  const auto cells = static_cast<std::ptrdiff_t>(gain_grid.size() * ratio_grid.size());
  const auto cell = [&](std::ptrdiff_t k) {
    const auto i = static_cast<std::size_t>(k) / ratio_grid.size();
    const auto j = static_cast<std::size_t>(k) % ratio_grid.size();
    pd.beta[i][j] = optimize_beta_robust({gain_grid[i], ratio_grid[j], horizon}).beta;
  };
  if (exec == mc::Exec::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t k = 0; k < cells; ++k) cell(k);
  } else {
    for (std::ptrdiff_t k = 0; k < cells; ++k) cell(k);
  }
  return pd;
}

void write_phase_csv(std::ostream& os, const PhaseDiagram& pd) {
  char buf[64];
  os << "gain\\ratio";
  for (double r : pd.ratios) {
    std::snprintf(buf, sizeof buf, "%.10g", r);
    os << ',' << buf;
  }
  os << '\n';
  for (std::size_t i = 0; i < pd.gains.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.10g", pd.gains[i]);
    os << buf;
    for (double b : pd.beta[i]) {
      std::snprintf(buf, sizeof buf, "%.4f", b);
      os << ',' << buf;
    }
    os << '\n';
  }
}

double delta_mse(double cost_open, double cost_soft) {
  if (!(cost_open > 0.0)) throw Error("open-loop cost must be positive");
  return 1.0 - cost_soft / cost_open;
}

}  // namespace softcrowd::control
