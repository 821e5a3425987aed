// Copyright 2026 The softcrowd Authors
// SPDX-License-Identifier: Apache-2.0

// Design of the degree of social influence: the worst-case cumulative MSE
// bound and its minimizer, Monte Carlo searches over constant weights and
// distance profiles, a greedy time-varying schedule, and the (gain, noise
// ratio) phase diagram of the robust optimum.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "softcrowd/dynamics.hpp"
#include "softcrowd/io.hpp"
#include "softcrowd/mc.hpp"

namespace softcrowd::control {

struct RobustProblem {
  double gain = 0.75;
  double noise_ratio = 0.0;  // sigma^2 / MSE(0)
  std::size_t horizon = 30;

  void validate() const;
};

/// m = (1 - beta) g + beta.
double contraction_factor(double gain, double beta);

/// One step of the expected-MSE bound: m^2 mse + (1 - beta)^2 sigma^2.
double mse_bound_step(double mse, double gain, double beta, double sigma);

/// Closed-form bound on V(T) / MSE(0). Throws "not a contraction" when m >= 1.
double robust_cost_bound(const RobustProblem& problem, double beta);

/// Grid step and refinement tolerance for the 1-D searches.
inline constexpr double kGridStep = 1e-3;
inline constexpr double kRefineTol = 1e-4;

/// Global 1-D minimization on [lo, hi]: dense grid with step `step`, then
/// golden-section refinement around the best grid point. The returned point
/// is never worse than the best grid point.
struct Minimum {
  double x = 0.0;
  double value = 0.0;
};
Minimum minimize_1d(const std::function<double(double)>& f, double lo, double hi,
                    double step = kGridStep, double tol = kRefineTol);

enum class DesignKind { constant, distance_profile, dynamic };

struct InfluenceDesign {
  DesignKind kind = DesignKind::constant;
  double beta = 0.0;
  double c = 0.0;
  std::vector<double> schedule;
  double predicted_cost = 0.0;
  double delta_mse = 0.0;
  std::string method;  // "bound" or "monte_carlo"
  std::size_t replicates = 0;
  std::uint64_t seed = 0;
  double cost_se = 0.0;
  double open_loop_cost = 0.0;
  /// Monte Carlo ΔMSE of a bound-derived design, when evaluated.
  std::optional<double> delta_mse_mc;

  InfluencePolicy policy() const;
};

json design_to_json(const InfluenceDesign& d);
std::string kind_name(DesignKind k);

InfluenceDesign optimize_beta_robust(const RobustProblem& problem);

/// Constant beta grid {0, step, ...} up to and including `hi` when it lands
/// on the grid.
std::vector<double> make_grid(double lo, double hi, double step);

struct McOptions {
  std::size_t replicates = 5000;
  std::uint64_t seed = 1;
  mc::Exec exec = mc::Exec::parallel;
};

InfluenceDesign optimize_beta_mc(const CrowdConfig& config, std::size_t horizon,
                                 const std::vector<double>& beta_grid, const McOptions& opts);

InfluenceDesign optimize_profile_mc(const CrowdConfig& config, std::size_t horizon,
                                    const std::vector<double>& c_grid, const McOptions& opts);

/// Monte Carlo costs of several policies on one common draw bank.
mc::BatchResult evaluate_policies_mc(const CrowdConfig& config, std::size_t horizon,
                                     const std::vector<InfluencePolicy>& policies,
                                     const McOptions& opts, bool keep_series = false);

/// Greedy per-step minimization of the normalized bound recursion.
InfluenceDesign robust_dynamic_schedule(const RobustProblem& problem);

/// Cumulative bound sum_{t<T} M(t) for a schedule, with M(0) = 1.
double schedule_bound_cost(const RobustProblem& problem, const std::vector<double>& schedule);

struct PhaseDiagram {
  std::vector<double> gains;
  std::vector<double> ratios;
  std::size_t horizon = 30;
  std::vector<std::vector<double>> beta;  // [gain][ratio]
};

PhaseDiagram phase_diagram(const std::vector<double>& gain_grid,
                           const std::vector<double>& ratio_grid, std::size_t horizon,
                           mc::Exec exec = mc::Exec::parallel);

/// First row: ratio grid; first column: gain grid; cells to 4 decimals.
void write_phase_csv(std::ostream& os, const PhaseDiagram& pd);

/// 1 - cost_soft / cost_open. Throws when cost_open <= 0.
double delta_mse(double cost_open, double cost_soft);

}  // namespace softcrowd::control
