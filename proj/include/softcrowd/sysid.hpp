// Copyright 2026 The softcrowd Authors
// SPDX-License-Identifier: Apache-2.0

// Identification of the crowd model from observed trajectories: learning
// gain and noise scale from open-loop MSE data, then the degree of social
// influence (constant or distance profile) from soft-feedback data.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "softcrowd/dynamics.hpp"
#include "softcrowd/io.hpp"
#include "softcrowd/mc.hpp"

namespace softcrowd::sysid {

enum class Method { regression, mc_refined };

struct SysIdResult {
  double gain_hat = 0.0;
  double sigma_hat = 0.0;
  std::optional<double> beta_hat;
  std::optional<double> c_hat;
  double r2 = 0.0;
  Method method = Method::regression;
  std::size_t replicates = 0;
  std::uint64_t seed = 0;
  /// Mean squared difference between simulated and observed MSE series.
  double objective = 0.0;
  /// False when a local search hit its evaluation budget.
  bool converged = true;
};

json result_to_json(const SysIdResult& r);

/// 1 - SS_res / SS_tot. Throws "zero variance" for a constant observed series.
double r_squared(std::span<const double> observed, std::span<const double> fitted);

/// OLS of MSE(t+1) on MSE(t): slope = g^2, intercept = sigma^2.
SysIdResult estimate_open_loop(const Trajectory& traj);

struct McFitOptions {
  std::size_t replicates = 5000;
  std::uint64_t seed = 1;
  std::size_t max_evaluations = 200;
  mc::Exec exec = mc::Exec::parallel;
};

/// Monte Carlo MSE series of the model started from the trajectory's
/// observed x(0) (active agents at t = 0). One bank serves every candidate.
class SeriesModel {
 public:
  SeriesModel(const Trajectory& traj, const McFitOptions& opts);

  std::vector<double> mean_mse(double gain, double sigma, const InfluencePolicy& policy) const;
  /// Mean squared difference against the observed MSE series.
  double objective(double gain, double sigma, const InfluencePolicy& policy) const;
  const std::vector<double>& observed() const { return observed_; }

 private:
  CrowdConfig base_;
  std::vector<double> observed_;
  mc::DrawBank bank_;
  mc::Exec exec_;
};

/// Nelder-Mead over (gain, sigma) from the regression estimate.
SysIdResult refine_mc(const Trajectory& traj, const SysIdResult& initial,
                      const McFitOptions& opts = {});

/// Grid-plus-golden search over constant beta with (gain, sigma) fixed.
SysIdResult estimate_beta(const Trajectory& traj_soft, const SysIdResult& open_params,
                          const McFitOptions& opts = {});

struct ProfileOptions {
  std::size_t bins = 20;
  double d_min = 1.0;
  std::size_t min_observations = 30;
};

/// Per-transition influence inversion, equal-count binning on opinion
/// distance, and a unit-intercept fit of exp(-c d) to the bin means.
SysIdResult estimate_beta_profile(const Trajectory& traj_soft, const SysIdResult& open_params,
                                  const ProfileOptions& opts = {});

/// Per-observation influence samples used by estimate_beta_profile.
struct InfluenceSample {
  double distance = 0.0;
  double beta = 0.0;  // unclipped inversion
};
std::vector<InfluenceSample> infer_influence(const Trajectory& traj, double gain, double d_min);

}  // namespace softcrowd::sysid
