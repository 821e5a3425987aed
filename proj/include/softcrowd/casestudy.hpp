// Copyright 2026 The softcrowd Authors
// SPDX-License-Identifier: Apache-2.0

// Panel-data case study: entity-by-year percentage shares are turned into
// error trajectories around a derived consensus value, identified as a
// crowd, and evaluated for the best degree of social influence.

#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "softcrowd/control.hpp"
#include "softcrowd/io.hpp"
#include "softcrowd/sysid.hpp"

namespace softcrowd::casestudy {

struct PanelSeries {
  std::vector<std::string> entities;
  /// Strictly increasing.
  std::vector<int> years;
  /// values[e][y]; nullopt marks a missing cell.
  std::vector<std::vector<std::optional<double>>> values;
  std::string label;

  std::size_t cells() const;
  std::size_t missing() const;
};

/// Header `entity,year,value`. A blank value or an absent (entity, year)
/// pair is a missing cell.
PanelSeries load_panel_csv(std::istream& in, std::string label = {});
PanelSeries load_panel_csv(const std::filesystem::path& path);

/// Grand mean over the trailing `window` years.
double derive_theta_star(const PanelSeries& panel, std::size_t window = 10);

/// x = value - theta_star; missing cells are inactive.
Trajectory panel_trajectory(const PanelSeries& panel, double theta_star);

struct AnalyzeOptions {
  std::size_t window = 10;
  std::optional<double> theta_star;
  std::size_t replicates = 5000;
  std::uint64_t seed = 1;
  /// Constant-beta grid for the MC optimum.
  double mc_grid_step = 0.01;
  mc::Exec exec = mc::Exec::parallel;
};

struct CaseStudyReport {
  std::string description;
  int first_year = 0;
  int last_year = 0;
  std::size_t n = 0;
  std::size_t horizon = 0;
  double theta_star = 0.0;
  double gain_hat = 0.0;
  double sigma_hat = 0.0;
  double r2 = 0.0;
  double noise_ratio = 0.0;
  /// Minimizer of the robust bound.
  double beta_opt = 0.0;
  /// MC improvement at beta_opt, simulated from the observed first year.
  double delta_mse = 0.0;
  /// Improvement predicted by the bound at beta_opt.
  double delta_mse_bound = 0.0;
  /// Grid minimizer of the MC cost and its improvement.
  double beta_opt_mc = 0.0;
  double delta_mse_mc = 0.0;
  std::size_t replicates = 0;
  std::uint64_t seed = 0;
};

CaseStudyReport analyze(const PanelSeries& panel, const AnalyzeOptions& opts = {});

json report_to_json(const CaseStudyReport& r);
/// Columns: description, duration, n, T, gain, noise, r2, noise ratio,
/// optimal beta, delta MSE.
void write_report_csv_header(std::ostream& out);
void write_report_csv_row(std::ostream& out, const CaseStudyReport& r);

}  // namespace softcrowd::casestudy
