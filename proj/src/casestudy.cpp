// Copyright 2026 The softcrowd Authors
// SPDX-License-Identifier: Apache-2.0

#include "softcrowd/casestudy.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace softcrowd::casestudy {

namespace {

// Percentages cannot sit further than this from any consensus value.
constexpr double kPercentBound = 100.0;

std::string trim(std::string s) {
  const auto ws = [](unsigned char c) { return std::isspace(c) != 0; };
  s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), ws));
  s.erase(std::find_if_not(s.rbegin(), s.rend(), ws).base(), s.end());
  return s;
}

}  // namespace

std::size_t PanelSeries::cells() const { return entities.size() * years.size(); }

std::size_t PanelSeries::missing() const {
  std::size_t m = 0;
  for (const auto& row : values)
    for (const auto& v : row) m += v ? 0 : 1;
  return m;
}

PanelSeries load_panel_csv(std::istream& in, std::string label) {
  std::string line;
  if (!std::getline(in, line)) throw Error("empty panel file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (trim(line) != "entity,year,value") throw Error("panel header must be 'entity,year,value'");

  std::map<std::pair<std::string, int>, std::optional<double>> cells;
  std::vector<std::string> order;
  std::set<std::string> seen;
  std::set<int> years;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    std::stringstream ss(line);
    std::string fe, fy, fv;
    if (!std::getline(ss, fe, ',') || !std::getline(ss, fy, ','))
      throw Error("row " + std::to_string(row) + ": expected 3 fields");
    std::getline(ss, fv);
    fe = trim(fe);
    fy = trim(fy);
    fv = trim(fv);
    if (fe.empty()) throw Error("row " + std::to_string(row) + ": empty entity");
    int year = 0;
    try {
      std::size_t used = 0;
      year = std::stoi(fy, &used);
      if (used != fy.size()) throw std::invalid_argument("year");
    } catch (const std::exception&) {
      throw Error("row " + std::to_string(row) + ": non-numeric year");
    }
    std::optional<double> value;
    if (!fv.empty()) {
      try {
        std::size_t used = 0;
        value = std::stod(fv, &used);
        if (used != fv.size()) throw std::invalid_argument("value");
      } catch (const std::exception&) {
        throw Error("row " + std::to_string(row) + ": non-numeric value");
      }
      if (!(*value >= 0.0 && *value <= 100.0))
        throw Error("row " + std::to_string(row) + ": percentage out of range");
    }
    if (!cells.emplace(std::pair{fe, year}, value).second)
      throw Error("row " + std::to_string(row) + ": duplicate (" + fe + ", " + std::to_string(year) + ")");
    if (seen.insert(fe).second) order.push_back(fe);
    years.insert(year);
  }
  if (cells.empty()) throw Error("panel has no rows");

  PanelSeries p;
  p.label = std::move(label);
  p.entities = std::move(order);
  p.years.assign(years.begin(), years.end());
  p.values.assign(p.entities.size(), std::vector<std::optional<double>>(p.years.size()));
  for (std::size_t e = 0; e < p.entities.size(); ++e)
    for (std::size_t y = 0; y < p.years.size(); ++y)
      if (auto it = cells.find({p.entities[e], p.years[y]}); it != cells.end())
        p.values[e][y] = it->second;
  return p;
}

PanelSeries load_panel_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("file not found: " + path.string());
  return load_panel_csv(in, path.stem().string());
}

double derive_theta_star(const PanelSeries& panel, std::size_t window) {
  if (window == 0) throw Error("window must be at least 1 year");
  if (window > panel.years.size()) throw Error("window larger than series");
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& row : panel.values)
    for (std::size_t y = panel.years.size() - window; y < panel.years.size(); ++y)
      if (row[y]) {
        sum += *row[y];
        ++count;
      }
  if (count == 0) throw Error("empty window");
  return sum / static_cast<double>(count);
}

Trajectory panel_trajectory(const PanelSeries& panel, double theta_star) {
  // Entities without a single observation carry no information.
  std::vector<std::size_t> keep;
  for (std::size_t e = 0; e < panel.entities.size(); ++e)
    if (std::any_of(panel.values[e].begin(), panel.values[e].end(), [](auto& v) { return v.has_value(); }))
      keep.push_back(e);
  if (keep.empty()) throw Error("empty population");

  Trajectory traj;
  const std::size_t n = keep.size();
  for (std::size_t y = 0; y < panel.years.size(); ++y) {
    CrowdState s{y, std::vector<double>(n, 0.0), std::vector<std::uint8_t>(n, 0)};
    bool all = true;
    for (std::size_t k = 0; k < n; ++k) {
      const auto& v = panel.values[keep[k]][y];
      if (v) {
        s.x[k] = *v - theta_star;
        s.active[k] = 1;
      } else {
        all = false;
      }
    }
    if (all) s.active.clear();
    if (s.active_count() == 0) throw Error("year " + std::to_string(panel.years[y]) + " has no data");
    traj.states.push_back(std::move(s));
  }
  traj.meta.n = n;
  finalize(traj);
  return traj;
}

CaseStudyReport analyze(const PanelSeries& panel, const AnalyzeOptions& opts) {
  CaseStudyReport r;
  r.description = panel.label;
  r.theta_star = opts.theta_star ? *opts.theta_star : derive_theta_star(panel, opts.window);
  const Trajectory traj = panel_trajectory(panel, r.theta_star);
  r.first_year = panel.years.front();
  r.last_year = panel.years.back();
  r.n = traj.agents();
  r.horizon = traj.horizon();
  r.replicates = opts.replicates;
  r.seed = opts.seed;

  const bool flat = std::all_of(traj.mse.begin(), traj.mse.end(),
                                [&](double v) { return v == traj.mse.front(); });
  if (flat) {
    // Nothing left to learn: no gain is identifiable and no influence helps.
    r.gain_hat = std::numeric_limits<double>::quiet_NaN();
    r.r2 = std::numeric_limits<double>::quiet_NaN();
    return r;
  }

  const sysid::McFitOptions fit_opts{opts.replicates, opts.seed, 200, opts.exec};
  const auto fit = sysid::refine_mc(traj, sysid::estimate_open_loop(traj), fit_opts);
  r.gain_hat = fit.gain_hat;
  r.sigma_hat = fit.sigma_hat;
  r.r2 = fit.r2;
  const double mse0 = traj.mse.front();
  r.noise_ratio = fit.sigma_hat * fit.sigma_hat / mse0;

  const auto robust = control::optimize_beta_robust({r.gain_hat, r.noise_ratio, r.horizon});
  r.beta_opt = robust.beta;
  r.delta_mse_bound = robust.delta_mse;

  CrowdConfig model;
  std::vector<double> x0;
  const CrowdState& first = traj.states.front();
  for (std::size_t i = 0; i < first.size(); ++i)
    if (first.is_active(i)) x0.push_back(first.x[i]);
  model.n = x0.size();
  model.gains = {r.gain_hat};
  model.noise_sigma = r.sigma_hat;
  model.state_bound = kPercentBound;
  model.init = ExplicitInit{std::move(x0)};

  const control::McOptions mc_opts{opts.replicates, opts.seed, opts.exec};
  std::vector<InfluencePolicy> at_opt{policy::Off{}, policy::Constant{r.beta_opt}};
  const auto res = control::evaluate_policies_mc(model, r.horizon, at_opt, mc_opts);
  r.delta_mse = control::delta_mse(res.mean_cost[0], res.mean_cost[1]);

  const auto best = control::optimize_beta_mc(model, r.horizon,
                                              control::make_grid(0.0, 0.99, opts.mc_grid_step), mc_opts);
  r.beta_opt_mc = best.beta;
  r.delta_mse_mc = best.delta_mse;
  return r;
}

json report_to_json(const CaseStudyReport& r) {
  const auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  return json{{"description", r.description},
              {"duration", std::to_string(r.first_year) + "-" + std::to_string(r.last_year)},
              {"n", r.n},
              {"horizon", r.horizon},
              {"theta_star", r.theta_star},
              {"gain_hat", num(r.gain_hat)},
              {"sigma_hat", r.sigma_hat},
              {"r2", num(r.r2)},
              {"noise_ratio", r.noise_ratio},
              {"beta_opt", r.beta_opt},
              {"delta_mse", r.delta_mse},
              {"delta_mse_bound", r.delta_mse_bound},
              {"beta_opt_mc", r.beta_opt_mc},
              {"delta_mse_mc", r.delta_mse_mc},
              {"replicates", r.replicates},
              {"seed", r.seed}};
}

void write_report_csv_header(std::ostream& out) {
  out << "description,duration,n,horizon,gain_hat,sigma_hat,r2,noise_ratio,beta_opt,delta_mse\n";
}

void write_report_csv_row(std::ostream& out, const CaseStudyReport& r) {
  std::string desc = r.description;
  if (desc.find_first_of(",\"") != std::string::npos) {
    std::string q = "\"";
    for (char c : desc) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    desc = q + "\"";
  }
  out << desc << ',' << r.first_year << '-' << r.last_year << ',' << r.n << ',' << r.horizon << ','
      << format_double(r.gain_hat) << ',' << format_double(r.sigma_hat) << ',' << format_double(r.r2)
      << ',' << format_double(r.noise_ratio) << ',' << format_double(r.beta_opt) << ','
      << format_double(r.delta_mse) << '\n';
}

}  // namespace softcrowd::casestudy
