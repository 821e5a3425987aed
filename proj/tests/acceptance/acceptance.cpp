// Copyright 2026 The softcrowd Authors
// SPDX-License-Identifier: Apache-2.0

// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failures (capped at 1). Optional filter: acceptance <substring>.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "../oracles.hpp"
#include "softcrowd/casestudy.hpp"
#include "softcrowd/game.hpp"
#include "softcrowd/sysid.hpp"

using namespace softcrowd;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... a) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

bool within(double v, double lo, double hi) { return v >= lo && v <= hi; }

CrowdConfig set_b() {
  CrowdConfig c;
  c.n = 39;
  c.gains = {0.75};
  c.noise_sigma = 60.0;
  c.init = TargetMseInit{72000.0};
  return c;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Verdict robust_optimum() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto d = control::optimize_beta_robust({0.75, 0.05, 30});
  const double s = seconds_since(t0);
  return {within(d.beta, 0.21, 0.25) && s < 1.0,
          fmt("beta=%.4f (want [0.21, 0.25]) in %.3fs (want < 1s)", d.beta, s)};
}

const control::McOptions kMc{5000, 2026};

Verdict mc_optimum() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto d = control::optimize_beta_mc(set_b(), 30, control::make_grid(0.0, 0.99, 0.01), kMc);
  const double s = seconds_since(t0);
  return {within(d.beta, 0.25, 0.35) && within(d.delta_mse, 0.24, 0.34) && s < 120.0,
          fmt("beta=%.2f (want [0.25, 0.35]) delta_mse=%.3f (want [0.24, 0.34]) in %.1fs (want < 120s)", d.beta,
              d.delta_mse, s)};
}

Verdict profile_optimum() {
  const auto p = control::optimize_profile_mc(set_b(), 30, control::make_grid(0.001, 0.1, 0.001), kMc);
  const auto b = control::optimize_beta_mc(set_b(), 30, control::make_grid(0.0, 0.99, 0.01), kMc);
  const double gap = p.delta_mse - b.delta_mse;
  return {within(p.c, 0.015, 0.04) && within(p.delta_mse, 0.40, 0.54) && gap >= 0.05,
          fmt("c=%.3f (want [0.015, 0.04]) delta_mse=%.3f (want [0.40, 0.54]) gain over constant=%.3f "
              "(want >= 0.05)",
              p.c, p.delta_mse, gap)};
}

Verdict bound_identity() {
  const double e = oracle::worst_bound_identity_error(2024, 1000);
  return {e <= 1e-9, fmt("worst relative error %.2e over 1000 instances (want <= 1e-9)", e)};
}

Verdict theorem_suite() {
  const auto sr = oracle::spectral_radius_suite(17, 200);
  const auto cn = oracle::contraction_norm_suite(3, 1000);
  const auto bn = oracle::bounded_noise_suite(5, 100);
  auto c = set_b();
  const auto rc = oracle::mse_recursion_check(c, {0.0, 0.1, 0.32, 0.6, 0.9}, 30, 5000, 21);
  const bool ok = sr.instances == 800 && sr.violations == 0 && cn.states == 1000 && cn.violations == 0 &&
                  bn.configs == 100 && bn.violations == 0 && rc.worst_excess_in_se <= 3.0;
  return {ok, fmt("spectral radius max %.6f (%d/%d bad); norm ratio max %.6f (%d/%d bad); bounded noise "
                  "%d/%d bad; MSE recursion worst excess %.2f SE (want <= 3)",
                  sr.worst_radius, sr.violations, sr.instances, cn.worst_ratio, cn.violations, cn.states,
                  bn.violations, bn.configs, rc.worst_excess_in_se)};
}

struct Recovery {
  std::vector<double> g, s, b, c;
};

std::string recovery_detail(const Recovery& r) {
  std::string d = fmt("median g=%.3f (0.75 +-0.05) sigma=%.2f (60 +-10%%) beta=%.3f (0.32 +-0.05)", median(r.g),
                      median(r.s), median(r.b));
  if (!r.c.empty()) d += fmt(" c=%.4f (0.011 +-0.004)", median(r.c));
  return d;
}

bool recovery_ok(const Recovery& r) {
  bool ok = std::abs(median(r.g) - 0.75) <= 0.05 && std::abs(median(r.s) - 60.0) <= 6.0 &&
            std::abs(median(r.b) - 0.32) <= 0.05;
  if (!r.c.empty()) ok = ok && std::abs(median(r.c) - 0.011) <= 0.004;
  return ok;
}

const sysid::McFitOptions kFit{5000, 1};

Verdict sysid_roundtrip() {
  const auto c = set_b();
  Recovery r;
  for (std::uint64_t k = 0; k < 20; ++k) {
    const auto open = simulate(c, policy::Off{}, 30, 100 + k);
    const auto soft = simulate(c, policy::Constant{0.32}, 30, 200 + k);
    const auto prof = simulate(c, policy::DistanceProfile{0.011}, 30, 300 + k);
    const auto fit = sysid::refine_mc(open, sysid::estimate_open_loop(open), kFit);
    r.g.push_back(fit.gain_hat);
    r.s.push_back(fit.sigma_hat);
    r.b.push_back(*sysid::estimate_beta(soft, fit, kFit).beta_hat);
    r.c.push_back(*sysid::estimate_beta_profile(prof, fit).c_hat);
  }
  return {recovery_ok(r), recovery_detail(r) + ", 20 datasets"};
}

Verdict phase_diagram() {
  const auto gains = control::make_grid(0.05, 0.95, 0.05);
  const auto ratios = control::make_grid(0.0, 0.25, 0.01);
  const auto pd = control::phase_diagram(gains, ratios, 30);
  const auto idx = [](const std::vector<double>& v, double x) {
    return static_cast<std::size_t>(std::min_element(v.begin(), v.end(), [&](double a, double b) {
                                      return std::abs(a - x) < std::abs(b - x);
                                    }) -
                                    v.begin());
  };
  int nonmonotone = 0, nonzero = 0;
  for (const auto& row : pd.beta) {
    if (row[0] != 0.0) ++nonzero;
    for (std::size_t j = 1; j < row.size(); ++j)
      if (row[j] < row[j - 1]) ++nonmonotone;
  }
  const std::size_t r5 = idx(ratios, 0.05);
  const double hi = pd.beta[idx(gains, 0.95)][r5], lo = pd.beta[idx(gains, 0.85)][r5];
  return {nonmonotone == 0 && nonzero == 0 && hi > lo,
          fmt("%zux%zu grid, %d decreasing steps, %d nonzero at ratio 0, beta(0.95)=%.4f vs beta(0.85)=%.4f at "
              "ratio 0.05",
              gains.size(), ratios.size(), nonmonotone, nonzero, hi, lo)};
}

casestudy::PanelSeries sales_tax_panel(std::uint64_t seed) {
  CrowdConfig c;
  c.n = 50;
  c.gains = {0.96};
  c.noise_sigma = 4.0;
  c.state_bound = 50.0;
  c.init = TargetMseInit{16.0 / 0.03, 0.0};
  const auto traj = simulate(c, policy::Off{}, 69, seed);
  casestudy::PanelSeries p;
  p.label = "synthetic";
  for (int y = 0; y < 69; ++y) p.years.push_back(1946 + y);
  for (std::size_t i = 0; i < c.n; ++i) {
    p.entities.push_back("S" + std::to_string(i));
    std::vector<std::optional<double>> row;
    for (const auto& s : traj.states) row.push_back(50.0 + s.x[i]);
    p.values.push_back(std::move(row));
  }
  return p;
}

Verdict case_study() {
  std::vector<double> g, b;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    casestudy::AnalyzeOptions o;
    o.seed = seed;
    const auto r = casestudy::analyze(sales_tax_panel(seed), o);
    g.push_back(r.gain_hat);
    b.push_back(r.beta_opt);
  }
  return {std::abs(median(g) - 0.96) <= 0.02 && within(median(b), 0.25, 0.45),
          fmt("median over 5 panels: g=%.4f (0.96 +-0.02) beta_opt=%.3f (want [0.25, 0.45])", median(g),
              median(b))};
}

Trajectory phase_trajectory(const game::GameSession& s, const std::vector<game::LogRow>& rows, std::size_t k) {
  const auto& info = s.phases()[k];
  const auto events = game::phase_events(rows, info);
  const auto grid = uniform_grid(30, s.config().bot_cadence);
  return resample_to_grid(events, grid, info.theta_star);
}

Verdict game_server() {
  std::vector<std::string> problems;
  Recovery r;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    game::GameConfig c;
    c.n_bots = 39;
    c.bot_beta = 0.32;
    c.seed = seed;
    game::GameSession s("acceptance", c, 0.0);
    s.start(0.0);
    s.advance(2 * c.phase_seconds);
    std::ostringstream os;
    s.write_export_csv(os);
    std::istringstream in(os.str());
    const auto rows = game::read_export_csv(in);
    const auto open = phase_trajectory(s, rows, 1);
    const auto soft = phase_trajectory(s, rows, 2);
    const auto fit = sysid::refine_mc(open, sysid::estimate_open_loop(open), kFit);
    r.g.push_back(fit.gain_hat);
    r.s.push_back(fit.sigma_hat);
    r.b.push_back(*sysid::estimate_beta(soft, fit, kFit).beta_hat);
  }
  if (!recovery_ok(r)) problems.push_back("bot recovery");

  game::GameConfig fc;
  fc.theta_lo = fc.theta_hi = 2250.0;
  game::GameSession fs("fitness", fc, 0.0);
  int outside = 0;
  for (int k = 0; k < 10000; ++k) {
    const double f = fs.sample_fitness(2250.0);
    if (!within(f, 0.96, 1.00)) ++outside;
  }
  if (outside) problems.push_back("fitness");

  // Two humans guessing at random among seven bots.
  int mismatches = 0;
  {
    game::GameConfig c;
    c.n_bots = 7;
    c.seed = 11;
    game::GameSession s("rec", c, 0.0);
    const auto a = s.add_player(), b = s.add_player();
    s.start(0.0);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> g(c.guess_lo, c.guess_hi);
    const auto check = [&] {
      if (s.phase() != game::Phase::soft_feedback) return;
      double sum = 0;
      int count = 0;
      for (const auto& [id, p] : s.players())
        if (p.last_guess && p.last_phase == game::Phase::soft_feedback) sum += *p.last_guess, ++count;
      const auto rec = s.recommendation();
      if (count == 0 ? rec.has_value() : (!rec || std::abs(*rec - sum / count) > 1e-9)) ++mismatches;
    };
    for (double t = 0; t < 2 * c.phase_seconds; t += 0.5) {
      s.advance(t);
      check();
      if (static_cast<int>(t * 2) % 7 == 0 && s.phase() != game::Phase::finished) {
        s.submit_guess(static_cast<int>(t) % 2 ? a : b, g(rng), t);
        check();
      }
    }
  }
  if (mismatches) problems.push_back("recommendation");

  const auto transcript = [](std::uint64_t seed) {
    game::GameConfig c;
    c.n_bots = 5;
    c.seed = seed;
    game::GameSession s("replay", c, 100.0);
    const auto p = s.add_player();
    s.submit_guess(p, 2100, 101.0);
    s.start(110.0);
    for (int k = 0; k < 40; ++k) s.submit_guess(p, 1600 + 35.5 * k, 110.0 + 12.25 * k);
    s.advance(110.0 + 2 * c.phase_seconds);
    std::ostringstream os;
    s.write_export_csv(os);
    os << s.export_meta().dump();
    return os.str();
  };
  const bool replay = transcript(42) == transcript(42);
  if (!replay) problems.push_back("replay");

  std::string d = recovery_detail(r) + fmt(", 20 sessions; fitness at optimum %d/10000 outside [0.96, 1.00]; "
                                           "%d recommendation mismatches; replay %s",
                                           outside, mismatches, replay ? "identical" : "differs");
  return {problems.empty(), d};
}

}  // namespace

int main(int argc, char** argv) {
  const std::string filter = argc > 1 ? argv[1] : "";
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
      {"robust optimum", robust_optimum},
      {"mc optimum", mc_optimum},
      {"profile optimum", profile_optimum},
      {"bound identity", bound_identity},
      {"theorem suite", theorem_suite},
      {"sysid round-trip", sysid_roundtrip},
      {"phase diagram", phase_diagram},
      {"case-study pipeline", case_study},
      {"game-server correctness", game_server},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    if (!filter.empty() && std::string(name).find(filter) == std::string::npos) continue;
    Verdict v;
    try {
      v = run();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    if (!v.pass) ++failures;
    std::printf("%s  %s: %s\n", v.pass ? "PASS" : "FAIL", name, v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d failed\n", failures);
  return failures ? 1 : 0;
}
