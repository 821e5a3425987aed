// Copyright 2026 The softcrowd Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "oracles.hpp"

using namespace softcrowd;
using namespace softcrowd::control;

namespace {

CrowdConfig set_b(double sigma = 60.0) {
  CrowdConfig c;
  c.n = 39;
  c.gains = {0.75};
  c.noise_sigma = sigma;
  c.init = TargetMseInit{72000.0};
  return c;
}

}  // namespace

TEST_CASE("contraction_factor") {
  CHECK(contraction_factor(0.75, 0.0) == 0.75);
  CHECK(contraction_factor(0.75, 0.32) == doctest::Approx(0.83));
  CHECK(contraction_factor(0.75, 1 - 1e-9) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(contraction_factor(0.75, 1 - 1e-9) < 1.0);
  CHECK_THROWS_AS(contraction_factor(1.0, 0.2), Error);
  CHECK_THROWS_AS(contraction_factor(0.5, 1.0), Error);
  CHECK_THROWS_AS(contraction_factor(0.5, -0.01), Error);
}

TEST_CASE("property: contraction_factor is strictly increasing in beta and gain") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.001, 0.998);
  for (int k = 0; k < 1000; ++k) {
    const double g = u(rng), b = u(rng), d = 1e-3;
    CHECK(contraction_factor(g, b + d) > contraction_factor(g, b));
    CHECK(contraction_factor(g + d, b) > contraction_factor(g, b));
  }
}

TEST_CASE("mse_bound_step") {
  CHECK(mse_bound_step(100, 0.75, 0, 60) == doctest::Approx(3656.25));
  CHECK(mse_bound_step(100, 0.75, 0, 0) == 0.5625 * 100);
  CHECK(mse_bound_step(0, 0.75, 0.5, 60) == doctest::Approx(900));
  CHECK_THROWS_AS(mse_bound_step(-1, 0.75, 0, 60), Error);
}

TEST_CASE("robust_cost_bound at T = 1 is exactly one") {
  for (double g : {0.1, 0.75, 0.99})
    for (double b : {0.0, 0.3, 0.9})
      for (double r : {0.0, 0.05, 3.0}) CHECK(robust_cost_bound({g, r, 1}, b) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("property: robust_cost_bound equals the term-by-term iterated bound") {
  CHECK(oracle::worst_bound_identity_error(2024, 1000) <= 1e-9);
}

TEST_CASE("noiseless bound is minimized at beta = 0") {
  // Brute-force oracle on a 0.001 grid.
  const RobustProblem p{0.75, 0.0, 30};
  double best_b = -1, best_v = 1e300;
  for (int k = 0; k < 1000; ++k) {
    const double b = k * 0.001;
    const double v = robust_cost_bound(p, b);
    if (v < best_v) best_v = v, best_b = b;
  }
  CHECK(best_b == 0.0);
  const auto d = optimize_beta_robust(p);
  CHECK(d.beta == 0.0);
  CHECK(d.delta_mse == 0.0);
}

TEST_CASE("robust_cost_bound rejects non-contractions") {
  CHECK_THROWS_AS(robust_cost_bound({0.75, 0.05, 30}, 1.0), Error);
  CHECK_THROWS_AS(robust_cost_bound({1.0, 0.05, 30}, 0.2), Error);
}

TEST_CASE("optimize_beta_robust is a global minimum of its grid") {
  for (const RobustProblem p : {RobustProblem{0.75, 0.05, 30}, RobustProblem{0.96, 0.03, 69},
                                RobustProblem{0.5, 0.2, 10}, RobustProblem{0.93, 0.0009, 69}}) {
    const auto d = optimize_beta_robust(p);
    for (int k = 0; k <= 999; ++k) CHECK(d.predicted_cost <= robust_cost_bound(p, k * 0.001));
    // Oracle: fine brute-force grid locates the same minimizer to 1e-4.
    double best_b = 0, best_v = 1e300;
    for (int k = 0; k < 1000000; k += 1) {
      const double b = k * 1e-6;
      const double v = robust_cost_bound(p, b);
      if (v < best_v) best_v = v, best_b = b;
    }
    CHECK(std::abs(d.beta - best_b) <= 1e-4);
    CHECK(d.delta_mse == doctest::Approx(1 - d.predicted_cost / robust_cost_bound(p, 0)));
  }
}

TEST_CASE("optimize_beta_robust on the sales-tax problem") {
  const auto d = optimize_beta_robust({0.96, 0.03, 69});
  CHECK(d.beta == doctest::Approx(0.35).epsilon(0.05 / 0.35));
}

TEST_CASE("delta_mse") {
  CHECK(delta_mse(100, 71) == doctest::Approx(0.29));
  CHECK(delta_mse(100, 100) == 0.0);
  CHECK(delta_mse(100, 53) == doctest::Approx(0.47));
  CHECK_THROWS_AS(delta_mse(0, 1), Error);
  CHECK_THROWS_AS(delta_mse(-1, 1), Error);
}

TEST_CASE("make_grid is inclusive when the step divides the range") {
  const auto g = make_grid(0, 0.9, 0.1);
  REQUIRE(g.size() == 10);
  CHECK(g.back() == doctest::Approx(0.9));
  CHECK(make_grid(0.05, 0.95, 0.05).size() == 19);
  CHECK(make_grid(0, 0.25, 0.01).size() == 26);
}

TEST_CASE("noiseless MC optimum is beta = 0") {
  const auto d = optimize_beta_mc(set_b(0.0), 30, make_grid(0, 0.9, 0.1), {500, 3});
  CHECK(d.beta == 0.0);
  CHECK(d.delta_mse == doctest::Approx(0.0));
}

TEST_CASE("MC optimum beats every grid point under common random numbers") {
  const auto grid = make_grid(0, 0.9, 0.05);
  const McOptions opts{1000, 11};
  const auto d = optimize_beta_mc(set_b(), 30, grid, opts);
  std::vector<InfluencePolicy> ps;
  for (double b : grid) ps.emplace_back(policy::Constant{b});
  const auto res = evaluate_policies_mc(set_b(), 30, ps, opts);
  for (double c : res.mean_cost) CHECK(d.predicted_cost <= c);
  CHECK(d.cost_se > 0.0);
  CHECK_THROWS_AS(optimize_beta_mc(set_b(), 30, {}, opts), Error);
}

TEST_CASE("MC cost on a fixed seed set is replayable") {
  const McOptions opts{300, 5};
  const auto a = optimize_beta_mc(set_b(), 30, make_grid(0, 0.5, 0.1), opts);
  const auto b = optimize_beta_mc(set_b(), 30, make_grid(0, 0.5, 0.1), opts);
  CHECK(a.predicted_cost == b.predicted_cost);
  CHECK(a.beta == b.beta);
}

TEST_CASE("a very steep distance profile behaves like open loop") {
  const McOptions opts{1000, 2};
  const auto d = optimize_profile_mc(set_b(), 30, {1e6}, opts);
  CHECK(std::abs(d.predicted_cost - d.open_loop_cost) <= 3 * d.cost_se);
  CHECK_THROWS_AS(optimize_profile_mc(set_b(), 30, {0.01, 0.0}, opts), Error);
  CHECK_THROWS_AS(optimize_profile_mc(set_b(), 30, {-1.0}, opts), Error);
}

TEST_CASE("greedy dynamic schedule dominates the best constant weight on the bound") {
  for (double g : {0.3, 0.75, 0.9, 0.97})
    for (double r : {0.001, 0.01, 0.05, 0.2})
      for (std::size_t T : {5u, 30u, 69u}) {
        const RobustProblem p{g, r, T};
        const auto dyn = robust_dynamic_schedule(p);
        const auto cst = optimize_beta_robust(p);
        CHECK(dyn.schedule.size() == T);
        CHECK(dyn.predicted_cost <= cst.predicted_cost * (1 + 1e-9));
        CHECK(dyn.predicted_cost == doctest::Approx(schedule_bound_cost(p, dyn.schedule)));
        for (double b : dyn.schedule) {
          CHECK(b >= 0.0);
          CHECK(b < 1.0);
        }
      }
}

TEST_CASE("noiseless dynamic schedule is identically zero") {
  const auto d = robust_dynamic_schedule({0.75, 0.0, 30});
  for (double b : d.schedule) CHECK(b == 0.0);
}

TEST_CASE("phase diagram shape") {
  const auto gains = make_grid(0.05, 0.95, 0.05);
  const auto ratios = make_grid(0, 0.25, 0.01);
  const auto pd = phase_diagram(gains, ratios, 30);
  for (std::size_t i = 0; i < gains.size(); ++i) {
    CHECK(pd.beta[i][0] == 0.0);
    for (std::size_t j = 1; j < ratios.size(); ++j) CHECK(pd.beta[i][j] >= pd.beta[i][j - 1]);
  }
  // ratio 0.05 column; g = 0.95 vs g = 0.85.
  CHECK(pd.beta[18][5] > pd.beta[16][5]);

  const auto serial = phase_diagram(gains, ratios, 30, mc::Exec::serial);
  CHECK(serial.beta == pd.beta);

  std::ostringstream os;
  write_phase_csv(os, phase_diagram({0.5, 0.9}, {0, 0.05}, 30));
  const std::string csv = os.str();
  CHECK(csv.rfind("gain\\ratio,0,0.05\n0.5,0.0000,", 0) == 0);
}

TEST_CASE("design JSON carries the kind-specific field") {
  const auto j = design_to_json(optimize_beta_robust({0.75, 0.05, 30}));
  CHECK(j.at("kind") == "constant");
  CHECK(j.contains("beta"));
  CHECK(j.at("method") == "bound");
  const auto k = design_to_json(robust_dynamic_schedule({0.75, 0.05, 30}));
  CHECK(k.at("schedule").size() == 30);
}
