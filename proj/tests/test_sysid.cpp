// Copyright 2026 The softcrowd Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "softcrowd/sysid.hpp"

using namespace softcrowd;
using namespace softcrowd::sysid;

namespace {

CrowdConfig set_b(double sigma = 60.0) {
  CrowdConfig c;
  c.n = 39;
  c.gains = {0.75};
  c.noise_sigma = sigma;
  c.init = TargetMseInit{72000.0};
  return c;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

SysIdResult truth(double g = 0.75, double sigma = 60.0) {
  SysIdResult r;
  r.gain_hat = g;
  r.sigma_hat = sigma;
  return r;
}

Trajectory from_mse(std::vector<double> mse) {
  Trajectory t;
  t.mse = std::move(mse);
  return t;
}

const McFitOptions kFast{1000, 1};

}  // namespace

TEST_CASE("r_squared") {
  const std::vector<double> obs{1, 2, 3};
  CHECK(r_squared(obs, obs) == 1.0);
  CHECK(r_squared(obs, std::vector<double>{2, 2, 2}) == doctest::Approx(0.0));
  CHECK(r_squared(obs, std::vector<double>{1, 2, 4}) == doctest::Approx(0.5));
  CHECK_THROWS_WITH_AS(r_squared(std::vector<double>{5, 5}, std::vector<double>{5, 4}),
                       "zero variance", Error);
  CHECK_THROWS_AS(r_squared(obs, std::vector<double>{1, 2}), Error);
  CHECK_THROWS_AS(r_squared(std::vector<double>{1}, std::vector<double>{1}), Error);
}

TEST_CASE("noiseless open-loop data gives the exact gain") {
  const auto traj = simulate(set_b(0.0), policy::Off{}, 30, 1);
  const auto r = estimate_open_loop(traj);
  CHECK(r.gain_hat == doctest::Approx(0.75).epsilon(1e-6));
  CHECK(r.sigma_hat == 0.0);
  CHECK(r.method == Method::regression);
  CHECK(r.r2 == doctest::Approx(1.0));
}

TEST_CASE("estimate_open_loop errors") {
  CHECK_THROWS_AS(estimate_open_loop(from_mse({3, 2})), Error);
  CHECK_THROWS_WITH_AS(estimate_open_loop(from_mse({4, 4, 4, 4})), "zero variance", Error);
  CHECK_THROWS_WITH_AS(estimate_open_loop(from_mse({1, 2, 4, 8})), "non-contractive fit", Error);
  CHECK_THROWS_WITH_AS(estimate_open_loop(from_mse({1, 9, 2, 8, 3})), "non-contractive fit", Error);
}

TEST_CASE("regression recovers Set-B parameters on average over 200 seeds") {
  double g = 0, s = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto r = estimate_open_loop(simulate(set_b(), policy::Off{}, 30, seed));
    g += r.gain_hat;
    s += r.sigma_hat;
  }
  CHECK(g / 200 == doctest::Approx(0.75).epsilon(0.05 / 0.75));
  CHECK(s / 200 == doctest::Approx(60.0).epsilon(5.0 / 60.0));
}

TEST_CASE("refine_mc does not worsen its start and recovers Set-B parameters") {
  std::vector<double> gains, sigmas;
  for (std::uint64_t seed = 100; seed < 109; ++seed) {
    const auto traj = simulate(set_b(), policy::Off{}, 30, seed);
    const auto init = estimate_open_loop(traj);
    const auto refined = refine_mc(traj, init, kFast);
    const SeriesModel model(traj, kFast);
    CHECK(refined.objective <= model.objective(init.gain_hat, init.sigma_hat, policy::Off{}));
    CHECK(refined.method == Method::mc_refined);
    CHECK(refined.replicates == 1000);
    CHECK(refined.gain_hat > 0.0);
    CHECK(refined.gain_hat < 1.0);
    gains.push_back(refined.gain_hat);
    sigmas.push_back(refined.sigma_hat);
  }
  CHECK(std::abs(median(gains) - 0.75) <= 0.03);
  CHECK(std::abs(median(sigmas) - 60.0) <= 5.0);
}

TEST_CASE("r2 of a trajectory against its own generating model") {
  const auto traj = simulate(set_b(), policy::Off{}, 30, 3);
  const SeriesModel model(traj, {5000, 1});
  CHECK(r_squared(traj.mse, model.mean_mse(0.75, 60.0, policy::Off{})) >= 0.95);
}

TEST_CASE("estimate_beta recovers the generating weight") {
  std::vector<double> hats;
  for (std::uint64_t seed = 500; seed < 520; ++seed) {
    const auto traj = simulate(set_b(), policy::Constant{0.32}, 30, seed);
    const auto r = estimate_beta(traj, truth(), kFast);
    REQUIRE(r.beta_hat.has_value());
    CHECK(*r.beta_hat >= 0.0);
    CHECK(*r.beta_hat < 1.0);
    hats.push_back(*r.beta_hat);
  }
  CHECK(std::abs(median(hats) - 0.32) <= 0.04);
}

TEST_CASE("open-loop data gives a near-zero beta estimate") {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const auto r = estimate_beta(simulate(set_b(), policy::Off{}, 30, seed), truth(), kFast);
    CHECK(*r.beta_hat <= 0.05);
  }
}

TEST_CASE("property: estimate_beta is monotone in the generating weight") {
  for (std::uint64_t seed = 40; seed < 43; ++seed) {
    double prev = -1.0;
    for (double beta : {0.1, 0.3, 0.5}) {
      const auto r = estimate_beta(simulate(set_b(), policy::Constant{beta}, 30, seed), truth(), kFast);
      CHECK(*r.beta_hat > prev);
      prev = *r.beta_hat;
    }
  }
}

TEST_CASE("property: influence inversion is exact without noise") {
  for (double beta : {0.1, 0.32, 0.7}) {
    const auto traj = simulate(set_b(0.0), policy::Constant{beta}, 30, 8);
    const auto samples = infer_influence(traj, 0.75, 1.0);
    REQUIRE(samples.size() > 100);
    for (const auto& s : samples) CHECK(s.beta == doctest::Approx(beta).epsilon(1e-9));
  }
  const auto traj = simulate(set_b(0.0), policy::DistanceProfile{0.011}, 30, 8);
  for (const auto& s : infer_influence(traj, 0.75, 1.0))
    CHECK(s.beta == doctest::Approx(std::exp(-0.011 * s.distance)).epsilon(1e-9));
}

TEST_CASE("estimate_beta_profile recovers the decay rate") {
  std::vector<double> hats;
  for (std::uint64_t seed = 900; seed < 920; ++seed) {
    const auto traj = simulate(set_b(), policy::DistanceProfile{0.011}, 30, seed);
    const auto r = estimate_beta_profile(traj, truth());
    REQUIRE(r.c_hat.has_value());
    CHECK(*r.c_hat > 0.0);
    CHECK(r.r2 <= 1.0);
    hats.push_back(*r.c_hat);
  }
  CHECK(std::abs(median(hats) - 0.011) <= 0.004);
}

TEST_CASE("constant-weight data yields a flat fitted profile at the median distance") {
  const auto traj = simulate(set_b(), policy::Constant{0.32}, 30, 500);
  const auto r = estimate_beta_profile(traj, truth());
  std::vector<double> d;
  for (const auto& s : infer_influence(traj, 0.75, 1.0)) d.push_back(s.distance);
  CHECK(std::exp(-*r.c_hat * median(d)) == doctest::Approx(0.32).epsilon(0.05 / 0.32));
}

TEST_CASE("estimate_beta_profile needs enough usable transitions") {
  auto c = set_b();
  c.n = 3;
  const auto traj = simulate(c, policy::Constant{0.3}, 5, 1);
  CHECK_THROWS_WITH_AS(estimate_beta_profile(traj, truth()), "insufficient excitation", Error);
}

TEST_CASE("result JSON omits absent influence fields") {
  auto r = truth();
  auto j = result_to_json(r);
  CHECK(!j.contains("beta_hat"));
  CHECK(!j.contains("c_hat"));
  CHECK(j.at("method") == "regression");
  r.beta_hat = 0.3;
  CHECK(result_to_json(r).at("beta_hat") == 0.3);
}
