// Copyright 2026 The softcrowd Authors
// SPDX-License-Identifier: Apache-2.0

#include "softcrowd/mc.hpp"

#include <algorithm>
#include <cmath>

#include <omp.h>

namespace softcrowd::mc {

DrawBank::DrawBank(const CrowdConfig& config, std::size_t horizon, std::size_t replicates,
                   std::uint64_t seed, Exec exec)
    : horizon_(horizon), replicates_(replicates), agents_(config.n), seed_(seed) {
  if (horizon == 0) throw Error("empty horizon");
  if (replicates == 0) throw Error("replicates must be positive");
  config.validate();
  initial_.resize(replicates * agents_);
  noise_.resize(replicates * (horizon - 1) * agents_);

  const auto draw = [&](std::size_t r) {
    Engine rng = make_stream(seed, r);
    const auto x0 = sample_initial_state(config, rng);
    std::copy(x0.begin(), x0.end(), initial_.begin() + static_cast<std::ptrdiff_t>(r * agents_));
    const std::size_t block = (horizon_ - 1) * agents_;
    double* out = noise_.data() + r * block;
    for (std::size_t k = 0; k < block; ++k) out[k] = unit_noise(config.noise_dist, rng);
  };

  const auto count = static_cast<std::ptrdiff_t>(replicates);
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < count; ++r) draw(static_cast<std::size_t>(r));
  } else {
    for (std::ptrdiff_t r = 0; r < count; ++r) draw(static_cast<std::size_t>(r));
  }
}

void run_replicate(const CrowdConfig& config, const InfluencePolicy& policy,
                   std::span<const double> x0, std::span<const double> unit_noise,
                   std::span<double> mse_out, std::vector<double>& scratch) {
  const std::size_t n = x0.size();
  const std::size_t horizon = mse_out.size();
  scratch.assign(x0.begin(), x0.end());
  double* x = scratch.data();
  const double sigma = config.noise_sigma;
  const double bound = config.state_bound;
  const bool open = std::holds_alternative<policy::Off>(policy);
  const auto nd = static_cast<double>(n);

  for (std::size_t t = 0;; ++t) {
    double ss = 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      ss += x[i] * x[i];
      sum += x[i];
    }
    mse_out[t] = ss / nd;
    if (t + 1 == horizon) break;

    const double* w = unit_noise.data() + t * n;
    const double u = sum / nd;
    for (std::size_t i = 0; i < n; ++i) {
      const double own = config.gain(i) * x[i];
      const double noise = sigma * w[i];
      double raw;
      if (open) {
        raw = own + noise;
      } else {
        const double beta = influence_weight(policy, t, std::abs(own - u));
        raw = beta == 0.0 ? own + noise : (1.0 - beta) * (own + noise) + beta * u;
      }
      x[i] = std::clamp(raw, -bound, bound);
    }
  }
}

BatchResult evaluate(const DrawBank& bank, const CrowdConfig& config,
                     std::span<const InfluencePolicy> policies, bool keep_series, Exec exec) {
  if (config.n != bank.agents()) throw Error("config and draw bank disagree on crowd size");
  for (const auto& p : policies) validate_policy(p);

  const std::size_t reps = bank.replicates();
  const std::size_t horizon = bank.horizon();
  const std::size_t npol = policies.size();
  std::vector<double> costs(npol * reps);
  std::vector<double> series(keep_series ? npol * reps * horizon : 0);

  const auto body = [&](std::size_t r, std::vector<double>& scratch, std::vector<double>& mse) {
    for (std::size_t p = 0; p < npol; ++p) {
      run_replicate(config, policies[p], bank.initial(r), bank.noise(r), mse, scratch);
      double c = 0.0;
      for (double v : mse) c += v;
      costs[p * reps + r] = c;
      if (keep_series)
        std::copy(mse.begin(), mse.end(),
                  series.begin() + static_cast<std::ptrdiff_t>((p * reps + r) * horizon));
    }
  };

  const auto count = static_cast<std::ptrdiff_t>(reps);
  if (exec == Exec::parallel) {
#pragma omp parallel
    {
      std::vector<double> scratch;
      std::vector<double> mse(horizon);
#pragma omp for schedule(dynamic, 32)
      for (std::ptrdiff_t r = 0; r < count; ++r) body(static_cast<std::size_t>(r), scratch, mse);
    }
  } else {
    std::vector<double> scratch;
    std::vector<double> mse(horizon);
    for (std::ptrdiff_t r = 0; r < count; ++r) body(static_cast<std::size_t>(r), scratch, mse);
  }

  BatchResult out;
  out.replicates = reps;
  out.horizon = horizon;
  out.mean_cost.resize(npol);
  out.cost_se.resize(npol);
  const auto rd = static_cast<double>(reps);
  for (std::size_t p = 0; p < npol; ++p) {
    double sum = 0.0;
    for (std::size_t r = 0; r < reps; ++r) sum += costs[p * reps + r];
    const double mean = sum / rd;
    double ss = 0.0;
    for (std::size_t r = 0; r < reps; ++r) {
      const double d = costs[p * reps + r] - mean;
      ss += d * d;
    }
    out.mean_cost[p] = mean;
    out.cost_se[p] = reps > 1 ? std::sqrt(ss / (rd - 1.0) / rd) : 0.0;
  }
  if (keep_series) {
    out.mean_mse.assign(npol, std::vector<double>(horizon, 0.0));
    out.mse_se.assign(npol, std::vector<double>(horizon, 0.0));
    for (std::size_t p = 0; p < npol; ++p) {
      auto& mean = out.mean_mse[p];
      for (std::size_t r = 0; r < reps; ++r)
        for (std::size_t t = 0; t < horizon; ++t) mean[t] += series[(p * reps + r) * horizon + t];
      for (double& v : mean) v /= rd;
      auto& se = out.mse_se[p];
      for (std::size_t r = 0; r < reps; ++r)
        for (std::size_t t = 0; t < horizon; ++t) {
          const double d = series[(p * reps + r) * horizon + t] - mean[t];
          se[t] += d * d;
        }
      for (double& v : se) v = reps > 1 ? std::sqrt(v / (rd - 1.0) / rd) : 0.0;
    }
  }
  return out;
}

}  // namespace softcrowd::mc
