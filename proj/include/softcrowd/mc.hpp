// Copyright 2026 The softcrowd Authors
// SPDX-License-Identifier: Apache-2.0

// Monte Carlo kernels. Replicates are independent and run in parallel with
// OpenMP; the serial path executes the same per-replicate kernel and the
// reduction is always done afterwards in replicate-index order, so both
// paths produce bit-identical results.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "softcrowd/dynamics.hpp"

namespace softcrowd::mc {

enum class Exec { serial, parallel };

/// Random numbers for a batch of replicates, drawn once and shared by every
/// candidate evaluated against the bank (common random numbers). Replicate r
/// uses stream make_stream(seed, r), drawing x(0) first and then the unit
/// noise for steps 1..T-1 in agent order, so replicate 0 reproduces
/// simulate(config, policy, T, seed).
class DrawBank {
 public:
  DrawBank(const CrowdConfig& config, std::size_t horizon, std::size_t replicates,
           std::uint64_t seed, Exec exec = Exec::parallel);

  std::size_t replicates() const { return replicates_; }
  std::size_t horizon() const { return horizon_; }
  std::size_t agents() const { return agents_; }
  std::uint64_t seed() const { return seed_; }

  std::span<const double> initial(std::size_t r) const {
    return {initial_.data() + r * agents_, agents_};
  }
  std::span<const double> noise(std::size_t r) const {
    const std::size_t block = (horizon_ - 1) * agents_;
    return {noise_.data() + r * block, block};
  }

 private:
  std::size_t horizon_;
  std::size_t replicates_;
  std::size_t agents_;
  std::uint64_t seed_;
  std::vector<double> initial_;
  std::vector<double> noise_;
};

/// One trajectory on pre-drawn numbers; writes MSE(t) for t = 0..T-1.
/// `scratch` is resized as needed and reused across calls.
void run_replicate(const CrowdConfig& config, const InfluencePolicy& policy,
                   std::span<const double> x0, std::span<const double> unit_noise,
                   std::span<double> mse_out, std::vector<double>& scratch);

struct BatchResult {
  std::size_t replicates = 0;
  std::size_t horizon = 0;
  std::vector<double> mean_cost;  // per policy
  std::vector<double> cost_se;    // standard error of mean_cost
  /// Per policy mean MSE series; filled only when requested.
  std::vector<std::vector<double>> mean_mse;
  /// Per policy standard error of each MSE(t); filled with mean_mse.
  std::vector<std::vector<double>> mse_se;
};

/// Evaluates every policy on every replicate of `bank`. The config supplies
/// gains, noise scale and state bound; its init spec is ignored in favour of
/// the bank's x(0).
BatchResult evaluate(const DrawBank& bank, const CrowdConfig& config,
                     std::span<const InfluencePolicy> policies, bool keep_series = false,
                     Exec exec = Exec::parallel);

}  // namespace softcrowd::mc
