// Copyright 2026 The softcrowd Authors
// SPDX-License-Identifier: Apache-2.0

// Crowd dynamics: independent (open-loop) learning and learning under
// soft population feedback, for a crowd of agents with linear learning
// gains. State is the decision error x = z - theta*.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "softcrowd/rng.hpp"

namespace softcrowd {

/// Raised for contract violations in the toolkit. Messages are stable and
/// are matched by tests and the CLI.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Largest admissible influence weight; beta must stay strictly below 1.
inline constexpr double kMaxBeta = 1.0 - 1e-6;

/// Share of the initial MSE carried by the common (consensus) error mode
/// when x(0) is drawn from a target MSE.
inline constexpr double kDefaultCommonShare = 0.9;

enum class NoiseDist { gaussian, uniform };

struct ExplicitInit {
  std::vector<double> x;
};

/// x(0) = sqrt(mse0) * (s * sqrt(rho) + sqrt(1 - rho) * e) where s is a
/// random sign shared by the crowd and e a unit-RMS uniform draw. For
/// rho > 0, e is centered so the realized MSE(0) equals mse0 exactly. For
/// rho = 0 the draw is uniform on [-a, a] rescaled to mse0.
struct TargetMseInit {
  double mse0 = 0.0;
  double common_share = kDefaultCommonShare;
};

using InitSpec = std::variant<ExplicitInit, TargetMseInit>;

struct CrowdConfig {
  std::size_t n = 1;
  std::vector<double> gains{0.75};  // one entry = uniform gain
  double noise_sigma = 0.0;
  double state_bound = 500.0;
  InitSpec init = TargetMseInit{};
  NoiseDist noise_dist = NoiseDist::gaussian;

  double gain(std::size_t i) const { return gains.size() == 1 ? gains.front() : gains[i]; }
  double max_abs_gain() const;
  void validate() const;
};

namespace policy {
struct Off {};
struct Constant {
  double beta = 0.0;
};
/// beta(d) = exp(-c d) with d = |g x - u|.
struct DistanceProfile {
  double c = 1.0;
};
/// betas[t] is applied on the step t -> t+1; the last entry repeats.
struct Schedule {
  std::vector<double> betas;
};
}  // namespace policy

using InfluencePolicy =
    std::variant<policy::Off, policy::Constant, policy::DistanceProfile, policy::Schedule>;

void validate_policy(const InfluencePolicy& p);
std::string policy_name(const InfluencePolicy& p);

/// Influence weight for one agent at step t given its opinion distance d.
/// Always in [0, kMaxBeta].
double influence_weight(const InfluencePolicy& p, std::size_t t, double distance);

struct CrowdState {
  std::size_t t = 0;
  std::vector<double> x;
  /// Empty means every agent is present. Otherwise active[i] != 0 marks
  /// agents that have a decision at this step.
  std::vector<std::uint8_t> active;

  std::size_t size() const { return x.size(); }
  bool is_active(std::size_t i) const { return active.empty() || active[i] != 0; }
  std::size_t active_count() const;
};

/// Mean of the active agents' errors. Throws "empty population".
double population_feedback(const CrowdState& state);

/// (1/n_active) * sum x_i^2 over active agents. Throws "empty population".
double mean_squared_error(const CrowdState& state);

CrowdState open_loop_step(const CrowdState& state, const CrowdConfig& config,
                          std::span<const double> noise);

/// Synchronous soft-feedback update; u is taken from the pre-update state.
CrowdState soft_feedback_step(const CrowdState& state, const CrowdConfig& config,
                              const InfluencePolicy& policy, std::span<const double> noise);

struct TrajectoryMeta {
  std::size_t n = 0;
  std::vector<double> gains;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  InfluencePolicy policy = policy::Off{};
};

struct Trajectory {
  std::vector<CrowdState> states;
  std::vector<double> mse;
  double cost = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t config_digest = 0;
  std::size_t dropped_agents = 0;
  TrajectoryMeta meta;

  std::size_t horizon() const { return states.size(); }
  std::size_t agents() const { return states.empty() ? 0 : states.front().size(); }
};

/// Fills mse and cost from states.
void finalize(Trajectory& traj);

std::uint64_t config_digest(const CrowdConfig& config, const InfluencePolicy& policy);

/// Draws x(0) from the config's init spec and clamps it to the state bound.
std::vector<double> sample_initial_state(const CrowdConfig& config, Engine& rng);

/// Unit-variance zero-mean noise draw for the configured distribution.
double unit_noise(NoiseDist dist, Engine& rng);

Trajectory simulate(const CrowdConfig& config, const InfluencePolicy& policy,
                    std::size_t horizon, std::uint64_t seed);

struct GuessEvent {
  std::string agent;
  double timestamp = 0.0;
  double decision = 0.0;
};

/// Last-observation-carried-forward resampling of asynchronous decisions.
/// grid[k] is the end of bin k (seconds from phase start): step k holds each
/// agent's latest decision made strictly before grid[k]. Agents not yet heard
/// from are inactive at that step. Roster agents without any usable event
/// are dropped and counted in `dropped_agents`.
Trajectory resample_to_grid(std::span<const GuessEvent> events, std::span<const double> grid,
                            double theta_star, std::span<const std::string> roster = {});

/// Bin end times step, 2*step, ..., points*step.
std::vector<double> uniform_grid(std::size_t points, double step);

}  // namespace softcrowd
