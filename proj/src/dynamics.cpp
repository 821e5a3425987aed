// Copyright 2026 The softcrowd Authors
// SPDX-License-Identifier: Apache-2.0

#include "softcrowd/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

namespace softcrowd {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

void check_beta(double beta) {
  if (!(beta >= 0.0 && beta < 1.0)) throw Error("invalid influence weight");
}

double clamp_state(double x, double bound) { return std::clamp(x, -bound, bound); }

}  // namespace

double CrowdConfig::max_abs_gain() const {
  double m = 0.0;
  for (double g : gains) m = std::max(m, std::abs(g));
  return m;
}

void CrowdConfig::validate() const {
  if (n < 1) throw Error("crowd size must be at least 1");
  if (gains.empty() || (gains.size() != 1 && gains.size() != n))
    throw Error("gains must have 1 or n entries");
  for (double g : gains)
    if (!(std::abs(g) < 1.0)) throw Error("learning gain must satisfy |g| < 1");
  if (!(noise_sigma >= 0.0)) throw Error("noise_sigma must be nonnegative");
  if (!(state_bound > 0.0)) throw Error("state_bound must be positive");
  std::visit(overloaded{
                 [&](const ExplicitInit& e) {
                   if (e.x.size() != n) throw Error("initial state must have n entries");
                 },
                 [](const TargetMseInit& t) {
                   if (!(t.mse0 >= 0.0)) throw Error("initial MSE must be nonnegative");
                   if (!(t.common_share >= 0.0 && t.common_share <= 1.0))
                     throw Error("common_share must be in [0, 1]");
                 },
             },
             init);
}

void validate_policy(const InfluencePolicy& p) {
  std::visit(overloaded{
                 [](const policy::Off&) {},
                 [](const policy::Constant& c) { check_beta(c.beta); },
                 [](const policy::DistanceProfile& d) {
                   if (!(d.c > 0.0)) throw Error("profile constant c must be positive");
                 },
                 [](const policy::Schedule& s) {
                   if (s.betas.empty()) throw Error("empty schedule");
                   for (double b : s.betas) check_beta(b);
                 },
             },
             p);
}

std::string policy_name(const InfluencePolicy& p) {
  return std::visit(overloaded{
                        [](const policy::Off&) { return std::string("off"); },
                        [](const policy::Constant&) { return std::string("constant"); },
                        [](const policy::DistanceProfile&) { return std::string("distance_profile"); },
                        [](const policy::Schedule&) { return std::string("schedule"); },
                    },
                    p);
}

double influence_weight(const InfluencePolicy& p, std::size_t t, double distance) {
  return std::visit(overloaded{
                        [](const policy::Off&) { return 0.0; },
                        [](const policy::Constant& c) {
                          check_beta(c.beta);
                          return c.beta;
                        },
                        [&](const policy::DistanceProfile& d) {
                          return std::min(std::exp(-d.c * distance), kMaxBeta);
                        },
                        [&](const policy::Schedule& s) {
                          if (s.betas.empty()) throw Error("empty schedule");
                          double b = s.betas[std::min(t, s.betas.size() - 1)];
                          check_beta(b);
                          return b;
                        },
                    },
                    p);
}

std::size_t CrowdState::active_count() const {
  if (active.empty()) return x.size();
  return static_cast<std::size_t>(std::count_if(active.begin(), active.end(),
                                                [](std::uint8_t a) { return a != 0; }));
}

double population_feedback(const CrowdState& state) {
  double sum = 0.0;
  std::size_t k = 0;
  for (std::size_t i = 0; i < state.size(); ++i) {
    if (!state.is_active(i)) continue;
    sum += state.x[i];
    ++k;
  }
  if (k == 0) throw Error("empty population");
  return sum / static_cast<double>(k);
}

double mean_squared_error(const CrowdState& state) {
  double sum = 0.0;
  std::size_t k = 0;
  for (std::size_t i = 0; i < state.size(); ++i) {
    if (!state.is_active(i)) continue;
    sum += state.x[i] * state.x[i];
    ++k;
  }
  if (k == 0) throw Error("empty population");
  return sum / static_cast<double>(k);
}

CrowdState open_loop_step(const CrowdState& state, const CrowdConfig& config,
                          std::span<const double> noise) {
  if (noise.size() != state.size()) throw Error("noise vector size mismatch");
  CrowdState next = state;
  next.t = state.t + 1;
  for (std::size_t i = 0; i < state.size(); ++i) {
    if (!state.is_active(i)) continue;
    next.x[i] = clamp_state(config.gain(i) * state.x[i] + noise[i], config.state_bound);
  }
  return next;
}

CrowdState soft_feedback_step(const CrowdState& state, const CrowdConfig& config,
                              const InfluencePolicy& policy, std::span<const double> noise) {
  if (noise.size() != state.size()) throw Error("noise vector size mismatch");
  const double u = population_feedback(state);
  CrowdState next = state;
  next.t = state.t + 1;
  for (std::size_t i = 0; i < state.size(); ++i) {
    if (!state.is_active(i)) continue;
    const double own = config.gain(i) * state.x[i];
    const double beta = influence_weight(policy, state.t, std::abs(own - u));
    const double raw = beta == 0.0 ? own + noise[i] : (1.0 - beta) * (own + noise[i]) + beta * u;
    next.x[i] = clamp_state(raw, config.state_bound);
  }
  return next;
}

void finalize(Trajectory& traj) {
  traj.mse.resize(traj.states.size());
  traj.cost = 0.0;
  for (std::size_t t = 0; t < traj.states.size(); ++t) {
    traj.mse[t] = mean_squared_error(traj.states[t]);
    traj.cost += traj.mse[t];
  }
}

std::uint64_t config_digest(const CrowdConfig& config, const InfluencePolicy& policy) {
  std::ostringstream os;
  os.precision(17);
  os << "n=" << config.n << ";g=";
  for (double g : config.gains) os << g << ',';
  os << ";sigma=" << config.noise_sigma << ";bound=" << config.state_bound
     << ";dist=" << (config.noise_dist == NoiseDist::gaussian ? "gaussian" : "uniform") << ";init=";
  std::visit(overloaded{
                 [&](const ExplicitInit& e) {
                   os << "explicit:";
                   for (double x : e.x) os << x << ',';
                 },
                 [&](const TargetMseInit& t) { os << "mse0:" << t.mse0 << ':' << t.common_share; },
             },
             config.init);
  os << ";policy=" << policy_name(policy) << ':';
  std::visit(overloaded{
                 [](const policy::Off&) {},
                 [&](const policy::Constant& c) { os << c.beta; },
                 [&](const policy::DistanceProfile& d) { os << d.c; },
                 [&](const policy::Schedule& s) {
                   for (double b : s.betas) os << b << ',';
                 },
             },
             policy);
  return fnv1a(os.str());
}

double unit_noise(NoiseDist dist, Engine& rng) {
  if (dist == NoiseDist::gaussian) return std::normal_distribution<double>(0.0, 1.0)(rng);
  const double a = std::sqrt(3.0);
  return std::uniform_real_distribution<double>(-a, a)(rng);
}

std::vector<double> sample_initial_state(const CrowdConfig& config, Engine& rng) {
  std::vector<double> x;
  if (const auto* given = std::get_if<ExplicitInit>(&config.init)) {
    x = given->x;
  } else {
    const auto& spec = std::get<TargetMseInit>(config.init);
    const std::size_t n = config.n;
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const double sign = unit(rng) < 0.0 ? -1.0 : 1.0;
    std::vector<double> e(n);
    for (double& v : e) v = unit(rng);
    const double rho = spec.common_share;
    if (rho > 0.0 && n > 1) {
      const double mean = std::accumulate(e.begin(), e.end(), 0.0) / static_cast<double>(n);
      for (double& v : e) v -= mean;
    }
    double ss = 0.0;
    for (double v : e) ss += v * v;
    const double rms = std::sqrt(ss / static_cast<double>(n));
    const bool degenerate = rms == 0.0 || (rho > 0.0 && n == 1);
    const double scale = std::sqrt(spec.mse0);
    x.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double idio = degenerate ? 0.0 : e[i] / rms;
      const double common = degenerate ? sign : sign * std::sqrt(rho);
      x[i] = scale * (common + (degenerate ? 0.0 : std::sqrt(1.0 - rho) * idio));
    }
  }
  for (double& v : x) v = clamp_state(v, config.state_bound);
  if (const auto* t = std::get_if<TargetMseInit>(&config.init); t && t->mse0 > 0.0) {
    double ss = 0.0;
    for (double v : x) ss += v * v;
    const double realized = ss / static_cast<double>(x.size());
    if (std::abs(realized - t->mse0) / t->mse0 > 0.05)
      throw Error("initial MSE incompatible with state bound");
  }
  return x;
}

Trajectory simulate(const CrowdConfig& config, const InfluencePolicy& policy,
                    std::size_t horizon, std::uint64_t seed) {
  if (horizon == 0) throw Error("empty horizon");
  config.validate();
  validate_policy(policy);
  Engine rng = make_stream(seed, 0);

  Trajectory traj;
  traj.seed = seed;
  traj.config_digest = config_digest(config, policy);
  traj.meta = TrajectoryMeta{config.n, config.gains, config.noise_sigma, seed, policy};
  traj.states.reserve(horizon);
  traj.states.push_back(CrowdState{0, sample_initial_state(config, rng), {}});

  const bool open = std::holds_alternative<policy::Off>(policy);
  std::vector<double> noise(config.n);
  for (std::size_t t = 1; t < horizon; ++t) {
    for (double& w : noise) w = config.noise_sigma * unit_noise(config.noise_dist, rng);
    const CrowdState& cur = traj.states.back();
    traj.states.push_back(open ? open_loop_step(cur, config, noise)
                               : soft_feedback_step(cur, config, policy, noise));
  }
  finalize(traj);
  return traj;
}

std::vector<double> uniform_grid(std::size_t points, double step) {
  std::vector<double> g(points);
  for (std::size_t k = 0; k < points; ++k) g[k] = step * static_cast<double>(k + 1);
  return g;
}

Trajectory resample_to_grid(std::span<const GuessEvent> events, std::span<const double> grid,
                            double theta_star, std::span<const std::string> roster) {
  if (grid.empty()) throw Error("empty horizon");
  std::map<std::string, std::size_t> index;
  std::vector<std::string> order;
  for (const auto& id : roster)
    if (index.emplace(id, order.size()).second) order.push_back(id);
  for (const auto& ev : events)
    if (index.emplace(ev.agent, order.size()).second) order.push_back(ev.agent);
  for (std::size_t k = 1; k < events.size(); ++k)
    if (events[k].timestamp < events[k - 1].timestamp) throw Error("events not sorted by timestamp");

  const std::size_t n = order.size();
  std::vector<double> last(n, 0.0);
  std::vector<std::uint8_t> seen(n, 0);
  std::vector<std::vector<double>> xs;
  std::vector<std::vector<std::uint8_t>> masks;
  std::size_t next = 0;
  for (double edge : grid) {
    while (next < events.size() && events[next].timestamp < edge) {
      const std::size_t i = index.at(events[next].agent);
      last[i] = events[next].decision - theta_star;
      seen[i] = 1;
      ++next;
    }
    xs.push_back(last);
    masks.push_back(seen);
  }

  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < n; ++i)
    if (seen[i]) keep.push_back(i);
  if (keep.empty()) throw Error("no usable agents");

  Trajectory traj;
  traj.dropped_agents = n - keep.size();
  traj.meta.n = keep.size();
  for (std::size_t k = 0; k < grid.size(); ++k) {
    CrowdState s{k, {}, {}};
    bool all = true;
    for (std::size_t i : keep) {
      s.x.push_back(xs[k][i]);
      s.active.push_back(masks[k][i]);
      all = all && masks[k][i] != 0;
    }
    if (all) s.active.clear();
    traj.states.push_back(std::move(s));
  }
  if (traj.states.front().active_count() == 0) throw Error("no decisions in the first grid bin");
  finalize(traj);
  return traj;
}

}  // namespace softcrowd
