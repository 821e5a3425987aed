// Copyright 2026 The softcrowd Authors
// SPDX-License-Identifier: Apache-2.0

// The Fitness Game: players guess a hidden optimal diet level, see a noisy
// fitness, and in the treatment phase also see the crowd's recommendation.
// Simulated bots follow the soft-feedback learning rule on a fixed cadence.

#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "softcrowd/dynamics.hpp"
#include "softcrowd/io.hpp"
#include "softcrowd/rng.hpp"

namespace softcrowd::game {

enum class Phase { practice, open_loop, soft_feedback, finished };

std::string phase_name(Phase p);
Phase phase_from_name(const std::string& s);

struct GameConfig {
  double theta_lo = 2000.0;
  double theta_hi = 2500.0;
  double f0 = 0.98;
  double kappa = 500.0;
  double fitness_noise_halfwidth = 0.02;
  double score_threshold = 0.99;
  double phase_seconds = 240.0;
  double guess_lo = 1500.0;
  double guess_hi = 3000.0;

  std::size_t n_bots = 0;
  double bot_gain = 0.75;
  double bot_sigma = 60.0;
  double bot_beta = 0.32;
  double bot_cadence = 8.0;
  /// Initial bot errors, redrawn at the start of every scored phase.
  double bot_mse0 = 72000.0;
  double bot_common_share = kDefaultCommonShare;
  /// Fixed initial errors instead of a draw; size must equal n_bots.
  std::vector<double> bot_initial;

  std::uint64_t seed = 1;

  void validate() const;
};

json config_to_json(const GameConfig& c);
/// Missing keys keep their defaults.
GameConfig config_from_json(const json& j);

/// Seconds on some monotone timeline.
using Clock = std::function<double()>;

struct HistoryEntry {
  double guess = 0.0;
  double fitness = 0.0;
};

struct Player {
  std::string id;
  bool bot = false;
  std::size_t guess_count = 0;
  double score = 0.0;
  std::optional<double> last_guess;
  std::optional<double> last_fitness;
  /// Phase of last_guess; only guesses of the current phase enter the
  /// recommendation.
  Phase last_phase = Phase::practice;
  std::deque<HistoryEntry> history;  // newest last, at most 10
  double x = 0.0;                    // bot error state
};

struct LogRow {
  Phase phase = Phase::practice;
  std::string player;
  double timestamp = 0.0;  // seconds since session creation
  double guess = 0.0;
  double fitness = 0.0;
  int score_delta = 0;
};

struct PhaseInfo {
  Phase phase = Phase::practice;
  double start = 0.0;  // seconds since session creation
  double end = 0.0;
  double theta_star = 0.0;
};

struct GuessResult {
  double fitness = 0.0;
  int score_delta = 0;
  double score_total = 0.0;
  std::size_t guess_count = 0;
  std::optional<double> recommendation;
};

/// "We recommend 2300 kcal"; the value is rounded for display only.
std::string recommendation_message(double value);

/// Not thread-safe; SessionManager serializes access.
class GameSession {
 public:
  GameSession(std::string id, GameConfig config, double created_at);

  const std::string& id() const { return id_; }
  const GameConfig& config() const { return config_; }
  Phase phase() const { return phase_; }
  /// Seconds since creation of the last processed instant.
  double clock() const { return clock_; }
  double phase_elapsed() const;
  std::optional<double> recommendation() const { return recommendation_; }
  const std::vector<LogRow>& log() const { return log_; }
  const std::vector<PhaseInfo>& phases() const { return phases_; }
  const std::map<std::string, Player>& players() const { return players_; }
  double theta_star() const { return theta_star_; }

  std::string add_player();
  /// practice -> open_loop.
  void start(double now);
  /// Processes bot ticks and phase transitions due at or before `now`.
  void advance(double now);
  GuessResult submit_guess(const std::string& player, double guess, double now);

  /// f0 - ((guess - theta*)/kappa)^2 + U[-h, h]. Not clamped.
  double sample_fitness(double guess);

  /// Client view; theta* only once finished.
  json state_json(const std::string& player) const;

  /// Requires a finished session.
  void write_export_csv(std::ostream& out) const;
  json export_meta() const;

 private:
  double to_session_time(double now) const { return now - created_at_; }
  void enter_phase(Phase p, double at);
  void bot_tick(double at);
  GuessResult record(Player& p, double guess, double at);
  void recompute_recommendation();
  double mean_recent_guess() const;

  std::string id_;
  GameConfig config_;
  double created_at_;
  double clock_ = 0.0;
  Phase phase_ = Phase::practice;
  double phase_start_ = 0.0;
  std::size_t next_tick_ = 0;
  double theta_star_ = 0.0;
  std::optional<double> recommendation_;
  std::map<std::string, Player> players_;
  std::vector<std::string> bot_ids_;
  std::size_t humans_ = 0;
  std::vector<LogRow> log_;
  std::vector<PhaseInfo> phases_;
  Engine theta_rng_;
  Engine fitness_rng_;
  Engine bot_rng_;
};

/// Thread-safe registry of sessions sharing one clock.
class SessionManager {
 public:
  explicit SessionManager(Clock clock, std::uint64_t seed = 1);

  std::string create(GameConfig config);
  std::string add_player(const std::string& session);
  json start(const std::string& session);
  json guess(const std::string& session, const std::string& player, double value);
  json state(const std::string& session, const std::string& player);
  std::string export_csv(const std::string& session);
  json export_meta(const std::string& session);

  /// Runs f on the session under its lock.
  template <class F>
  auto with_session(const std::string& session, F&& f) {
    auto entry = find(session);
    std::lock_guard lock(entry->mutex);
    entry->game.advance(clock_());
    return f(entry->game);
  }

 private:
  struct Entry {
    std::mutex mutex;
    GameSession game;
    template <class... A>
    explicit Entry(A&&... a) : game(std::forward<A>(a)...) {}
  };
  std::shared_ptr<Entry> find(const std::string& session);

  Clock clock_;
  std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  Engine id_rng_;
};

/// Not-found errors map to HTTP 404.
struct NotFound : Error {
  using Error::Error;
};
/// Phase-order violations map to HTTP 409.
struct Conflict : Error {
  using Error::Error;
};

/// Parses an exported log back into rows.
std::vector<LogRow> read_export_csv(std::istream& in);

/// Events of one phase with timestamps relative to the phase start.
std::vector<GuessEvent> phase_events(std::span<const LogRow> rows, const PhaseInfo& phase);

}  // namespace softcrowd::game
