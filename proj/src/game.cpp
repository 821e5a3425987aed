// Copyright 2026 The softcrowd Authors
// SPDX-License-Identifier: Apache-2.0

#include "softcrowd/game.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>
#include <sstream>

namespace softcrowd::game {

namespace {

constexpr std::size_t kHistory = 10;

bool scored(Phase p) { return p == Phase::open_loop || p == Phase::soft_feedback; }

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

std::string phase_name(Phase p) {
  switch (p) {
    case Phase::practice:
      return "practice";
    case Phase::open_loop:
      return "open_loop";
    case Phase::soft_feedback:
      return "soft_feedback";
    case Phase::finished:
      return "finished";
  }
  return "finished";
}

Phase phase_from_name(const std::string& s) {
  for (Phase p : {Phase::practice, Phase::open_loop, Phase::soft_feedback, Phase::finished})
    if (phase_name(p) == s) return p;
  throw Error("unknown phase: " + s);
}

void GameConfig::validate() const {
  if (!(theta_lo <= theta_hi)) throw Error("theta_star range is empty");
  if (!(guess_lo < guess_hi)) throw Error("guess range is empty");
  if (!(theta_lo >= guess_lo && theta_hi <= guess_hi)) throw Error("theta_star range outside guess range");
  if (!(kappa > 0.0)) throw Error("kappa must be positive");
  if (!(fitness_noise_halfwidth >= 0.0)) throw Error("fitness noise must be nonnegative");
  if (!(phase_seconds > 0.0)) throw Error("phase length must be positive");
  if (!(bot_cadence > 0.0)) throw Error("bot cadence must be positive");
  if (!(bot_gain > -1.0 && bot_gain < 1.0)) throw Error("bot gain must lie in (-1, 1)");
  if (!(bot_sigma >= 0.0)) throw Error("bot sigma must be nonnegative");
  if (!(bot_beta >= 0.0 && bot_beta < 1.0)) throw Error("invalid influence weight");
  if (!(bot_mse0 >= 0.0)) throw Error("bot mse0 must be nonnegative");
  if (!(bot_common_share >= 0.0 && bot_common_share <= 1.0)) throw Error("common share must lie in [0, 1]");
  if (!bot_initial.empty() && bot_initial.size() != n_bots)
    throw Error("bot_initial size must equal n_bots");
}

json config_to_json(const GameConfig& c) {
  return json{{"theta_star_range", {c.theta_lo, c.theta_hi}},
              {"f0", c.f0},
              {"kappa", c.kappa},
              {"fitness_noise_halfwidth", c.fitness_noise_halfwidth},
              {"score_threshold", c.score_threshold},
              {"phase_seconds", c.phase_seconds},
              {"guess_range", {c.guess_lo, c.guess_hi}},
              {"n_bots", c.n_bots},
              {"bot_params",
               {{"gain", c.bot_gain},
                {"sigma", c.bot_sigma},
                {"beta", c.bot_beta},
                {"cadence", c.bot_cadence},
                {"mse0", c.bot_mse0},
                {"common_share", c.bot_common_share},
                {"initial", c.bot_initial}}},
              {"seed", c.seed}};
}

GameConfig config_from_json(const json& j) {
  GameConfig c;
  if (!j.is_object()) throw Error("config must be a JSON object");
  if (j.contains("theta_star_range")) {
    c.theta_lo = j["theta_star_range"].at(0).get<double>();
    c.theta_hi = j["theta_star_range"].at(1).get<double>();
  }
  if (j.contains("guess_range")) {
    c.guess_lo = j["guess_range"].at(0).get<double>();
    c.guess_hi = j["guess_range"].at(1).get<double>();
  }
  c.f0 = j.value("f0", c.f0);
  c.kappa = j.value("kappa", c.kappa);
  c.fitness_noise_halfwidth = j.value("fitness_noise_halfwidth", c.fitness_noise_halfwidth);
  c.score_threshold = j.value("score_threshold", c.score_threshold);
  c.phase_seconds = j.value("phase_seconds", c.phase_seconds);
  c.n_bots = j.value("n_bots", c.n_bots);
  c.seed = j.value("seed", c.seed);
  if (j.contains("bot_params")) {
    const json& b = j["bot_params"];
    c.bot_gain = b.value("gain", c.bot_gain);
    c.bot_sigma = b.value("sigma", c.bot_sigma);
    c.bot_beta = b.value("beta", c.bot_beta);
    c.bot_cadence = b.value("cadence", c.bot_cadence);
    c.bot_mse0 = b.value("mse0", c.bot_mse0);
    c.bot_common_share = b.value("common_share", c.bot_common_share);
    c.bot_initial = b.value("initial", c.bot_initial);
  }
  c.validate();
  return c;
}

std::string recommendation_message(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "We recommend %.0f kcal", std::round(value));
  return buf;
}

GameSession::GameSession(std::string id, GameConfig config, double created_at)
    : id_(std::move(id)),
      config_(std::move(config)),
      created_at_(created_at),
      theta_rng_(make_stream(config_.seed, 1)),
      fitness_rng_(make_stream(config_.seed, 2)),
      bot_rng_(make_stream(config_.seed, 3)) {
  config_.validate();
  for (std::size_t b = 0; b < config_.n_bots; ++b) {
    Player p;
    p.id = "bot" + std::to_string(b + 1);
    p.bot = true;
    bot_ids_.push_back(p.id);
    players_.emplace(p.id, std::move(p));
  }
  theta_star_ = std::uniform_real_distribution<double>(config_.theta_lo, config_.theta_hi)(theta_rng_);
  phases_.push_back({Phase::practice, 0.0, 0.0, theta_star_});
}

double GameSession::phase_elapsed() const { return clock_ - phase_start_; }

std::string GameSession::add_player() {
  if (phase_ == Phase::finished) throw Conflict("session over");
  Player p;
  p.id = "p" + std::to_string(++humans_);
  const std::string id = p.id;
  players_.emplace(id, std::move(p));
  return id;
}

void GameSession::start(double now) {
  advance(now);
  if (phase_ != Phase::practice) throw Conflict("session already started");
  enter_phase(Phase::open_loop, clock_);
  advance(now);
}

void GameSession::enter_phase(Phase p, double at) {
  phases_.back().end = at;
  phase_ = p;
  phase_start_ = at;
  clock_ = std::max(clock_, at);
  next_tick_ = 0;
  recommendation_.reset();
  for (auto& [id, player] : players_) player.score = 0.0;
  if (p == Phase::finished) return;

  theta_star_ = std::uniform_real_distribution<double>(config_.theta_lo, config_.theta_hi)(theta_rng_);
  phases_.push_back({p, at, at, theta_star_});
  if (config_.n_bots == 0) return;
  std::vector<double> x0 = config_.bot_initial;
  if (x0.empty()) {
    CrowdConfig c;
    c.n = config_.n_bots;
    c.gains = {config_.bot_gain};
    c.noise_sigma = config_.bot_sigma;
    c.state_bound = config_.kappa;
    c.init = TargetMseInit{config_.bot_mse0, config_.bot_common_share};
    x0 = sample_initial_state(c, bot_rng_);
  }
  for (std::size_t b = 0; b < bot_ids_.size(); ++b) players_.at(bot_ids_[b]).x = x0[b];
}

void GameSession::advance(double now) {
  const double t = std::max(to_session_time(now), clock_);
  while (scored(phase_)) {
    const double end = phase_start_ + config_.phase_seconds;
    const double tick = phase_start_ + config_.bot_cadence * static_cast<double>(next_tick_);
    if (config_.n_bots > 0 && tick < end && tick <= t) {
      bot_tick(tick);
      ++next_tick_;
      continue;
    }
    if (end <= t) {
      enter_phase(phase_ == Phase::open_loop ? Phase::soft_feedback : Phase::finished, end);
      continue;
    }
    break;
  }
  clock_ = t;
}

void GameSession::bot_tick(double at) {
  clock_ = at;
  if (next_tick_ > 0) {
    const double beta = phase_ == Phase::soft_feedback ? config_.bot_beta : 0.0;
    // Synchronous: every bot sees the same pre-tick recommendation.
    const double u = recommendation_ ? *recommendation_ - theta_star_ : 0.0;
    const double lo = config_.guess_lo - theta_star_;
    const double hi = config_.guess_hi - theta_star_;
    for (const auto& id : bot_ids_) {
      Player& b = players_.at(id);
      const double noise = config_.bot_sigma * unit_noise(NoiseDist::gaussian, bot_rng_);
      const double own = config_.bot_gain * b.x + noise;
      b.x = std::clamp(beta == 0.0 ? own : (1.0 - beta) * own + beta * u, lo, hi);
    }
  }
  for (const auto& id : bot_ids_) {
    Player& b = players_.at(id);
    record(b, theta_star_ + b.x, at);
  }
}

double GameSession::sample_fitness(double guess) {
  const double z = (guess - theta_star_) / config_.kappa;
  const double h = config_.fitness_noise_halfwidth;
  const double noise = h > 0.0 ? std::uniform_real_distribution<double>(-h, h)(fitness_rng_) : 0.0;
  return config_.f0 - z * z + noise;
}

GuessResult GameSession::record(Player& p, double guess, double at) {
  GuessResult r;
  r.fitness = sample_fitness(guess);
  r.score_delta = scored(phase_) && r.fitness >= config_.score_threshold ? 1 : 0;
  p.score += r.score_delta;
  ++p.guess_count;
  p.last_guess = guess;
  p.last_fitness = r.fitness;
  p.last_phase = phase_;
  p.history.push_back({guess, r.fitness});
  if (p.history.size() > kHistory) p.history.pop_front();
  log_.push_back({phase_, p.id, at, guess, r.fitness, r.score_delta});
  recompute_recommendation();
  r.score_total = p.score;
  r.guess_count = p.guess_count;
  r.recommendation = recommendation_;
  return r;
}

double GameSession::mean_recent_guess() const {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& [id, p] : players_)
    if (p.last_guess && p.last_phase == phase_) {
      sum += *p.last_guess;
      ++count;
    }
  return sum / static_cast<double>(count);
}

void GameSession::recompute_recommendation() {
  if (phase_ == Phase::soft_feedback)
    recommendation_ = mean_recent_guess();
  else
    recommendation_.reset();
}

GuessResult GameSession::submit_guess(const std::string& player, double guess, double now) {
  advance(now);
  if (phase_ == Phase::finished) throw Conflict("session over");
  auto it = players_.find(player);
  if (it == players_.end() || it->second.bot) throw NotFound("unknown player");
  if (!std::isfinite(guess) || guess < config_.guess_lo || guess > config_.guess_hi) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "guess out of range [%g, %g]", config_.guess_lo, config_.guess_hi);
    throw Error(buf);
  }
  return record(it->second, guess, clock_);
}

json GameSession::state_json(const std::string& player) const {
  json j{{"session", id_},
         {"phase", phase_name(phase_)},
         {"clock", clock_},
         {"phase_elapsed", phase_elapsed()},
         {"players", players_.size()}};
  j["phase_remaining"] = scored(phase_) ? json(config_.phase_seconds - phase_elapsed()) : json(nullptr);
  if (recommendation_) {
    j["recommendation"] = *recommendation_;
    j["message"] = recommendation_message(*recommendation_);
  }
  if (!player.empty()) {
    auto it = players_.find(player);
    if (it == players_.end() || it->second.bot) throw NotFound("unknown player");
    const Player& p = it->second;
    json hist = json::array();
    for (const auto& h : p.history) hist.push_back({{"guess", h.guess}, {"fitness", h.fitness}});
    j["player"] = {{"id", p.id},
                   {"guess_count", p.guess_count},
                   {"last_guess", opt(p.last_guess)},
                   {"last_fitness", opt(p.last_fitness)},
                   {"score", p.score},
                   {"history", hist}};
  }
  if (phase_ == Phase::finished) j["phases"] = export_meta()["phases"];
  return j;
}

void GameSession::write_export_csv(std::ostream& out) const {
  if (phase_ != Phase::finished) throw Conflict("session not finished");
  out << "phase,player_id,timestamp_s,guess,fitness,score_delta\n";
  for (const auto& r : log_)
    out << phase_name(r.phase) << ',' << r.player << ',' << format_double(r.timestamp) << ','
        << format_double(r.guess) << ',' << format_double(r.fitness) << ',' << r.score_delta << '\n';
}

json GameSession::export_meta() const {
  json phases = json::array();
  for (const auto& p : phases_)
    phases.push_back({{"phase", phase_name(p.phase)},
                      {"start_s", p.start},
                      {"end_s", p.end},
                      {"theta_star", p.theta_star}});
  json players = json::array();
  for (const auto& [id, p] : players_) players.push_back({{"id", id}, {"bot", p.bot}});
  return json{{"session", id_},
              {"config", config_to_json(config_)},
              {"phases", phases},
              {"players", players},
              {"grid", {{"step_s", config_.bot_cadence},
                        {"points", static_cast<std::size_t>(std::floor(config_.phase_seconds / config_.bot_cadence))}}}};
}

SessionManager::SessionManager(Clock clock, std::uint64_t seed)
    : clock_(std::move(clock)), id_rng_(make_stream(seed, 0x5e55)) {}

std::string SessionManager::create(GameConfig config) {
  std::lock_guard lock(mutex_);
  std::string id;
  do {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(id_rng_()));
    id = buf;
  } while (sessions_.count(id));
  sessions_.emplace(id, std::make_shared<Entry>(id, std::move(config), clock_()));
  return id;
}

std::shared_ptr<SessionManager::Entry> SessionManager::find(const std::string& session) {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(session);
  if (it == sessions_.end()) throw NotFound("unknown session");
  return it->second;
}

std::string SessionManager::add_player(const std::string& session) {
  return with_session(session, [](GameSession& g) { return g.add_player(); });
}

json SessionManager::start(const std::string& session) {
  const double now = clock_();
  return with_session(session, [&](GameSession& g) {
    g.start(now);
    return json{{"phase", phase_name(g.phase())}};
  });
}

json SessionManager::guess(const std::string& session, const std::string& player, double value) {
  const double now = clock_();
  return with_session(session, [&](GameSession& g) {
    const auto r = g.submit_guess(player, value, now);
    json j{{"fitness", r.fitness},
           {"score_delta", r.score_delta},
           {"score_total", r.score_total},
           {"guess_count", r.guess_count}};
    if (r.recommendation) {
      j["recommendation"] = *r.recommendation;
      j["message"] = recommendation_message(*r.recommendation);
    }
    return j;
  });
}

json SessionManager::state(const std::string& session, const std::string& player) {
  return with_session(session, [&](GameSession& g) { return g.state_json(player); });
}

std::string SessionManager::export_csv(const std::string& session) {
  return with_session(session, [](GameSession& g) {
    std::ostringstream os;
    g.write_export_csv(os);
    return os.str();
  });
}

json SessionManager::export_meta(const std::string& session) {
  return with_session(session, [](GameSession& g) {
    if (g.phase() != Phase::finished) throw Conflict("session not finished");
    return g.export_meta();
  });
}

std::vector<LogRow> read_export_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error("empty export file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "phase,player_id,timestamp_s,guess,fitness,score_delta")
    throw Error("export header must be 'phase,player_id,timestamp_s,guess,fitness,score_delta'");
  std::vector<LogRow> rows;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string f[6];
    for (int k = 0; k < 6; ++k)
      if (!std::getline(ss, f[k], k == 5 ? '\n' : ','))
        throw Error("row " + std::to_string(row) + ": expected 6 fields");
    LogRow r;
    try {
      r.phase = phase_from_name(f[0]);
      r.player = f[1];
      r.timestamp = std::stod(f[2]);
      r.guess = std::stod(f[3]);
      r.fitness = std::stod(f[4]);
      r.score_delta = std::stoi(f[5]);
    } catch (const std::exception&) {
      throw Error("row " + std::to_string(row) + ": malformed field");
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<GuessEvent> phase_events(std::span<const LogRow> rows, const PhaseInfo& phase) {
  std::vector<GuessEvent> out;
  for (const auto& r : rows)
    if (r.phase == phase.phase) out.push_back({r.player, r.timestamp - phase.start, r.guess});
  return out;
}

}  // namespace softcrowd::game
