// Copyright 2026 The softcrowd Authors
// SPDX-License-Identifier: Apache-2.0

// HTTP+JSON front end for SessionManager.

#pragma once

#include <memory>
#include <string>

#include "softcrowd/game.hpp"

namespace httplib {
class Server;
}

namespace softcrowd::game {

/// Routes:
///   POST /sessions                      body: optional GameConfig JSON -> {id}
///   POST /sessions/{id}/players         -> {player_id}
///   POST /sessions/{id}/start           -> {phase}
///   POST /sessions/{id}/guess           body: {player_id, value}
///   GET  /sessions/{id}/state?player=   -> client view
///   GET  /sessions/{id}/export.csv      (finished sessions only)
///   GET  /sessions/{id}/export.json     metadata for the CSV
/// Errors are {"error": message} with 400, 404 or 409.
std::unique_ptr<httplib::Server> make_server(SessionManager& manager, GameConfig defaults = {});

/// Blocks until the server stops.
void serve(SessionManager& manager, const GameConfig& defaults, const std::string& host, int port);

}  // namespace softcrowd::game
