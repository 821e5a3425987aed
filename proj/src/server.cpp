// Copyright 2026 The softcrowd Authors
// SPDX-License-Identifier: Apache-2.0

#include "softcrowd/server.hpp"

#include <httplib.h>

namespace softcrowd::game {

namespace {

void reply(httplib::Response& res, const json& j, int status = 200) {
  res.status = status;
  res.set_content(j.dump(), "application/json");
}

// Maps library errors onto HTTP statuses.
template <class F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const NotFound& e) {
      reply(res, {{"error", e.what()}}, 404);
    } catch (const Conflict& e) {
      reply(res, {{"error", e.what()}}, 409);
    } catch (const json::exception& e) {
      reply(res, {{"error", std::string("bad request: ") + e.what()}}, 400);
    } catch (const std::exception& e) {
      reply(res, {{"error", e.what()}}, 400);
    }
  };
}

json body_json(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  return json::parse(req.body);
}

}  // namespace

std::unique_ptr<httplib::Server> make_server(SessionManager& manager, GameConfig defaults) {
  auto srv = std::make_unique<httplib::Server>();
  auto& m = manager;

  srv->Post("/sessions", guarded([&m, defaults](const httplib::Request& req, httplib::Response& res) {
    json merged = config_to_json(defaults);
    merged.merge_patch(body_json(req));
    reply(res, {{"id", m.create(config_from_json(merged))}}, 201);
  }));
  srv->Post(R"(/sessions/([^/]+)/players)", guarded([&m](const httplib::Request& req, httplib::Response& res) {
    reply(res, {{"player_id", m.add_player(req.matches[1])}}, 201);
  }));
  srv->Post(R"(/sessions/([^/]+)/start)", guarded([&m](const httplib::Request& req, httplib::Response& res) {
    reply(res, m.start(req.matches[1]));
  }));
  srv->Post(R"(/sessions/([^/]+)/guess)", guarded([&m](const httplib::Request& req, httplib::Response& res) {
    const json b = body_json(req);
    reply(res, m.guess(req.matches[1], b.at("player_id").get<std::string>(), b.at("value").get<double>()));
  }));
  srv->Get(R"(/sessions/([^/]+)/state)", guarded([&m](const httplib::Request& req, httplib::Response& res) {
    reply(res, m.state(req.matches[1], req.has_param("player") ? req.get_param_value("player") : ""));
  }));
  srv->Get(R"(/sessions/([^/]+)/export\.csv)", guarded([&m](const httplib::Request& req, httplib::Response& res) {
    res.set_content(m.export_csv(req.matches[1]), "text/csv");
  }));
  srv->Get(R"(/sessions/([^/]+)/export\.json)", guarded([&m](const httplib::Request& req, httplib::Response& res) {
    reply(res, m.export_meta(req.matches[1]));
  }));
  return srv;
}

void serve(SessionManager& manager, const GameConfig& defaults, const std::string& host, int port) {
  auto srv = make_server(manager, defaults);
  if (!srv->listen(host, port)) throw Error("cannot listen on " + host + ":" + std::to_string(port));
}

}  // namespace softcrowd::game
