// Copyright 2026 The softcrowd Authors
// SPDX-License-Identifier: Apache-2.0

#include "softcrowd/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace softcrowd {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("file not found: " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write: " + path.string());
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json policy_to_json(const InfluencePolicy& p) {
  return std::visit(overloaded{
                        [](const policy::Off&) { return json{{"kind", "off"}}; },
                        [](const policy::Constant& c) {
                          return json{{"kind", "constant"}, {"beta", c.beta}};
                        },
                        [](const policy::DistanceProfile& d) {
                          return json{{"kind", "distance_profile"}, {"c", d.c}};
                        },
                        [](const policy::Schedule& s) {
                          return json{{"kind", "schedule"}, {"betas", s.betas}};
                        },
                    },
                    p);
}

InfluencePolicy policy_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "off") return policy::Off{};
  if (kind == "constant") return policy::Constant{j.at("beta").get<double>()};
  if (kind == "distance_profile") return policy::DistanceProfile{j.at("c").get<double>()};
  if (kind == "schedule") return policy::Schedule{j.at("betas").get<std::vector<double>>()};
  throw Error("unknown policy kind: " + kind);
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  os << "t,agent_id,x\n";
  for (const auto& s : traj.states)
    for (std::size_t i = 0; i < s.size(); ++i)
      if (s.is_active(i)) os << s.t << ',' << i << ',' << format_double(s.x[i]) << '\n';
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj) {
  auto out = open_out(path);
  write_trajectory_csv(out, traj);
}

json trajectory_meta_json(const Trajectory& traj) {
  return json{{"n", traj.meta.n},
              {"gains", traj.meta.gains},
              {"noise_sigma", traj.meta.noise_sigma},
              {"seed", traj.meta.seed},
              {"policy", policy_to_json(traj.meta.policy)},
              {"horizon", traj.horizon()},
              {"config_digest", traj.config_digest},
              {"dropped_agents", traj.dropped_agents}};
}

void write_trajectory_meta(const std::filesystem::path& path, const Trajectory& traj) {
  write_json_file(path, trajectory_meta_json(traj));
}

Trajectory read_trajectory_csv(std::istream& is, std::size_t agents) {
  std::string line;
  if (!std::getline(is, line)) throw Error("empty trajectory file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t,agent_id,x") throw Error("trajectory header must be 't,agent_id,x'");

  std::map<std::size_t, std::map<std::size_t, double>> cells;
  std::size_t max_agent = 0;
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string ft, fa, fx;
    if (!std::getline(ss, ft, ',') || !std::getline(ss, fa, ',') || !std::getline(ss, fx))
      throw Error("row " + std::to_string(row) + ": expected 3 fields");
    std::size_t t = 0, a = 0;
    double x = 0.0;
    try {
      std::size_t used = 0;
      t = std::stoul(ft, &used);
      if (used != ft.size()) throw std::invalid_argument("t");
      a = std::stoul(fa, &used);
      if (used != fa.size()) throw std::invalid_argument("agent_id");
      x = std::stod(fx, &used);
      if (used != fx.size()) throw std::invalid_argument("x");
    } catch (const std::exception&) {
      throw Error("row " + std::to_string(row) + ": non-numeric field");
    }
    if (!std::isfinite(x)) throw Error("row " + std::to_string(row) + ": non-finite x");
    if (!cells[t].emplace(a, x).second)
      throw Error("row " + std::to_string(row) + ": duplicate (t, agent_id)");
    max_agent = std::max(max_agent, a);
  }
  if (cells.empty()) throw Error("trajectory has no rows");
  const std::size_t n = agents ? agents : max_agent + 1;
  if (max_agent >= n) throw Error("agent_id out of range");
  const std::size_t horizon = cells.rbegin()->first + 1;

  Trajectory traj;
  traj.meta.n = n;
  for (std::size_t t = 0; t < horizon; ++t) {
    CrowdState s{t, std::vector<double>(n, 0.0), std::vector<std::uint8_t>(n, 0)};
    bool all = true;
    if (auto it = cells.find(t); it != cells.end())
      for (auto [a, x] : it->second) {
        s.x[a] = x;
        s.active[a] = 1;
      }
    for (auto a : s.active) all = all && a != 0;
    if (all) s.active.clear();
    if (s.active_count() == 0) throw Error("step " + std::to_string(t) + " has no agents");
    traj.states.push_back(std::move(s));
  }
  finalize(traj);
  return traj;
}

Trajectory read_trajectory_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::size_t agents = 0;
  const auto meta = meta_path_for(path);
  json j;
  if (std::filesystem::exists(meta)) {
    j = read_json_file(meta);
    agents = j.value("n", std::size_t{0});
  }
  Trajectory traj = read_trajectory_csv(in, agents);
  if (!j.is_null()) read_trajectory_meta(path, traj);
  return traj;
}

void read_trajectory_meta(const std::filesystem::path& path, Trajectory& traj) {
  const auto meta = meta_path_for(path);
  if (!std::filesystem::exists(meta)) return;
  const json j = read_json_file(meta);
  traj.meta.n = j.value("n", traj.meta.n);
  traj.meta.gains = j.value("gains", std::vector<double>{});
  traj.meta.noise_sigma = j.value("noise_sigma", 0.0);
  traj.meta.seed = j.value("seed", std::uint64_t{0});
  traj.seed = traj.meta.seed;
  if (j.contains("policy")) traj.meta.policy = policy_from_json(j.at("policy"));
  traj.config_digest = j.value("config_digest", std::uint64_t{0});
  traj.dropped_agents = j.value("dropped_agents", std::size_t{0});
}

std::filesystem::path meta_path_for(const std::filesystem::path& csv) {
  auto p = csv;
  p.replace_extension(".meta.json");
  return p;
}

json read_json_file(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

}  // namespace softcrowd
