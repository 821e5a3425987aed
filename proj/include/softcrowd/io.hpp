// Copyright 2026 The softcrowd Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "softcrowd/dynamics.hpp"

namespace softcrowd {

using json = nlohmann::json;

json policy_to_json(const InfluencePolicy& p);
InfluencePolicy policy_from_json(const json& j);

/// Long format `t,agent_id,x`; inactive cells are omitted. Doubles are
/// written with 17 significant digits so a read-back is exact.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj);

json trajectory_meta_json(const Trajectory& traj);
void write_trajectory_meta(const std::filesystem::path& path, const Trajectory& traj);

/// Reads a long-format trajectory. `agents` = 0 infers the crowd size from
/// the largest agent id. Cells missing from the file are inactive.
Trajectory read_trajectory_csv(std::istream& is, std::size_t agents = 0);
Trajectory read_trajectory_csv(const std::filesystem::path& path);

/// Reads the sidecar metadata, if present, into traj.meta.
void read_trajectory_meta(const std::filesystem::path& path, Trajectory& traj);

/// Sidecar path convention: `run.csv` -> `run.meta.json`.
std::filesystem::path meta_path_for(const std::filesystem::path& csv);

std::string format_double(double v);

json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const json& j);

}  // namespace softcrowd
