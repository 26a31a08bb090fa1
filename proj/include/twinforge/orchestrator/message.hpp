#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "twinforge/kinematics.hpp"
#include "twinforge/world.hpp"

namespace twinforge::orchestrator {

enum class MsgKind { SceneUpdate, CommandBatch, FlagReport, RetrainNotice, SessionEnd };

std::string to_string(MsgKind kind);
MsgKind msg_kind_from_string(const std::string& s);

// Wire envelope: {seq, kind, episode, payload}, 4-byte big-endian length
// prefix + JSON body. Sequence numbers are strictly monotone per sender.
struct TwinMessage {
  std::uint64_t seq = 0;
  MsgKind kind = MsgKind::SessionEnd;
  std::int64_t episode = 0;
  nlohmann::json payload;

  nlohmann::json to_json() const;
  static TwinMessage from_json(const nlohmann::json& j);

  std::vector<std::uint8_t> encode() const;            // length prefix + body
  static TwinMessage decode_body(const std::string&);  // body only
};

nlohmann::json scene_to_json(const world::Scene& scene);
world::Scene scene_from_json(const nlohmann::json& j);

nlohmann::json joints_to_json(const std::vector<kinematics::JointConfig>& traj);
std::vector<kinematics::JointConfig> joints_from_json(const nlohmann::json& j);

}  // namespace twinforge::orchestrator
