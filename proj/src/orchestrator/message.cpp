#include "twinforge/orchestrator/message.hpp"

#include "twinforge/errors.hpp"

namespace twinforge::orchestrator {

std::string to_string(MsgKind kind) {
  switch (kind) {
    case MsgKind::SceneUpdate: return "scene_update";
    case MsgKind::CommandBatch: return "command_batch";
    case MsgKind::FlagReport: return "flag_report";
    case MsgKind::RetrainNotice: return "retrain_notice";
    case MsgKind::SessionEnd: return "session_end";
  }
  return "unknown";
}

MsgKind msg_kind_from_string(const std::string& s) {
  if (s == "scene_update") return MsgKind::SceneUpdate;
  if (s == "command_batch") return MsgKind::CommandBatch;
  if (s == "flag_report") return MsgKind::FlagReport;
  if (s == "retrain_notice") return MsgKind::RetrainNotice;
  if (s == "session_end") return MsgKind::SessionEnd;
  throw ProtocolViolation("unknown message kind: " + s);
}

nlohmann::json TwinMessage::to_json() const {
  return {{"seq", seq}, {"kind", to_string(kind)}, {"episode", episode}, {"payload", payload}};
}

TwinMessage TwinMessage::from_json(const nlohmann::json& j) {
  TwinMessage m;
  m.seq = j.at("seq").get<std::uint64_t>();
  m.kind = msg_kind_from_string(j.at("kind").get<std::string>());
  m.episode = j.at("episode").get<std::int64_t>();
  m.payload = j.value("payload", nlohmann::json::object());
  return m;
}

std::vector<std::uint8_t> TwinMessage::encode() const {
  const std::string body = to_json().dump();
  const std::uint32_t n = static_cast<std::uint32_t>(body.size());
  std::vector<std::uint8_t> out;
  out.reserve(4 + body.size());
  out.push_back(static_cast<std::uint8_t>((n >> 24) & 0xff));
  out.push_back(static_cast<std::uint8_t>((n >> 16) & 0xff));
  out.push_back(static_cast<std::uint8_t>((n >> 8) & 0xff));
  out.push_back(static_cast<std::uint8_t>(n & 0xff));
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

TwinMessage TwinMessage::decode_body(const std::string& body) {
  return from_json(nlohmann::json::parse(body));
}

nlohmann::json scene_to_json(const world::Scene& scene) {
  auto vec = [](const Eigen::Vector3d& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); };
  nlohmann::json j;
  j["goal"] = vec(scene.goal_pos);
  j["obstacles"] = nlohmann::json::array();
  for (const auto& o : scene.obstacles)
    j["obstacles"].push_back({{"center", vec(o.center)}, {"half_extents", vec(o.half_extents)}});
  j["workspace_bounds"] = {{"lo", vec(scene.workspace_bounds.lo)},
                           {"hi", vec(scene.workspace_bounds.hi)}};
  return j;
}

world::Scene scene_from_json(const nlohmann::json& j) {
  auto vec = [](const nlohmann::json& a) {
    return Eigen::Vector3d(a.at(0).get<double>(), a.at(1).get<double>(), a.at(2).get<double>());
  };
  world::Scene s;
  s.goal_pos = vec(j.at("goal"));
  for (const auto& o : j.at("obstacles"))
    s.obstacles.push_back({vec(o.at("center")), vec(o.at("half_extents"))});
  s.workspace_bounds.lo = vec(j.at("workspace_bounds").at("lo"));
  s.workspace_bounds.hi = vec(j.at("workspace_bounds").at("hi"));
  return s;
}

nlohmann::json joints_to_json(const std::vector<kinematics::JointConfig>& traj) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& q : traj) {
    nlohmann::json row = nlohmann::json::array();
    for (int i = 0; i < kinematics::kNumJoints; ++i) row.push_back(q[i]);
    arr.push_back(row);
  }
  return arr;
}

std::vector<kinematics::JointConfig> joints_from_json(const nlohmann::json& j) {
  std::vector<kinematics::JointConfig> out;
  for (const auto& row : j) {
    kinematics::JointConfig q;
    for (int i = 0; i < kinematics::kNumJoints; ++i) q[i] = row.at(i).get<double>();
    out.push_back(q);
  }
  return out;
}

}  // namespace twinforge::orchestrator
