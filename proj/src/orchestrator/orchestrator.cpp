#include "twinforge/orchestrator/orchestrator.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>

#include "twinforge/errors.hpp"

namespace twinforge::orchestrator {

std::string to_string(RetrainReason r) {
  switch (r) {
    case RetrainReason::None: return "none";
    case RetrainReason::Collision: return "collision";
    case RetrainReason::GoalNotReached: return "goal_not_reached";
  }
  return "unknown";
}

RetrainReason detect_interrupt(int flag_task, int flag_safe) {
  if (flag_safe == 0) return RetrainReason::Collision;
  if (flag_task == 0) return RetrainReason::GoalNotReached;
  return RetrainReason::None;
}

TwinEpisodeResult run_twin_episode(TwinPolicy& policy, const world::Scene& scene_estimate,
                                   const kinematics::ArmModel& model,
                                   const env::EnvConfig& env_config,
                                   const kinematics::JointConfig& start_q) {
  env::Env e(model, env_config);
  env::Observation obs = e.reset(scene_estimate, start_q);
  TwinEpisodeResult res;
  res.trajectory.push_back(e.joint_config());
  while (!e.done()) {
    const env::StepOutcome out = e.step(policy.act(obs));
    res.trajectory.push_back(e.joint_config());
    res.total_reward += out.reward;
    obs = out.observation;
  }
  res.flag_task = e.flag_task();
  res.flag_safe = e.flag_safe();
  res.steps = e.step_count();
  return res;
}

LearnerRetrainer::LearnerRetrainer(ParamsPolicy& policy, learner::PolicyCheckpoint checkpoint,
                                   learner::TrainSetup setup, learner::LearnerConfig config,
                                   std::string out_dir)
    : policy_(policy),
      checkpoint_(std::move(checkpoint)),
      setup_(std::move(setup)),
      config_(config),
      out_dir_(std::move(out_dir)) {}

RetrainOutcome LearnerRetrainer::retrain(const world::Scene& scene_estimate,
                                         RetrainReason /*reason*/) {
  // Retrain against the perceived obstacle size, jittered +-10% so the policy
  // generalizes past one noisy estimate.
  learner::TrainSetup setup = setup_;
  if (!scene_estimate.obstacles.empty()) {
    const auto& box = scene_estimate.obstacles.front();
    setup.scene_params.obstacle_h_min = 0.9 * box.height();
    setup.scene_params.obstacle_h_max = 1.1 * box.height();
    setup.scene_params.obstacle_w_min = 0.9 * box.width();
    setup.scene_params.obstacle_w_max = 1.1 * box.width();
  }
  learner::LearnerConfig cfg = config_;
  cfg.seed = config_.seed + 1000003ull * static_cast<std::uint64_t>(++round_);

  std::string dir;
  if (!out_dir_.empty()) dir = out_dir_ + "/retrain_" + std::to_string(round_);
  const learner::TrainResult result = learner::resume_training(checkpoint_, setup, cfg, dir);
  checkpoint_ = result.best;
  policy_.params() = result.best.params;

  RetrainOutcome out;
  out.steps_used = result.steps_run;
  return out;
}

nlohmann::json EpisodeRecord::to_canonical_json() const {
  return {{"episode", episode},        {"flag_task", flag_task},
          {"flag_safe", flag_safe},    {"retrain_count", retrain_count},
          {"retrain_steps", retrain_steps}, {"retrain_reason", retrain_reason},
          {"published", published}};
}

nlohmann::json EpisodeRecord::to_json() const {
  nlohmann::json j = to_canonical_json();
  j["wall_time_s"] = wall_time_s;
  return j;
}

EpisodeRecord EpisodeRecord::from_json(const nlohmann::json& j) {
  EpisodeRecord r;
  r.episode = j.at("episode").get<std::int64_t>();
  r.flag_task = j.at("flag_task").get<int>();
  r.flag_safe = j.at("flag_safe").get<int>();
  r.retrain_count = j.at("retrain_count").get<int>();
  r.retrain_steps = j.at("retrain_steps").get<std::int64_t>();
  r.retrain_reason = j.at("retrain_reason").get<std::string>();
  r.published = j.at("published").get<bool>();
  r.wall_time_s = j.value("wall_time_s", 0.0);
  return r;
}

void SessionLog::save_jsonl(const std::string& path) const {
  std::ofstream out(path);
  for (const auto& r : records) out << r.to_json().dump() << "\n";
  out << nlohmann::json{{"session_end", end_reason}}.dump() << "\n";
}

SessionLog SessionLog::load_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open session log: " + path);
  SessionLog log;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    if (j.contains("session_end"))
      log.end_reason = j["session_end"].get<std::string>();
    else
      log.records.push_back(EpisodeRecord::from_json(j));
  }
  return log;
}

nlohmann::json SessionLog::to_canonical_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : records) arr.push_back(r.to_canonical_json());
  return {{"records", arr}, {"end_reason", end_reason}};
}

SessionLog orchestrate(Channel& plant, TwinPolicy& policy, Retrainer& retrainer,
                       const kinematics::ArmModel& model, const env::EnvConfig& env_config,
                       const kinematics::JointConfig& start_q, const OrchestratorConfig& config) {
  SessionLog log;
  for (;;) {
    auto msg = plant.recv(config.recv_timeout);
    if (!msg) {
      log.end_reason = "plant unreachable";
      break;
    }
    if (msg->kind == MsgKind::SessionEnd) {
      log.end_reason = msg->payload.value("reason", "session end");
      break;
    }
    if (msg->kind != MsgKind::SceneUpdate)
      throw ProtocolViolation("twin expected scene_update, got " + to_string(msg->kind));

    const std::int64_t k = msg->episode;
    const world::Scene estimate = scene_from_json(msg->payload);

    EpisodeRecord rec;
    rec.episode = k;
    const auto t0 = std::chrono::steady_clock::now();

    TwinEpisodeResult twin = run_twin_episode(policy, estimate, model, env_config, start_q);
    plant.send(plant.make(MsgKind::FlagReport, k,
                          {{"flag_task", twin.flag_task}, {"flag_safe", twin.flag_safe}}));

    bool failed_session = false;
    int rounds = 0;
    while (!(twin.flag_task == 1 && twin.flag_safe == 1)) {
      const RetrainReason reason = detect_interrupt(twin.flag_task, twin.flag_safe);
      if (rec.retrain_reason.empty()) rec.retrain_reason = to_string(reason);
      plant.send(plant.make(MsgKind::RetrainNotice, k, {{"reason", to_string(reason)}}));
      if (++rounds > config.max_retrain_rounds) {
        log.end_reason = "retrain rounds exhausted at episode " + std::to_string(k);
        failed_session = true;
        break;
      }
      try {
        const RetrainOutcome out = retrainer.retrain(estimate, reason);
        rec.retrain_count += 1;
        rec.retrain_steps += out.steps_used;
      } catch (const NoConvergence& e) {
        log.end_reason = std::string("no convergence: ") + e.what();
        failed_session = true;
        break;
      }
      twin = run_twin_episode(policy, estimate, model, env_config, start_q);
      plant.send(plant.make(MsgKind::FlagReport, k,
                            {{"flag_task", twin.flag_task}, {"flag_safe", twin.flag_safe}}));
    }

    rec.flag_task = twin.flag_task;
    rec.flag_safe = twin.flag_safe;
    if (failed_session) {
      rec.published = false;
      rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      log.records.push_back(rec);
      plant.send(plant.make(MsgKind::SessionEnd, k, {{"reason", log.end_reason}}));
      break;
    }

    plant.send(plant.make(MsgKind::CommandBatch, k, {{"joints", joints_to_json(twin.trajectory)}}));
    rec.published = true;
    rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    log.records.push_back(rec);
  }
  return log;
}

void PerturbationSchedule::validate() const {
  for (size_t i = 1; i < entries.size(); ++i)
    if (entries[i].episode <= entries[i - 1].episode)
      throw std::invalid_argument("perturbation episodes must strictly increase");
}

nlohmann::json PlantEpisodeRecord::to_json() const {
  return {{"episode", episode},
          {"twin_flag_task", twin_flag_task},
          {"twin_flag_safe", twin_flag_safe},
          {"retrain_notices", retrain_notices},
          {"goal_reached", goal_reached},
          {"collided", collided},
          {"agrees_with_twin", agrees_with_twin}};
}

void PlantLog::save_jsonl(const std::string& path) const {
  std::ofstream out(path);
  for (const auto& r : records) out << r.to_json().dump() << "\n";
  out << nlohmann::json{{"session_end", end_reason}}.dump() << "\n";
}

namespace {

void apply_perturbations(world::Scene& scene, const PerturbationSchedule& schedule,
                         std::int64_t episode) {
  for (const auto& p : schedule.entries) {
    if (p.episode != episode) continue;
    for (auto& box : scene.obstacles) {
      box.half_extents.x() *= p.width_scale;
      box.half_extents.y() *= p.width_scale;
      box.half_extents.z() *= p.height_scale;
      box.center.z() = box.half_extents.z();  // keep it resting on the table
    }
  }
}

}  // namespace

PlantLog run_plant(Channel& twin, const kinematics::ArmModel& model,
                   const world::Scene& initial_scene, const env::EnvConfig& env_config,
                   const kinematics::JointConfig& start_q, const PlantConfig& config) {
  world::Scene scene = initial_scene;
  Rng rng = make_rng(config.seed, "plant-perception");
  PlantLog log;

  for (std::int64_t k = 0; k < config.num_episodes; ++k) {
    apply_perturbations(scene, config.schedule, k);

    // A dropped goal detection just means another frame is grabbed.
    world::Scene estimate;
    for (int frame = 0;; ++frame) {
      const auto detections =
          perception::synth_detect(scene, config.camera, config.calibration, rng);
      try {
        estimate = perception::estimate_scene(detections, config.calibration,
                                              scene.workspace_bounds);
        break;
      } catch (const NoGoalDetected&) {
        if (frame > 1000) throw;
      }
    }
    twin.send(twin.make(MsgKind::SceneUpdate, k, scene_to_json(estimate)));

    PlantEpisodeRecord rec;
    rec.episode = k;
    bool done = false;
    while (!done) {
      auto msg = twin.recv(config.recv_timeout);
      if (!msg) {
        log.end_reason = "twin unreachable";
        log.records.push_back(rec);
        return log;
      }
      switch (msg->kind) {
        case MsgKind::FlagReport:
          rec.twin_flag_task = msg->payload.at("flag_task").get<int>();
          rec.twin_flag_safe = msg->payload.at("flag_safe").get<int>();
          break;
        case MsgKind::RetrainNotice:
          rec.retrain_notices += 1;
          break;
        case MsgKind::CommandBatch: {
          const auto traj = joints_from_json(msg->payload.at("joints"));
          for (const auto& q : traj)
            if (world::in_collision(model, q, scene)) rec.collided = true;
          if (!traj.empty()) {
            const Eigen::Vector3d tcp =
                kinematics::forward_kinematics(model, traj.back()).pose.position;
            rec.goal_reached = (tcp - scene.goal_pos).norm() <= env_config.goal_radius;
          }
          rec.agrees_with_twin = (rec.goal_reached == (rec.twin_flag_task == 1)) &&
                                 (!rec.collided == (rec.twin_flag_safe == 1));
          done = true;
          break;
        }
        case MsgKind::SessionEnd:
          log.end_reason = msg->payload.value("reason", "twin ended session");
          log.records.push_back(rec);
          return log;
        default:
          throw ProtocolViolation("plant received unexpected " + to_string(msg->kind));
      }
    }
    log.records.push_back(rec);
  }

  log.end_reason = "completed";
  twin.send(twin.make(MsgKind::SessionEnd, config.num_episodes, {{"reason", "completed"}}));
  return log;
}

}  // namespace twinforge::orchestrator
