#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "twinforge/env.hpp"
#include "twinforge/learner/train.hpp"
#include "twinforge/orchestrator/channel.hpp"
#include "twinforge/perception.hpp"

namespace twinforge::orchestrator {

enum class RetrainReason { None, Collision, GoalNotReached };

std::string to_string(RetrainReason r);

// Collision dominates when both flags fail.
RetrainReason detect_interrupt(int flag_task, int flag_safe);

// Deterministic policy used for twin episodes (mean action, no sampling).
class TwinPolicy {
 public:
  virtual ~TwinPolicy() = default;
  virtual env::ActionDelta act(const env::Observation& obs) = 0;
};

class ParamsPolicy final : public TwinPolicy {
 public:
  ParamsPolicy(learner::PolicyParams params, double a_max)
      : params_(std::move(params)), a_max_(a_max) {}
  env::ActionDelta act(const env::Observation& obs) override {
    return learner::act_deterministic(obs, params_, a_max_);
  }
  learner::PolicyParams& params() { return params_; }

 private:
  learner::PolicyParams params_;
  double a_max_;
};

// Scripted baseline: walks the TCP straight toward the goal at table height.
class StraightLinePolicy final : public TwinPolicy {
 public:
  StraightLinePolicy(double a_max, double goal_z) : a_max_(a_max), goal_z_(goal_z) {}
  env::ActionDelta act(const env::Observation& obs) override {
    const Eigen::Vector2d g = obs.goal_xy();
    const Eigen::Vector3d delta = Eigen::Vector3d(g.x(), g.y(), goal_z_) - obs.tcp();
    return env::ActionDelta::clipped(delta, a_max_);
  }

 private:
  double a_max_;
  double goal_z_;
};

struct RetrainOutcome {
  std::int64_t steps_used = 0;
};

// Invoked on a twin failure; implementations mutate the policy in place.
class Retrainer {
 public:
  virtual ~Retrainer() = default;
  virtual RetrainOutcome retrain(const world::Scene& scene_estimate, RetrainReason reason) = 0;
};

// No-op retrainer for stub/smoke runs.
class NullRetrainer final : public Retrainer {
 public:
  RetrainOutcome retrain(const world::Scene&, RetrainReason) override { return {}; }
};

// resume_training against the perceived scene with +-10% size jitter.
class LearnerRetrainer final : public Retrainer {
 public:
  LearnerRetrainer(ParamsPolicy& policy, learner::PolicyCheckpoint checkpoint,
                   learner::TrainSetup setup, learner::LearnerConfig config,
                   std::string out_dir);
  RetrainOutcome retrain(const world::Scene& scene_estimate, RetrainReason reason) override;

 private:
  ParamsPolicy& policy_;
  learner::PolicyCheckpoint checkpoint_;
  learner::TrainSetup setup_;
  learner::LearnerConfig config_;
  std::string out_dir_;
  int round_ = 0;
};

struct TwinEpisodeResult {
  std::vector<kinematics::JointConfig> trajectory;
  int flag_task = 0;
  int flag_safe = 1;
  double total_reward = 0.0;
  int steps = 0;
};

TwinEpisodeResult run_twin_episode(TwinPolicy& policy, const world::Scene& scene_estimate,
                                   const kinematics::ArmModel& model,
                                   const env::EnvConfig& env_config,
                                   const kinematics::JointConfig& start_q);

struct EpisodeRecord {
  std::int64_t episode = 0;
  int flag_task = 0;
  int flag_safe = 1;
  int retrain_count = 0;
  std::int64_t retrain_steps = 0;
  std::string retrain_reason;  // first trigger, empty when none
  bool published = false;
  double wall_time_s = 0.0;

  nlohmann::json to_json() const;               // full record
  nlohmann::json to_canonical_json() const;     // without wall time
  static EpisodeRecord from_json(const nlohmann::json& j);
};

struct SessionLog {
  std::vector<EpisodeRecord> records;
  std::string end_reason;

  void save_jsonl(const std::string& path) const;
  static SessionLog load_jsonl(const std::string& path);
  nlohmann::json to_canonical_json() const;
};

struct OrchestratorConfig {
  int max_retrain_rounds = 5;  // per episode, before giving up
  std::chrono::milliseconds recv_timeout{30000};
};

// Algorithm-1 twin loop: per episode, consume a SceneUpdate, run the twin one
// episode ahead, and publish the joint commands only when the twin run was
// both successful and safe; otherwise retrain and re-run.
SessionLog orchestrate(Channel& plant, TwinPolicy& policy, Retrainer& retrainer,
                       const kinematics::ArmModel& model, const env::EnvConfig& env_config,
                       const kinematics::JointConfig& start_q, const OrchestratorConfig& config);

// Scene mutation applied to the plant's ground truth at a scheduled episode.
struct Perturbation {
  std::int64_t episode = 0;
  double height_scale = 1.0;
  double width_scale = 1.0;
};

struct PerturbationSchedule {
  std::vector<Perturbation> entries;  // episode indices strictly increasing
  void validate() const;
};

struct PlantEpisodeRecord {
  std::int64_t episode = 0;
  int twin_flag_task = 0;
  int twin_flag_safe = 1;
  int retrain_notices = 0;
  bool goal_reached = false;   // ground-truth replay outcome
  bool collided = false;
  bool agrees_with_twin = false;

  nlohmann::json to_json() const;
};

struct PlantLog {
  std::vector<PlantEpisodeRecord> records;
  std::string end_reason;
  void save_jsonl(const std::string& path) const;
};

struct PlantConfig {
  std::int64_t num_episodes = 10;
  perception::CameraModel camera;
  perception::Calibration calibration;
  PerturbationSchedule schedule;
  std::uint64_t seed = 0;
  std::chrono::milliseconds recv_timeout{600000};
};

// Simulated physical side: perceives the true scene, publishes SceneUpdates,
// and audits received command batches against ground truth.
PlantLog run_plant(Channel& twin, const kinematics::ArmModel& model,
                   const world::Scene& initial_scene, const env::EnvConfig& env_config,
                   const kinematics::JointConfig& start_q, const PlantConfig& config);

}  // namespace twinforge::orchestrator
