#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "twinforge/env.hpp"
#include "twinforge/learner/checkpoint.hpp"
#include "twinforge/learner/ppo.hpp"
#include "twinforge/world.hpp"

namespace twinforge::learner {

// Everything needed to build training/eval episodes: the arm, the MDP
// parameters, the scene distribution, and the fixed start configuration.
struct TrainSetup {
  kinematics::ArmModel model;
  env::EnvConfig env_config;
  world::SceneSamplingParams scene_params;
  kinematics::JointConfig start_q;
};

struct LearnerConfig {
  int hidden = 64;
  double lr = 3e-4;
  double clip_eps = 0.2;
  int epochs = 10;
  int rollout_steps = 2048;
  int minibatch = 64;
  double gae_lambda = 0.95;
  double ent_coef = 0.0;
  double vf_coef = 0.5;
  std::int64_t total_steps = 150000;
  std::int64_t eval_interval = 10240;
  int eval_episodes = 16;
  std::uint64_t seed = 0;
  // "reward converged" rule for resume runs
  double plateau_eps = 0.02;
  int plateau_window = 10;
  int patience = 3;
  double success_target = 0.9;
  std::int64_t max_resume_steps = 200000;
};

struct EvalStats {
  double mean_reward = 0.0;  // undiscounted episode total, averaged
  double success_rate = 0.0;
  double collision_rate = 0.0;
};

struct CurveRow {
  std::int64_t global_step;
  double mean_eval_reward;
  double success_rate;
  double collision_rate;
};

struct TrainResult {
  PolicyCheckpoint best;
  PolicyCheckpoint last;
  std::vector<CurveRow> curve;
  std::int64_t steps_run = 0;
  bool converged = false;  // only meaningful for resume runs
};

// Deterministic-policy evaluation on scenes drawn from fixed per-episode
// seeds, so successive evaluations see identical scenes.
EvalStats evaluate(const TrainSetup& setup, const PolicyParams& params, int episodes,
                   std::uint64_t eval_seed);

// Rollout/update cycles with periodic evaluation, best tracking, and a
// checkpoint series under out_dir (empty out_dir keeps everything in memory).
TrainResult train(const TrainSetup& setup, const LearnerConfig& config,
                  const std::string& out_dir);

// Continues from a checkpoint against a new scene distribution until the
// moving-average reward plateaus with the success target met. Throws
// NoConvergence after max_resume_steps.
TrainResult resume_training(const PolicyCheckpoint& best, const TrainSetup& new_setup,
                            const LearnerConfig& config, const std::string& out_dir);

void write_reward_curve_csv(const std::vector<CurveRow>& curve, const std::string& path);

}  // namespace twinforge::learner
