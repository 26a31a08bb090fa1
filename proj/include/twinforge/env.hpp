#pragma once

#include <Eigen/Dense>
#include <array>
#include <optional>
#include <vector>

#include "twinforge/kinematics.hpp"
#include "twinforge/world.hpp"

namespace twinforge::env {

inline constexpr int kObsDim = 17;

// Fixed layout: [t, goal_xy(2), tcp(3), vel_tcp(3), h, w, pos_A(3), pos_B(3)].
struct Observation {
  Eigen::Matrix<double, kObsDim, 1> v = Eigen::Matrix<double, kObsDim, 1>::Zero();

  double t() const { return v[0]; }
  Eigen::Vector2d goal_xy() const { return v.segment<2>(1); }
  Eigen::Vector3d tcp() const { return v.segment<3>(3); }
  Eigen::Vector3d vel_tcp() const { return v.segment<3>(6); }
  double obstacle_h() const { return v[9]; }
  double obstacle_w() const { return v[10]; }
  Eigen::Vector3d pos_A() const { return v.segment<3>(11); }
  Eigen::Vector3d pos_B() const { return v.segment<3>(14); }
};

struct ActionDelta {
  double dx = 0.0, dy = 0.0, dz = 0.0;  // meters, clipped to [-a_max, a_max]

  Eigen::Vector3d vec() const { return {dx, dy, dz}; }
  static ActionDelta clipped(const Eigen::Vector3d& raw, double a_max);
};

struct RewardWeights {
  double c1 = 1.0;
  double c2 = 0.1;
  double c3 = 1.0;
  double d_thre = 0.05;  // meters
  double gamma = 0.99;
};

struct EnvConfig {
  RewardWeights weights;
  double a_max = 0.05;          // meters per step
  int horizon = 100;
  double goal_radius = 0.03;    // meters
  double control_period = 0.05; // seconds, for the tcp velocity estimate
  // Warm-started tracking solves converge in a few iterations; restarts would
  // let a failed solve teleport the arm to a distant configuration.
  kinematics::IkOptions ik{.max_restarts = 0};
};

struct RewardTerms {
  double r_g = 0.0;
  double r_a = 0.0;
  double r_o = 0.0;
};

struct StepOutcome {
  Observation observation;
  double reward = 0.0;
  RewardTerms reward_terms;
  bool terminated = false;  // goal reached or collision
  bool truncated = false;   // horizon hit
  int flag_task = 0;
  int flag_safe = 1;
};

double reward_goal(double d_prev, double d_curr);
double reward_action(const ActionDelta& a);
double reward_obstacle(const world::ClosestPair& pair, double d_thre);
double episode_return(const std::vector<double>& rewards, double gamma);

// Deterministic episodic simulator over a fixed scene; the transition applies
// the Cartesian delta through IK (unreachable targets leave the arm in place).
class Env {
 public:
  Env(kinematics::ArmModel model, EnvConfig config);

  // Throws InvalidStart when start_q collides with the scene.
  Observation reset(const world::Scene& scene, const kinematics::JointConfig& start_q);

  // Throws NotReset before the first reset.
  StepOutcome step(const ActionDelta& a);

  bool done() const { return done_; }
  int step_count() const { return step_count_; }
  int flag_task() const { return flag_task_; }
  int flag_safe() const { return flag_safe_; }
  const kinematics::JointConfig& joint_config() const { return q_; }
  const world::Scene& scene() const { return scene_; }
  const EnvConfig& config() const { return config_; }
  const kinematics::ArmModel& model() const { return model_; }
  double goal_distance() const;

 private:
  Observation make_observation(double t_norm, const Eigen::Vector3d& vel) const;

  kinematics::ArmModel model_;
  EnvConfig config_;
  world::Scene scene_;
  kinematics::JointConfig q_;
  Eigen::Vector3d tcp_ = Eigen::Vector3d::Zero();
  Eigen::Vector3d prev_tcp_ = Eigen::Vector3d::Zero();
  int step_count_ = 0;
  int flag_task_ = 0;
  int flag_safe_ = 1;
  bool active_ = false;
  bool done_ = false;
};

}  // namespace twinforge::env
