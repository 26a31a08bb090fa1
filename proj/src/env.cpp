#include "twinforge/env.hpp"

#include <algorithm>
#include <cmath>

#include "twinforge/errors.hpp"

namespace twinforge::env {

ActionDelta ActionDelta::clipped(const Eigen::Vector3d& raw, double a_max) {
  ActionDelta a;
  a.dx = std::clamp(raw.x(), -a_max, a_max);
  a.dy = std::clamp(raw.y(), -a_max, a_max);
  a.dz = std::clamp(raw.z(), -a_max, a_max);
  return a;
}

double reward_goal(double d_prev, double d_curr) { return d_prev - d_curr; }

double reward_action(const ActionDelta& a) { return -a.vec().norm(); }

double reward_obstacle(const world::ClosestPair& pair, double d_thre) {
  return pair.distance < d_thre ? -1.0 : 0.0;
}

double episode_return(const std::vector<double>& rewards, double gamma) {
  double g = 0.0;
  double w = 1.0;
  for (double r : rewards) {
    g += w * r;
    w *= gamma;
  }
  return g;
}

Env::Env(kinematics::ArmModel model, EnvConfig config)
    : model_(std::move(model)), config_(config) {}

double Env::goal_distance() const { return (tcp_ - scene_.goal_pos).norm(); }

Observation Env::make_observation(double t_norm, const Eigen::Vector3d& vel) const {
  const world::ClosestPair pair = world::scene_closest(model_, q_, scene_);
  const world::BoxObstacle& nearest = scene_.obstacles[pair.obstacle_index];
  Observation o;
  o.v[0] = t_norm;
  o.v.segment<2>(1) = scene_.goal_pos.head<2>();
  o.v.segment<3>(3) = tcp_;
  o.v.segment<3>(6) = vel;
  o.v[9] = nearest.height();
  o.v[10] = nearest.width();
  o.v.segment<3>(11) = pair.pos_A;
  o.v.segment<3>(14) = pair.pos_B;
  return o;
}

Observation Env::reset(const world::Scene& scene, const kinematics::JointConfig& start_q) {
  scene_ = scene;
  q_ = kinematics::clamp_to_limits(model_, start_q);
  if (world::in_collision(model_, q_, scene_))
    throw InvalidStart("start configuration collides with the scene");
  tcp_ = kinematics::forward_kinematics(model_, q_).pose.position;
  prev_tcp_ = tcp_;
  step_count_ = 0;
  flag_task_ = 0;
  flag_safe_ = 1;
  active_ = true;
  done_ = false;
  return make_observation(0.0, Eigen::Vector3d::Zero());
}

StepOutcome Env::step(const ActionDelta& a_raw) {
  if (!active_) throw NotReset("step called before reset");

  const ActionDelta a = ActionDelta::clipped(a_raw.vec(), config_.a_max);
  const double d_prev = goal_distance();

  const Eigen::Vector3d target = tcp_ + a.vec();
  const auto ik = kinematics::solve_ik(model_, target, q_, config_.ik);
  if (ik.success) {
    q_ = ik.q;
  }
  // Unreachable targets leave the arm in place; the step still counts.
  prev_tcp_ = tcp_;
  tcp_ = kinematics::forward_kinematics(model_, q_).pose.position;
  step_count_ += 1;

  const world::ClosestPair pair = world::scene_closest(model_, q_, scene_);
  const bool collided = pair.distance < 0.0;
  const double d_curr = goal_distance();

  StepOutcome out;
  out.reward_terms.r_g = reward_goal(d_prev, d_curr);
  out.reward_terms.r_a = reward_action(a);
  out.reward_terms.r_o = collided ? -1.0 : reward_obstacle(pair, config_.weights.d_thre);
  out.reward = config_.weights.c1 * out.reward_terms.r_g +
               config_.weights.c2 * out.reward_terms.r_a +
               config_.weights.c3 * out.reward_terms.r_o;

  if (collided) {
    flag_safe_ = 0;
    out.terminated = true;
  } else if (d_curr <= config_.goal_radius) {
    flag_task_ = 1;
    out.terminated = true;
  } else if (step_count_ >= config_.horizon) {
    out.truncated = true;
  }
  done_ = out.terminated || out.truncated;

  const Eigen::Vector3d vel = (tcp_ - prev_tcp_) / config_.control_period;
  out.observation = make_observation(
      std::min(1.0, static_cast<double>(step_count_) / config_.horizon), vel);
  out.flag_task = flag_task_;
  out.flag_safe = flag_safe_;
  return out;
}

}  // namespace twinforge::env
