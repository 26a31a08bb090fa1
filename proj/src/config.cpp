#include "twinforge/config.hpp"

#include <iomanip>
#include <sstream>

namespace twinforge::config {

RunConfig::RunConfig() {
  scene.bounds.lo = Eigen::Vector3d(0.25, -0.15, 0.0);
  scene.bounds.hi = Eigen::Vector3d(0.45, 0.15, 0.4);
  scene.table_z = 0.025;
  scene.obstacle_h_min = 0.04;
  scene.obstacle_h_max = 0.08;
  scene.obstacle_w_min = 0.05;
  scene.obstacle_w_max = 0.10;
  // wider than the sampler's own default: with 0.15 m of goal clearance the
  // final descent never grazes the obstacle-penalty band, which otherwise
  // couples goal-reaching to proximity penalties and stalls training
  scene.min_separation = 0.15;
}

kinematics::ArmModel RunConfig::arm() const {
  if (arm_file.empty()) return kinematics::ArmModel::reference_arm();
  return kinematics::ArmModel::load_json(arm_file);
}

kinematics::JointConfig RunConfig::start_config() const {
  kinematics::JointConfig q;
  for (int i = 0; i < kinematics::kNumJoints; ++i) q[i] = start_q[i];
  return q;
}

perception::Calibration experiment_calibration() {
  perception::Calibration c;
  c.offset_x = 0.55;
  c.offset_y = -0.29;
  return c;
}

perception::Calibration RunConfig::calibration() const {
  if (calibration_file.empty()) return experiment_calibration();
  return perception::Calibration::load_json(calibration_file);
}

perception::CameraModel RunConfig::camera() const {
  perception::CameraModel cam;
  cam.image_w = 660.0;
  cam.image_h = 540.0;
  cam.corners = {Eigen::Vector2d(0, 0), Eigen::Vector2d(660, 0), Eigen::Vector2d(660, 540),
                 Eigen::Vector2d(0, 540)};
  cam.pixel_noise_sigma = pixel_noise_sigma;
  cam.false_negative_rate = false_negative_rate;
  return cam;
}

learner::TrainSetup RunConfig::train_setup() const {
  learner::TrainSetup setup;
  setup.model = arm();
  setup.env_config = env;
  setup.scene_params = scene;
  setup.start_q = start_config();
  return setup;
}

orchestrator::PerturbationSchedule RunConfig::schedule() const {
  orchestrator::PerturbationSchedule s;
  if (perturb_episode >= 0)
    s.entries.push_back({perturb_episode, perturb_height, perturb_width});
  s.validate();
  return s;
}

std::string to_toml(const RunConfig& cfg) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "seed=" << cfg.seed << "\n";
  out << "out=\"" << cfg.out_dir << "\"\n";
  out << "arm-file=\"" << cfg.arm_file << "\"\n";
  out << "start-q=[";
  for (int i = 0; i < kinematics::kNumJoints; ++i)
    out << (i ? "," : "") << cfg.start_q[i];
  out << "]\n\n";

  // flat dotted keys: they must match the CLI option names verbatim
  out << "env.c1=" << cfg.env.weights.c1 << "\n";
  out << "env.c2=" << cfg.env.weights.c2 << "\n";
  out << "env.c3=" << cfg.env.weights.c3 << "\n";
  out << "env.d_thre=" << cfg.env.weights.d_thre << "\n";
  out << "env.gamma=" << cfg.env.weights.gamma << "\n";
  out << "env.a_max=" << cfg.env.a_max << "\n";
  out << "env.horizon=" << cfg.env.horizon << "\n";
  out << "env.goal_radius=" << cfg.env.goal_radius << "\n";
  out << "env.control_period=" << cfg.env.control_period << "\n\n";

  out << "scene.x_min=" << cfg.scene.bounds.lo.x() << "\n";
  out << "scene.x_max=" << cfg.scene.bounds.hi.x() << "\n";
  out << "scene.y_min=" << cfg.scene.bounds.lo.y() << "\n";
  out << "scene.y_max=" << cfg.scene.bounds.hi.y() << "\n";
  out << "scene.z_max=" << cfg.scene.bounds.hi.z() << "\n";
  out << "scene.table_z=" << cfg.scene.table_z << "\n";
  out << "scene.obstacle_h_min=" << cfg.scene.obstacle_h_min << "\n";
  out << "scene.obstacle_h_max=" << cfg.scene.obstacle_h_max << "\n";
  out << "scene.obstacle_w_min=" << cfg.scene.obstacle_w_min << "\n";
  out << "scene.obstacle_w_max=" << cfg.scene.obstacle_w_max << "\n";
  out << "scene.min_separation=" << cfg.scene.min_separation << "\n\n";

  out << "learner.hidden=" << cfg.learner.hidden << "\n";
  out << "learner.lr=" << cfg.learner.lr << "\n";
  out << "learner.clip_eps=" << cfg.learner.clip_eps << "\n";
  out << "learner.epochs=" << cfg.learner.epochs << "\n";
  out << "learner.rollout_steps=" << cfg.learner.rollout_steps << "\n";
  out << "learner.minibatch=" << cfg.learner.minibatch << "\n";
  out << "learner.gae_lambda=" << cfg.learner.gae_lambda << "\n";
  out << "learner.ent_coef=" << cfg.learner.ent_coef << "\n";
  out << "learner.vf_coef=" << cfg.learner.vf_coef << "\n";
  out << "learner.total_steps=" << cfg.learner.total_steps << "\n";
  out << "learner.eval_interval=" << cfg.learner.eval_interval << "\n";
  out << "learner.eval_episodes=" << cfg.learner.eval_episodes << "\n";
  out << "learner.plateau_eps=" << cfg.learner.plateau_eps << "\n";
  out << "learner.plateau_window=" << cfg.learner.plateau_window << "\n";
  out << "learner.patience=" << cfg.learner.patience << "\n";
  out << "learner.success_target=" << cfg.learner.success_target << "\n";
  out << "learner.max_resume_steps=" << cfg.learner.max_resume_steps << "\n\n";

  out << "perception.pixel_noise_sigma=" << cfg.pixel_noise_sigma << "\n";
  out << "perception.false_negative_rate=" << cfg.false_negative_rate << "\n";
  out << "perception.calibration_file=\"" << cfg.calibration_file << "\"\n\n";

  out << "orchestrator.num_episodes=" << cfg.num_episodes << "\n";
  out << "orchestrator.perturb_episode=" << cfg.perturb_episode << "\n";
  out << "orchestrator.perturb_height=" << cfg.perturb_height << "\n";
  out << "orchestrator.perturb_width=" << cfg.perturb_width << "\n";
  out << "orchestrator.host=\"" << cfg.host << "\"\n";
  out << "orchestrator.port=" << cfg.port << "\n";
  return out.str();
}

}  // namespace twinforge::config
