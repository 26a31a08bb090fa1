#pragma once

#include <cstdint>
#include <string>

#include "twinforge/env.hpp"
#include "twinforge/learner/train.hpp"
#include "twinforge/orchestrator/orchestrator.hpp"
#include "twinforge/perception.hpp"
#include "twinforge/world.hpp"

namespace twinforge::config {

// Fully resolved run configuration; every field has a default and the merged
// tree is echoed into the output directory before any work starts.
struct RunConfig {
  std::uint64_t seed = 7;
  std::string out_dir = "out";
  std::string arm_file;  // empty -> built-in reference arm

  env::EnvConfig env;
  world::SceneSamplingParams scene;
  learner::LearnerConfig learner;

  // perception
  double pixel_noise_sigma = 0.0;
  double false_negative_rate = 0.0;
  std::string calibration_file;  // empty -> experiment default calibration

  // orchestrator / plant
  std::int64_t num_episodes = 10;
  std::int64_t perturb_episode = -1;  // -1 disables the default schedule
  double perturb_height = 2.0;
  double perturb_width = 1.0;
  std::string host = "127.0.0.1";
  int port = 45601;

  double start_q[kinematics::kNumJoints] = {0.0, 0.7, 1.1, 0.6, 0.0};

  RunConfig();  // fills in the experiment defaults below

  kinematics::ArmModel arm() const;
  kinematics::JointConfig start_config() const;
  perception::Calibration calibration() const;
  perception::CameraModel camera() const;
  learner::TrainSetup train_setup() const;
  orchestrator::PerturbationSchedule schedule() const;
};

// Calibration with the default frame ratios, offset so the experiment
// workspace lands inside the camera frame.
perception::Calibration experiment_calibration();

std::string to_toml(const RunConfig& cfg);

}  // namespace twinforge::config
