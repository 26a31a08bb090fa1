#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <array>
#include <string>
#include <vector>

namespace twinforge::kinematics {

inline constexpr int kNumJoints = 5;

struct Joint {
  Eigen::Vector3d axis;         // unit rotation axis, local frame
  Eigen::Vector3d translation;  // fixed offset to the next frame, meters
  double lower = 0.0;           // radians
  double upper = 0.0;
};

// Link collision volume attached to a joint frame; endpoints in the rotated
// joint frame so the capsule moves with the link.
struct Capsule {
  int joint_index = 0;
  Eigen::Vector3d p0;
  Eigen::Vector3d p1;
  double radius = 0.0;
};

struct ArmModel {
  std::array<Joint, kNumJoints> joints;
  std::vector<Capsule> capsules;

  double reach() const;
  void validate() const;  // throws std::invalid_argument on a bad model

  static ArmModel load_json(const std::string& path);
  static ArmModel reference_arm();
};

struct JointConfig {
  Eigen::Matrix<double, kNumJoints, 1> q = Eigen::Matrix<double, kNumJoints, 1>::Zero();

  double& operator[](int i) { return q[i]; }
  double operator[](int i) const { return q[i]; }
};

struct Pose3 {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();
};

struct FkResult {
  Pose3 pose;
  bool clamped = false;  // true when any joint angle was limit-clamped
};

// World-frame capsule, output of placing the arm at a configuration.
struct WorldCapsule {
  Eigen::Vector3d p0;
  Eigen::Vector3d p1;
  double radius = 0.0;
};

JointConfig clamp_to_limits(const ArmModel& model, const JointConfig& q, bool* clamped = nullptr);

FkResult forward_kinematics(const ArmModel& model, const JointConfig& q);

// Joint frames after applying each joint rotation; frames[i] maps rotated
// joint-i coordinates to world. Also returns the end-effector pose.
struct FrameChain {
  std::array<Eigen::Isometry3d, kNumJoints> frames;
  Pose3 ee;
  bool clamped = false;
};
FrameChain compute_frames(const ArmModel& model, const JointConfig& q);

std::vector<WorldCapsule> world_capsules(const ArmModel& model, const JointConfig& q);

// Position Jacobian, 3 x 5: column j = axis_j x (p_ee - o_j).
Eigen::Matrix<double, 3, kNumJoints> jacobian(const ArmModel& model, const JointConfig& q);

struct IkResult {
  JointConfig q;
  bool success = false;
  double residual = 0.0;
  int iterations = 0;
};

struct IkOptions {
  double tol = 1e-4;       // meters
  int max_iter = 100;      // per attempt
  double damping = 0.05;   // DLS lambda
  int max_restarts = 8;    // extra seeds tried when the caller's seed stalls
};

// Damped-least-squares position IK, joint limits clamped per iteration.
// A stalled solve is retried from seeds drawn deterministically from the
// target, so results stay reproducible. A residual above tol after all
// attempts means the target is unreachable (or outside every basin the
// restarts probed); callers treat that as a no-op move.
IkResult solve_ik(const ArmModel& model, const Eigen::Vector3d& target,
                  const JointConfig& seed, const IkOptions& opts = {});

}  // namespace twinforge::kinematics
