#include "twinforge/kinematics.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <nlohmann/json.hpp>
#include <stdexcept>

namespace twinforge::kinematics {

double ArmModel::reach() const {
  double r = 0.0;
  for (const auto& j : joints) r += j.translation.norm();
  return r;
}

void ArmModel::validate() const {
  for (const auto& j : joints) {
    if (std::abs(j.axis.norm() - 1.0) > 1e-9)
      throw std::invalid_argument("joint axis must be a unit vector");
    if (!(j.lower < j.upper))
      throw std::invalid_argument("joint limits must satisfy lower < upper");
  }
  for (const auto& c : capsules) {
    if (c.joint_index < 0 || c.joint_index >= kNumJoints)
      throw std::invalid_argument("capsule joint_index out of range");
    if (!(c.radius > 0.0)) throw std::invalid_argument("capsule radius must be > 0");
  }
  if (!(reach() > 0.0)) throw std::invalid_argument("chain reach must be > 0");
}

ArmModel ArmModel::load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open arm spec file: " + path);
  nlohmann::json doc = nlohmann::json::parse(in);

  auto vec3 = [](const nlohmann::json& a) {
    return Eigen::Vector3d(a.at(0).get<double>(), a.at(1).get<double>(), a.at(2).get<double>());
  };

  ArmModel m;
  const auto& joints = doc.at("joints");
  if (joints.size() != static_cast<size_t>(kNumJoints))
    throw std::invalid_argument("arm spec must contain exactly 5 joints");
  for (int i = 0; i < kNumJoints; ++i) {
    const auto& j = joints.at(i);
    m.joints[i].axis = vec3(j.at("axis")).normalized();
    m.joints[i].translation = vec3(j.at("translation"));
    m.joints[i].lower = j.at("limits").at(0).get<double>();
    m.joints[i].upper = j.at("limits").at(1).get<double>();
  }
  for (const auto& c : doc.at("capsules")) {
    Capsule cap;
    cap.joint_index = c.at("joint_index").get<int>();
    cap.p0 = vec3(c.at("p0"));
    cap.p1 = vec3(c.at("p1"));
    cap.radius = c.at("radius").get<double>();
    m.capsules.push_back(cap);
  }
  m.validate();
  return m;
}

// Five revolute joints (yaw, pitch, pitch, pitch, yaw), 0.7 m reach,
// straight up at the zero configuration.
ArmModel ArmModel::reference_arm() {
  ArmModel m;
  const Eigen::Vector3d z = Eigen::Vector3d::UnitZ();
  const Eigen::Vector3d y = Eigen::Vector3d::UnitY();
  const double lengths[kNumJoints] = {0.15, 0.20, 0.20, 0.10, 0.05};
  const Eigen::Vector3d axes[kNumJoints] = {z, y, y, y, z};
  for (int i = 0; i < kNumJoints; ++i) {
    m.joints[i].axis = axes[i];
    m.joints[i].translation = Eigen::Vector3d(0, 0, lengths[i]);
    m.joints[i].lower = -2.0;
    m.joints[i].upper = 2.0;
  }
  const double radii[kNumJoints] = {0.04, 0.04, 0.04, 0.03, 0.02};
  for (int i = 0; i < kNumJoints; ++i) {
    Capsule c;
    c.joint_index = i;
    c.p0 = Eigen::Vector3d::Zero();
    c.p1 = m.joints[i].translation;
    c.radius = radii[i];
    m.capsules.push_back(c);
  }
  m.validate();
  return m;
}

JointConfig clamp_to_limits(const ArmModel& model, const JointConfig& q, bool* clamped) {
  JointConfig out = q;
  bool any = false;
  for (int i = 0; i < kNumJoints; ++i) {
    const double c = std::clamp(q[i], model.joints[i].lower, model.joints[i].upper);
    if (c != q[i]) any = true;
    out[i] = c;
  }
  if (clamped) *clamped = any;
  return out;
}

FrameChain compute_frames(const ArmModel& model, const JointConfig& q_in) {
  FrameChain out;
  JointConfig q = clamp_to_limits(model, q_in, &out.clamped);
  Eigen::Isometry3d T = Eigen::Isometry3d::Identity();
  for (int i = 0; i < kNumJoints; ++i) {
    T = T * Eigen::AngleAxisd(q[i], model.joints[i].axis);
    out.frames[i] = T;
    T = T * Eigen::Translation3d(model.joints[i].translation);
  }
  out.ee.position = T.translation();
  out.ee.orientation = Eigen::Quaterniond(T.rotation()).normalized();
  return out;
}

FkResult forward_kinematics(const ArmModel& model, const JointConfig& q) {
  FrameChain chain = compute_frames(model, q);
  return FkResult{chain.ee, chain.clamped};
}

std::vector<WorldCapsule> world_capsules(const ArmModel& model, const JointConfig& q) {
  FrameChain chain = compute_frames(model, q);
  std::vector<WorldCapsule> out;
  out.reserve(model.capsules.size());
  for (const auto& c : model.capsules) {
    const Eigen::Isometry3d& T = chain.frames[c.joint_index];
    out.push_back(WorldCapsule{T * c.p0, T * c.p1, c.radius});
  }
  return out;
}

Eigen::Matrix<double, 3, kNumJoints> jacobian(const ArmModel& model, const JointConfig& q) {
  FrameChain chain = compute_frames(model, q);
  Eigen::Matrix<double, 3, kNumJoints> J;
  for (int i = 0; i < kNumJoints; ++i) {
    const Eigen::Vector3d axis_w = chain.frames[i].rotation() * model.joints[i].axis;
    const Eigen::Vector3d origin = chain.frames[i].translation();
    J.col(i) = axis_w.cross(chain.ee.position - origin);
  }
  return J;
}

namespace {

IkResult dls_attempt(const ArmModel& model, const Eigen::Vector3d& target,
                     const JointConfig& seed, const IkOptions& opts) {
  IkResult res;
  res.q = clamp_to_limits(model, seed);
  const double lambda2 = opts.damping * opts.damping;
  Eigen::Vector3d err = target - forward_kinematics(model, res.q).pose.position;
  res.residual = err.norm();
  for (int it = 0; it < opts.max_iter && res.residual > opts.tol; ++it) {
    const auto J = jacobian(model, res.q);
    const Eigen::Matrix3d JJt = J * J.transpose() + lambda2 * Eigen::Matrix3d::Identity();
    const Eigen::Matrix<double, kNumJoints, 1> dq = J.transpose() * JJt.ldlt().solve(err);
    res.q.q += dq;
    res.q = clamp_to_limits(model, res.q);
    err = target - forward_kinematics(model, res.q).pose.position;
    res.residual = err.norm();
    res.iterations = it + 1;
  }
  res.success = res.residual <= opts.tol;
  return res;
}

}  // namespace

IkResult solve_ik(const ArmModel& model, const Eigen::Vector3d& target,
                  const JointConfig& seed, const IkOptions& opts) {
  IkResult best = dls_attempt(model, target, seed, opts);
  if (best.success || opts.max_restarts <= 0) return best;

  // Clamping can trap the iterate in the wrong basin (e.g. the base turned
  // the short way toward a target only reachable bending backward). Restart
  // seeds come from the target alone, so repeated calls agree.
  uint64_t h = 0x9e3779b97f4a7c15ULL;
  for (int i = 0; i < 3; ++i) {
    uint64_t bits;
    const double v = target[i];
    std::memcpy(&bits, &v, sizeof bits);
    h = (h ^ bits) * 0xff51afd7ed558ccdULL;
  }
  std::mt19937_64 rng(h);
  int total_iters = best.iterations;
  for (int r = 0; r < opts.max_restarts; ++r) {
    JointConfig s;
    for (int i = 0; i < kNumJoints; ++i) {
      std::uniform_real_distribution<double> u(model.joints[i].lower, model.joints[i].upper);
      s[i] = u(rng);
    }
    IkResult attempt = dls_attempt(model, target, s, opts);
    total_iters += attempt.iterations;
    if (attempt.residual < best.residual) best = attempt;
    if (best.success) break;
  }
  best.iterations = total_iters;
  return best;
}

}  // namespace twinforge::kinematics
