#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "twinforge/kinematics.hpp"
#include "twinforge/random.hpp"

namespace twinforge::world {

struct BoxObstacle {
  Eigen::Vector3d center;
  Eigen::Vector3d half_extents;  // (w/2, depth/2, h/2), meters

  double height() const { return 2.0 * half_extents.z(); }
  double width() const { return 2.0 * half_extents.x(); }
};

struct Aabb {
  Eigen::Vector3d lo;
  Eigen::Vector3d hi;
  bool contains(const Eigen::Vector3d& p) const {
    return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
  }
};

struct Scene {
  Eigen::Vector3d goal_pos;  // cube center, z fixed by the table plane
  std::vector<BoxObstacle> obstacles;
  Aabb workspace_bounds;
};

struct ClosestPair {
  Eigen::Vector3d pos_A;  // on the robot
  Eigen::Vector3d pos_B;  // on the obstacle
  double distance = 0.0;  // signed; negative approximates penetration depth
  int capsule_index = -1;
  int obstacle_index = -1;
};

// Exact segment-to-box closest pair minus the capsule radius. Ties along the
// capsule axis resolve to the lexicographically smallest pos_A.
ClosestPair closest_point_capsule_box(const kinematics::WorldCapsule& capsule,
                                      const BoxObstacle& box);

// Minimum over (arm capsule x obstacle) pairs; ties break on the lower
// (capsule index, obstacle index). Throws EmptyScene when no obstacles.
ClosestPair scene_closest(const kinematics::ArmModel& model,
                          const kinematics::JointConfig& q, const Scene& scene);

bool in_collision(const kinematics::ArmModel& model, const kinematics::JointConfig& q,
                  const Scene& scene);

struct SceneSamplingParams {
  Aabb bounds;
  double table_z = 0.025;
  double obstacle_h_min = 0.04, obstacle_h_max = 0.08;
  double obstacle_w_min = 0.05, obstacle_w_max = 0.10;
  double min_separation = 0.05;  // goal point to obstacle surface, meters
};

// Goal uniform in the x-y rectangle at table height; one box obstacle with
// uniformly sampled footprint/height, resting on the table. Rejection-samples
// until the goal clears the obstacle; throws SamplingExhausted after 1000
// rejections.
Scene sample_scene(Rng& rng, const SceneSamplingParams& params);

Scene load_scene_json(const std::string& path);
void save_scene_json(const Scene& scene, const std::string& path);

}  // namespace twinforge::world
