#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

#include "twinforge/random.hpp"
#include "twinforge/world.hpp"

namespace twinforge::perception {

enum class DetectionClass { Goal, Obstacle };

struct Detection2D {
  DetectionClass class_label = DetectionClass::Goal;
  double x = 0.0, y = 0.0;         // pixel center, rectified view
  double w_px = 0.0, h_px = 0.0;   // pixel box size
  double depth_height = 0.0;       // meters, from the depth channel
  double confidence = 0.0;
};

struct Calibration {
  Eigen::Matrix3d homography = Eigen::Matrix3d::Identity();  // raw -> rectified
  double ratio_x = 0.482, ratio_y = 0.587;   // meters across the full frame
  double px_total_x = 660.0, px_total_y = 540.0;
  double offset_x = 0.0, offset_y = 0.0;     // meters
  double table_z = 0.025;

  static Calibration load_json(const std::string& path);
  void save_json(const std::string& path) const;
};

struct CameraModel {
  double image_w = 660.0, image_h = 540.0;
  std::array<Eigen::Vector2d, 4> corners;  // raw-view workspace corners
  double pixel_noise_sigma = 0.0;
  double false_negative_rate = 0.0;
  double goal_cube_size = 0.04;  // meters, known marker size
};

// Direct linear transform over four correspondences, normalized to h33 = 1.
// Throws Degenerate on collinear corners.
Eigen::Matrix3d homography_from_corners(const std::array<Eigen::Vector2d, 4>& src,
                                        const std::array<Eigen::Vector2d, 4>& dst);

Eigen::Vector2d apply_homography(const Eigen::Matrix3d& H, const Eigen::Vector2d& p);

// Rectified pixel -> world:
//   x = -ratio_x * (x_p / px_total_x) + offset_x
//   y =  ratio_y * (y_p / px_total_y) + offset_y
//   z =  table_z
// Throws OutOfFrame for pixels outside the rectified frame.
Eigen::Vector3d pixel_to_world(double x_p, double y_p, const Calibration& calib);

// Inverse of the mapping above (world x-y to rectified pixels).
Eigen::Vector2d world_to_pixel(const Eigen::Vector3d& world, const Calibration& calib);

// Analytic stand-in for the detector: projects scene objects into the raw
// camera view, perturbs them with pixel noise, drops objects at the
// false-negative rate, and reports rectified-view boxes.
std::vector<Detection2D> synth_detect(const world::Scene& scene, const CameraModel& cam,
                                      const Calibration& calib, Rng& rng);

// Detections -> scene estimate. Goal from the highest-confidence goal
// detection; obstacle footprints recovered with the per-pixel meter ratios.
// Throws NoGoalDetected when no goal-class detection is present.
world::Scene estimate_scene(const std::vector<Detection2D>& detections, const Calibration& calib,
                            const world::Aabb& workspace_bounds);

}  // namespace twinforge::perception
