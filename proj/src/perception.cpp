#include "twinforge/perception.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <optional>

#include "twinforge/errors.hpp"

namespace twinforge::perception {

namespace {

bool collinear(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c) {
  const Eigen::Vector2d u = b - a, v = c - a;
  return std::abs(u.x() * v.y() - u.y() * v.x()) < 1e-9;
}

void check_quad(const std::array<Eigen::Vector2d, 4>& q, const char* which) {
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j)
      for (int k = j + 1; k < 4; ++k)
        if (collinear(q[i], q[j], q[k]))
          throw Degenerate(std::string(which) + " corners contain three collinear points");
}

}  // namespace

Eigen::Matrix3d homography_from_corners(const std::array<Eigen::Vector2d, 4>& src,
                                        const std::array<Eigen::Vector2d, 4>& dst) {
  check_quad(src, "source");
  check_quad(dst, "destination");

  Eigen::Matrix<double, 8, 9> A = Eigen::Matrix<double, 8, 9>::Zero();
  for (int i = 0; i < 4; ++i) {
    const double x = src[i].x(), y = src[i].y();
    const double u = dst[i].x(), v = dst[i].y();
    A.row(2 * i) << -x, -y, -1, 0, 0, 0, u * x, u * y, u;
    A.row(2 * i + 1) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  const Eigen::VectorXd h = svd.matrixV().col(8);
  Eigen::Matrix3d H;
  H << h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8];
  if (std::abs(H(2, 2)) < 1e-12 || std::abs(H.determinant()) < 1e-12)
    throw Degenerate("homography solve is singular");
  return H / H(2, 2);
}

Eigen::Vector2d apply_homography(const Eigen::Matrix3d& H, const Eigen::Vector2d& p) {
  const Eigen::Vector3d q = H * Eigen::Vector3d(p.x(), p.y(), 1.0);
  return {q.x() / q.z(), q.y() / q.z()};
}

Eigen::Vector3d pixel_to_world(double x_p, double y_p, const Calibration& calib) {
  if (x_p < 0.0 || x_p > calib.px_total_x || y_p < 0.0 || y_p > calib.px_total_y)
    throw OutOfFrame("pixel outside rectified frame");
  return {-calib.ratio_x * (x_p / calib.px_total_x) + calib.offset_x,
          calib.ratio_y * (y_p / calib.px_total_y) + calib.offset_y, calib.table_z};
}

Eigen::Vector2d world_to_pixel(const Eigen::Vector3d& world, const Calibration& calib) {
  return {-(world.x() - calib.offset_x) * calib.px_total_x / calib.ratio_x,
          (world.y() - calib.offset_y) * calib.px_total_y / calib.ratio_y};
}

std::vector<Detection2D> synth_detect(const world::Scene& scene, const CameraModel& cam,
                                      const Calibration& calib, Rng& rng) {
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Eigen::Matrix3d H_inv = calib.homography.inverse();
  const double mx = calib.ratio_x / calib.px_total_x;  // meters per pixel
  const double my = calib.ratio_y / calib.px_total_y;

  auto project = [&](const Eigen::Vector3d& world, double size_x_m, double size_y_m,
                     double height_m, DetectionClass cls) -> std::optional<Detection2D> {
    Eigen::Vector2d rect = world_to_pixel(world, calib);
    // noise acts in the raw camera view, before rectification
    Eigen::Vector2d raw = apply_homography(H_inv, rect);
    if (cam.pixel_noise_sigma > 0.0) {
      raw.x() += cam.pixel_noise_sigma * noise(rng);
      raw.y() += cam.pixel_noise_sigma * noise(rng);
    }
    rect = apply_homography(calib.homography, raw);
    rect.x() = std::clamp(rect.x(), 0.0, calib.px_total_x);
    rect.y() = std::clamp(rect.y(), 0.0, calib.px_total_y);

    Detection2D d;
    d.class_label = cls;
    d.x = rect.x();
    d.y = rect.y();
    d.w_px = size_x_m / mx;
    d.h_px = size_y_m / my;
    d.depth_height = height_m + cam.pixel_noise_sigma * my * noise(rng);
    d.confidence = 0.994;
    return d;
  };

  std::vector<Detection2D> out;
  if (unit(rng) >= cam.false_negative_rate) {
    auto d = project(scene.goal_pos, cam.goal_cube_size, cam.goal_cube_size,
                     cam.goal_cube_size, DetectionClass::Goal);
    if (d) out.push_back(*d);
  }
  for (const auto& box : scene.obstacles) {
    if (unit(rng) < cam.false_negative_rate) continue;
    auto d = project(box.center, 2.0 * box.half_extents.x(), 2.0 * box.half_extents.y(),
                     box.height(), DetectionClass::Obstacle);
    if (d) out.push_back(*d);
  }
  return out;
}

world::Scene estimate_scene(const std::vector<Detection2D>& detections, const Calibration& calib,
                            const world::Aabb& workspace_bounds) {
  const Detection2D* goal = nullptr;
  for (const auto& d : detections) {
    if (d.class_label != DetectionClass::Goal) continue;
    if (!goal || d.confidence > goal->confidence) goal = &d;
  }
  if (!goal) throw NoGoalDetected("no goal-class detection");

  const double mx = calib.ratio_x / calib.px_total_x;
  const double my = calib.ratio_y / calib.px_total_y;

  world::Scene s;
  s.workspace_bounds = workspace_bounds;
  s.goal_pos = pixel_to_world(goal->x, goal->y, calib);
  for (const auto& d : detections) {
    if (d.class_label != DetectionClass::Obstacle) continue;
    const Eigen::Vector3d c = pixel_to_world(d.x, d.y, calib);
    const double h = std::max(d.depth_height, 1e-3);
    world::BoxObstacle box;
    box.half_extents = Eigen::Vector3d(d.w_px * mx / 2.0, d.h_px * my / 2.0, h / 2.0);
    box.center = Eigen::Vector3d(c.x(), c.y(), h / 2.0);
    s.obstacles.push_back(box);
  }
  return s;
}

Calibration Calibration::load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open calibration file: " + path);
  nlohmann::json doc = nlohmann::json::parse(in);
  Calibration c;
  if (doc.contains("homography")) {
    const auto& h = doc["homography"];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) c.homography(i, j) = h.at(i).at(j).get<double>();
  }
  c.ratio_x = doc.value("ratio_x", c.ratio_x);
  c.ratio_y = doc.value("ratio_y", c.ratio_y);
  c.px_total_x = doc.value("px_total_x", c.px_total_x);
  c.px_total_y = doc.value("px_total_y", c.px_total_y);
  c.offset_x = doc.value("offset_x", c.offset_x);
  c.offset_y = doc.value("offset_y", c.offset_y);
  c.table_z = doc.value("table_z", c.table_z);
  return c;
}

void Calibration::save_json(const std::string& path) const {
  nlohmann::json doc;
  doc["homography"] = nlohmann::json::array();
  for (int i = 0; i < 3; ++i)
    doc["homography"].push_back({homography(i, 0), homography(i, 1), homography(i, 2)});
  doc["ratio_x"] = ratio_x;
  doc["ratio_y"] = ratio_y;
  doc["px_total_x"] = px_total_x;
  doc["px_total_y"] = px_total_y;
  doc["offset_x"] = offset_x;
  doc["offset_y"] = offset_y;
  doc["table_z"] = table_z;
  std::ofstream out(path);
  out << doc.dump(2) << "\n";
}

}  // namespace twinforge::perception
