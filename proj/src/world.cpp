#include "twinforge/world.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>

#include "twinforge/errors.hpp"

namespace twinforge::world {

namespace {

Eigen::Vector3d clamp_to_box(const Eigen::Vector3d& p, const Eigen::Vector3d& lo,
                             const Eigen::Vector3d& hi) {
  return p.cwiseMax(lo).cwiseMin(hi);
}

double point_box_distance(const Eigen::Vector3d& p, const Eigen::Vector3d& lo,
                          const Eigen::Vector3d& hi) {
  return (clamp_to_box(p, lo, hi) - p).norm();
}

// Depth of an interior point below the nearest face (>= 0 inside the box).
double interior_depth(const Eigen::Vector3d& p, const Eigen::Vector3d& lo,
                      const Eigen::Vector3d& hi) {
  double d = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) d = std::min({d, p[i] - lo[i], hi[i] - p[i]});
  return d;
}

bool lex_less(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  for (int i = 0; i < 3; ++i) {
    if (a[i] < b[i]) return true;
    if (a[i] > b[i]) return false;
  }
  return false;
}

}  // namespace

ClosestPair closest_point_capsule_box(const kinematics::WorldCapsule& capsule,
                                      const BoxObstacle& box) {
  const Eigen::Vector3d lo = box.center - box.half_extents;
  const Eigen::Vector3d hi = box.center + box.half_extents;
  const Eigen::Vector3d a = capsule.p0;
  const Eigen::Vector3d d = capsule.p1 - capsule.p0;
  auto point_at = [&](double s) -> Eigen::Vector3d { return a + s * d; };
  auto f = [&](double s) { return point_box_distance(point_at(s), lo, hi); };

  // f is convex in s (distance to a convex set along an affine path), so a
  // ternary search pins the minimum.
  double l = 0.0, r = 1.0;
  for (int it = 0; it < 160; ++it) {
    const double m1 = l + (r - l) / 3.0;
    const double m2 = r - (r - l) / 3.0;
    if (f(m1) <= f(m2))
      r = m2;
    else
      l = m1;
  }
  double s_star = 0.5 * (l + r);
  double d_star = f(s_star);
  if (f(0.0) <= d_star) { s_star = 0.0; d_star = f(0.0); }
  if (f(1.0) < d_star) { s_star = 1.0; d_star = f(1.0); }

  // Flat minima (axis parallel to a face): walk the plateau ends and keep the
  // lexicographically smallest segment point.
  const double eps = 1e-12 + 1e-9 * d_star;
  // leftmost plateau point
  double s_min;
  if (f(0.0) <= d_star + eps) {
    s_min = 0.0;
  } else {
    double lo_s = 0.0, hi_s = s_star;
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (lo_s + hi_s);
      if (f(mid) <= d_star + eps)
        hi_s = mid;
      else
        lo_s = mid;
    }
    s_min = hi_s;
  }
  // rightmost plateau point
  double s_max;
  if (f(1.0) <= d_star + eps) {
    s_max = 1.0;
  } else {
    double lo_s = s_star, hi_s = 1.0;
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (lo_s + hi_s);
      if (f(mid) <= d_star + eps)
        lo_s = mid;
      else
        hi_s = mid;
    }
    s_max = lo_s;
  }
  const Eigen::Vector3d p_min = point_at(s_min);
  const Eigen::Vector3d p_max = point_at(s_max);
  const Eigen::Vector3d p_seg = lex_less(p_max, p_min) ? p_max : p_min;

  ClosestPair out;
  const double seg_dist = point_box_distance(p_seg, lo, hi);
  if (seg_dist > 0.0) {
    const Eigen::Vector3d b = clamp_to_box(p_seg, lo, hi);
    const Eigen::Vector3d n = (b - p_seg) / seg_dist;
    out.pos_B = b;
    out.distance = seg_dist - capsule.radius;
    // pos_A sits on the capsule surface toward the box; once the surfaces
    // overlap the pair has crossed and distance is the (negative) gap.
    out.pos_A = p_seg + capsule.radius * n;
  } else {
    // Segment pierces the box: report deepest sampled point, depth-based
    // penetration approximation.
    double best_depth = -1.0;
    Eigen::Vector3d best_p = p_seg;
    for (int i = 0; i <= 64; ++i) {
      const Eigen::Vector3d p = point_at(static_cast<double>(i) / 64.0);
      const double dep = interior_depth(p, lo, hi);
      if (dep > best_depth) {
        best_depth = dep;
        best_p = p;
      }
    }
    out.pos_A = best_p;
    // project to the nearest face for pos_B
    Eigen::Vector3d b = best_p;
    int axis = 0;
    double face_val = 0.0, best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 3; ++i) {
      if (best_p[i] - lo[i] < best) { best = best_p[i] - lo[i]; axis = i; face_val = lo[i]; }
      if (hi[i] - best_p[i] < best) { best = hi[i] - best_p[i]; axis = i; face_val = hi[i]; }
    }
    b[axis] = face_val;
    out.pos_B = b;
    out.distance = -(std::max(best_depth, 0.0) + capsule.radius);
  }
  return out;
}

ClosestPair scene_closest(const kinematics::ArmModel& model,
                          const kinematics::JointConfig& q, const Scene& scene) {
  if (scene.obstacles.empty()) throw EmptyScene("scene has no obstacles");
  const auto capsules = kinematics::world_capsules(model, q);
  ClosestPair best;
  best.distance = std::numeric_limits<double>::infinity();
  for (size_t ci = 0; ci < capsules.size(); ++ci) {
    for (size_t oi = 0; oi < scene.obstacles.size(); ++oi) {
      ClosestPair p = closest_point_capsule_box(capsules[ci], scene.obstacles[oi]);
      if (p.distance < best.distance) {
        best = p;
        best.capsule_index = static_cast<int>(ci);
        best.obstacle_index = static_cast<int>(oi);
      }
    }
  }
  return best;
}

bool in_collision(const kinematics::ArmModel& model, const kinematics::JointConfig& q,
                  const Scene& scene) {
  return scene_closest(model, q, scene).distance < 0.0;
}

Scene sample_scene(Rng& rng, const SceneSamplingParams& params) {
  std::uniform_real_distribution<double> ux(params.bounds.lo.x(), params.bounds.hi.x());
  std::uniform_real_distribution<double> uy(params.bounds.lo.y(), params.bounds.hi.y());
  std::uniform_real_distribution<double> uh(params.obstacle_h_min, params.obstacle_h_max);
  std::uniform_real_distribution<double> uw(params.obstacle_w_min, params.obstacle_w_max);

  for (int attempt = 0; attempt < 1000; ++attempt) {
    Scene s;
    s.workspace_bounds = params.bounds;
    s.goal_pos = Eigen::Vector3d(ux(rng), uy(rng), params.table_z);
    const double h = uh(rng), w = uw(rng);
    BoxObstacle box;
    box.half_extents = Eigen::Vector3d(w / 2.0, w / 2.0, h / 2.0);
    box.center = Eigen::Vector3d(ux(rng), uy(rng), h / 2.0);
    s.obstacles.push_back(box);

    const Eigen::Vector3d lo = box.center - box.half_extents;
    const Eigen::Vector3d hi = box.center + box.half_extents;
    const double goal_clear = (s.goal_pos.cwiseMax(lo).cwiseMin(hi) - s.goal_pos).norm();
    const bool goal_inside = (s.goal_pos.array() >= lo.array()).all() &&
                             (s.goal_pos.array() <= hi.array()).all();
    if (!goal_inside && goal_clear >= params.min_separation) return s;
  }
  throw SamplingExhausted("sample_scene: 1000 rejections without a valid scene");
}

namespace {

nlohmann::json vec_json(const Eigen::Vector3d& v) {
  return nlohmann::json::array({v.x(), v.y(), v.z()});
}

Eigen::Vector3d json_vec(const nlohmann::json& a) {
  return Eigen::Vector3d(a.at(0).get<double>(), a.at(1).get<double>(), a.at(2).get<double>());
}

}  // namespace

Scene load_scene_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scene file: " + path);
  nlohmann::json doc = nlohmann::json::parse(in);
  Scene s;
  s.goal_pos = json_vec(doc.at("goal"));
  for (const auto& o : doc.at("obstacles")) {
    s.obstacles.push_back(BoxObstacle{json_vec(o.at("center")), json_vec(o.at("half_extents"))});
  }
  s.workspace_bounds.lo = json_vec(doc.at("workspace_bounds").at("lo"));
  s.workspace_bounds.hi = json_vec(doc.at("workspace_bounds").at("hi"));
  return s;
}

void save_scene_json(const Scene& scene, const std::string& path) {
  nlohmann::json doc;
  doc["goal"] = vec_json(scene.goal_pos);
  doc["obstacles"] = nlohmann::json::array();
  for (const auto& o : scene.obstacles) {
    doc["obstacles"].push_back({{"center", vec_json(o.center)},
                                {"half_extents", vec_json(o.half_extents)}});
  }
  doc["workspace_bounds"] = {{"lo", vec_json(scene.workspace_bounds.lo)},
                             {"hi", vec_json(scene.workspace_bounds.hi)}};
  std::ofstream out(path);
  out << doc.dump(2) << "\n";
}

}  // namespace twinforge::world
