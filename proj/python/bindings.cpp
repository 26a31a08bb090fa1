#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "twinforge/config.hpp"
#include "twinforge/env.hpp"
#include "twinforge/kinematics.hpp"
#include "twinforge/learner/train.hpp"
#include "twinforge/perception.hpp"
#include "twinforge/world.hpp"

namespace py = pybind11;
namespace tf = twinforge;

namespace {

using Vec5 = Eigen::Matrix<double, tf::kinematics::kNumJoints, 1>;

tf::kinematics::JointConfig to_joint_config(const Vec5& v) {
  tf::kinematics::JointConfig q;
  q.q = v;
  return q;
}

}  // namespace

PYBIND11_MODULE(_twinforge, m) {
  m.doc() = "digital-twin arm training framework: kinematics, geometry, env, learner";

  using namespace tf::kinematics;
  py::class_<ArmModel>(m, "ArmModel")
      .def_static("reference_arm", &ArmModel::reference_arm)
      .def_static("load_json", &ArmModel::load_json, py::arg("path"))
      .def("reach", &ArmModel::reach);

  py::class_<IkResult>(m, "IkResult")
      .def_property_readonly("q", [](const IkResult& r) { return Vec5(r.q.q); })
      .def_readonly("success", &IkResult::success)
      .def_readonly("residual", &IkResult::residual)
      .def_readonly("iterations", &IkResult::iterations);

  m.def(
      "forward_kinematics",
      [](const ArmModel& model, const Vec5& q) {
        return forward_kinematics(model, to_joint_config(q)).pose.position;
      },
      py::arg("model"), py::arg("q"));
  m.def(
      "jacobian",
      [](const ArmModel& model, const Vec5& q) {
        return Eigen::MatrixXd(jacobian(model, to_joint_config(q)));
      },
      py::arg("model"), py::arg("q"));
  m.def(
      "solve_ik",
      [](const ArmModel& model, const Eigen::Vector3d& target, const Vec5& seed, double tol,
         int max_iter) {
        IkOptions opts;
        opts.tol = tol;
        opts.max_iter = max_iter;
        return solve_ik(model, target, to_joint_config(seed), opts);
      },
      py::arg("model"), py::arg("target"), py::arg("seed"), py::arg("tol") = 1e-4,
      py::arg("max_iter") = 100);

  using namespace tf::world;
  py::class_<BoxObstacle>(m, "BoxObstacle")
      .def(py::init([](const Eigen::Vector3d& center, const Eigen::Vector3d& half_extents) {
             BoxObstacle b;
             b.center = center;
             b.half_extents = half_extents;
             return b;
           }),
           py::arg("center"), py::arg("half_extents"))
      .def_readwrite("center", &BoxObstacle::center)
      .def_readwrite("half_extents", &BoxObstacle::half_extents)
      .def("height", &BoxObstacle::height)
      .def("width", &BoxObstacle::width);

  py::class_<Aabb>(m, "Aabb")
      .def(py::init([](const Eigen::Vector3d& lo, const Eigen::Vector3d& hi) {
             Aabb b;
             b.lo = lo;
             b.hi = hi;
             return b;
           }),
           py::arg("lo"), py::arg("hi"))
      .def_readwrite("lo", &Aabb::lo)
      .def_readwrite("hi", &Aabb::hi)
      .def("contains", &Aabb::contains);

  py::class_<Scene>(m, "Scene")
      .def(py::init<>())
      .def_readwrite("goal_pos", &Scene::goal_pos)
      .def_readwrite("obstacles", &Scene::obstacles)
      .def_readwrite("workspace_bounds", &Scene::workspace_bounds);
  m.def("load_scene_json", &load_scene_json, py::arg("path"));
  m.def("save_scene_json", &save_scene_json, py::arg("scene"), py::arg("path"));

  py::class_<ClosestPair>(m, "ClosestPair")
      .def_readonly("pos_A", &ClosestPair::pos_A)
      .def_readonly("pos_B", &ClosestPair::pos_B)
      .def_readonly("distance", &ClosestPair::distance)
      .def_readonly("capsule_index", &ClosestPair::capsule_index)
      .def_readonly("obstacle_index", &ClosestPair::obstacle_index);

  m.def(
      "scene_closest",
      [](const ArmModel& model, const Vec5& q, const Scene& scene) {
        return scene_closest(model, to_joint_config(q), scene);
      },
      py::arg("model"), py::arg("q"), py::arg("scene"));
  m.def(
      "in_collision",
      [](const ArmModel& model, const Vec5& q, const Scene& scene) {
        return in_collision(model, to_joint_config(q), scene);
      },
      py::arg("model"), py::arg("q"), py::arg("scene"));

  py::class_<SceneSamplingParams>(m, "SceneSamplingParams")
      .def(py::init<>())
      .def_readwrite("bounds", &SceneSamplingParams::bounds)
      .def_readwrite("table_z", &SceneSamplingParams::table_z)
      .def_readwrite("obstacle_h_min", &SceneSamplingParams::obstacle_h_min)
      .def_readwrite("obstacle_h_max", &SceneSamplingParams::obstacle_h_max)
      .def_readwrite("obstacle_w_min", &SceneSamplingParams::obstacle_w_min)
      .def_readwrite("obstacle_w_max", &SceneSamplingParams::obstacle_w_max)
      .def_readwrite("min_separation", &SceneSamplingParams::min_separation);
  m.def(
      "sample_scene",
      [](std::uint64_t seed, const SceneSamplingParams& params) {
        tf::Rng rng(seed);
        return sample_scene(rng, params);
      },
      py::arg("seed"), py::arg("params"));

  using namespace tf::env;
  py::class_<RewardWeights>(m, "RewardWeights")
      .def(py::init<>())
      .def_readwrite("c1", &RewardWeights::c1)
      .def_readwrite("c2", &RewardWeights::c2)
      .def_readwrite("c3", &RewardWeights::c3)
      .def_readwrite("d_thre", &RewardWeights::d_thre)
      .def_readwrite("gamma", &RewardWeights::gamma);

  py::class_<EnvConfig>(m, "EnvConfig")
      .def(py::init<>())
      .def_readwrite("weights", &EnvConfig::weights)
      .def_readwrite("a_max", &EnvConfig::a_max)
      .def_readwrite("horizon", &EnvConfig::horizon)
      .def_readwrite("goal_radius", &EnvConfig::goal_radius)
      .def_readwrite("control_period", &EnvConfig::control_period);

  py::class_<Env>(m, "Env")
      .def(py::init<ArmModel, EnvConfig>(), py::arg("model"), py::arg("config"))
      .def(
          "reset",
          [](Env& e, const Scene& scene, const Vec5& start_q) {
            return Eigen::VectorXd(e.reset(scene, to_joint_config(start_q)).v);
          },
          py::arg("scene"), py::arg("start_q"))
      .def(
          "step",
          [](Env& e, const Eigen::Vector3d& action) {
            const StepOutcome out = e.step(ActionDelta::clipped(action, e.config().a_max));
            py::dict info;
            info["r_g"] = out.reward_terms.r_g;
            info["r_a"] = out.reward_terms.r_a;
            info["r_o"] = out.reward_terms.r_o;
            info["flag_task"] = out.flag_task;
            info["flag_safe"] = out.flag_safe;
            return py::make_tuple(Eigen::VectorXd(out.observation.v), out.reward, out.terminated,
                                  out.truncated, info);
          },
          py::arg("action"))
      .def("done", &Env::done)
      .def("step_count", &Env::step_count)
      .def("flag_task", &Env::flag_task)
      .def("flag_safe", &Env::flag_safe)
      .def("goal_distance", &Env::goal_distance)
      .def("joint_config", [](const Env& e) { return Vec5(e.joint_config().q); });

  using namespace tf::perception;
  py::class_<Calibration>(m, "Calibration")
      .def(py::init<>())
      .def_readwrite("offset_x", &Calibration::offset_x)
      .def_readwrite("offset_y", &Calibration::offset_y)
      .def_readwrite("table_z", &Calibration::table_z)
      .def_static("load_json", &Calibration::load_json, py::arg("path"))
      .def("save_json", &Calibration::save_json, py::arg("path"));
  m.def(
      "pixel_to_world",
      [](double x, double y, const Calibration& c) { return pixel_to_world(x, y, c); },
      py::arg("x_p"), py::arg("y_p"), py::arg("calibration"));
  m.def(
      "world_to_pixel",
      [](const Eigen::Vector3d& p, const Calibration& c) {
        return Eigen::Vector2d(world_to_pixel(p, c));
      },
      py::arg("world"), py::arg("calibration"));
  m.def(
      "homography_from_corners",
      [](const Eigen::Matrix<double, 4, 2>& src, const Eigen::Matrix<double, 4, 2>& dst) {
        std::array<Eigen::Vector2d, 4> s, d;
        for (int i = 0; i < 4; ++i) {
          s[i] = src.row(i).transpose();
          d[i] = dst.row(i).transpose();
        }
        return Eigen::Matrix3d(homography_from_corners(s, d));
      },
      py::arg("src"), py::arg("dst"));
  m.def("apply_homography", &apply_homography, py::arg("H"), py::arg("p"));

  using namespace tf::learner;
  py::class_<LearnerConfig>(m, "LearnerConfig")
      .def(py::init<>())
      .def_readwrite("hidden", &LearnerConfig::hidden)
      .def_readwrite("lr", &LearnerConfig::lr)
      .def_readwrite("clip_eps", &LearnerConfig::clip_eps)
      .def_readwrite("epochs", &LearnerConfig::epochs)
      .def_readwrite("rollout_steps", &LearnerConfig::rollout_steps)
      .def_readwrite("minibatch", &LearnerConfig::minibatch)
      .def_readwrite("gae_lambda", &LearnerConfig::gae_lambda)
      .def_readwrite("ent_coef", &LearnerConfig::ent_coef)
      .def_readwrite("vf_coef", &LearnerConfig::vf_coef)
      .def_readwrite("total_steps", &LearnerConfig::total_steps)
      .def_readwrite("eval_interval", &LearnerConfig::eval_interval)
      .def_readwrite("eval_episodes", &LearnerConfig::eval_episodes)
      .def_readwrite("seed", &LearnerConfig::seed)
      .def_readwrite("plateau_eps", &LearnerConfig::plateau_eps)
      .def_readwrite("plateau_window", &LearnerConfig::plateau_window)
      .def_readwrite("patience", &LearnerConfig::patience)
      .def_readwrite("success_target", &LearnerConfig::success_target)
      .def_readwrite("max_resume_steps", &LearnerConfig::max_resume_steps);

  py::class_<TrainSetup>(m, "TrainSetup")
      .def(py::init<>())
      .def_readwrite("model", &TrainSetup::model)
      .def_readwrite("env_config", &TrainSetup::env_config)
      .def_readwrite("scene_params", &TrainSetup::scene_params)
      .def_property(
          "start_q", [](const TrainSetup& s) { return Vec5(s.start_q.q); },
          [](TrainSetup& s, const Vec5& v) { s.start_q = to_joint_config(v); });
  m.def("default_setup",
        [] { return tf::config::RunConfig().train_setup(); });

  py::class_<EvalStats>(m, "EvalStats")
      .def_readonly("mean_reward", &EvalStats::mean_reward)
      .def_readonly("success_rate", &EvalStats::success_rate)
      .def_readonly("collision_rate", &EvalStats::collision_rate);

  py::class_<CurveRow>(m, "CurveRow")
      .def_readonly("global_step", &CurveRow::global_step)
      .def_readonly("mean_eval_reward", &CurveRow::mean_eval_reward)
      .def_readonly("success_rate", &CurveRow::success_rate)
      .def_readonly("collision_rate", &CurveRow::collision_rate);

  py::class_<PolicyCheckpoint>(m, "PolicyCheckpoint")
      .def_readonly("global_step", &PolicyCheckpoint::global_step)
      .def_readonly("mean_eval_reward", &PolicyCheckpoint::mean_eval_reward)
      .def_readonly("is_best", &PolicyCheckpoint::is_best)
      .def(
          "act",
          [](const PolicyCheckpoint& ckpt, const Eigen::VectorXd& obs, double a_max) {
            tf::env::Observation o;
            o.v = obs;
            const auto a = act_deterministic(o, ckpt.params, a_max);
            return Eigen::Vector3d(a.vec());
          },
          py::arg("obs"), py::arg("a_max") = 0.05);
  m.def("load_checkpoint", &load_checkpoint, py::arg("path"));
  m.def("save_checkpoint", &save_checkpoint, py::arg("checkpoint"), py::arg("path"));

  py::class_<TrainResult>(m, "TrainResult")
      .def_readonly("best", &TrainResult::best)
      .def_readonly("last", &TrainResult::last)
      .def_readonly("curve", &TrainResult::curve)
      .def_readonly("steps_run", &TrainResult::steps_run)
      .def_readonly("converged", &TrainResult::converged);
  m.def("train", &train, py::arg("setup"), py::arg("config"), py::arg("out_dir") = "");
  m.def("resume_training", &resume_training, py::arg("best"), py::arg("setup"),
        py::arg("config"), py::arg("out_dir") = "");
  m.def(
      "evaluate",
      [](const TrainSetup& setup, const PolicyCheckpoint& ckpt, int episodes,
         std::uint64_t seed) { return evaluate(setup, ckpt.params, episodes, seed); },
      py::arg("setup"), py::arg("checkpoint"), py::arg("episodes") = 16, py::arg("seed") = 0);
}
