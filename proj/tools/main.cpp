#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

#include "twinforge/config.hpp"
#include "twinforge/errors.hpp"
#include "twinforge/learner/train.hpp"
#include "twinforge/orchestrator/orchestrator.hpp"

namespace tf = twinforge;
using tf::config::RunConfig;

namespace {

void echo_config(const RunConfig& cfg) {
  std::filesystem::create_directories(cfg.out_dir);
  std::ofstream out(cfg.out_dir + "/config.toml");
  out << tf::config::to_toml(cfg);
}

tf::world::Scene default_true_scene(const RunConfig& cfg) {
  tf::world::Scene s;
  s.workspace_bounds = cfg.scene.bounds;
  s.goal_pos = Eigen::Vector3d(0.38, 0.10, cfg.scene.table_z);
  const double h = 0.06, w = 0.06;
  tf::world::BoxObstacle box;
  box.half_extents = Eigen::Vector3d(w / 2, w / 2, h / 2);
  box.center = Eigen::Vector3d(0.30, -0.08, h / 2);
  s.obstacles.push_back(box);
  return s;
}

int cmd_pretrain(RunConfig& cfg) {
  cfg.learner.seed = cfg.seed;
  echo_config(cfg);
  try {
    const auto setup = cfg.train_setup();
    const auto res = tf::learner::train(setup, cfg.learner, cfg.out_dir);
    const auto& last = res.curve.back();
    std::cout << "pretrain: steps=" << res.steps_run
              << " best_reward=" << res.best.mean_eval_reward
              << " final_success=" << last.success_rate << "\n";
    const bool ran_updates = cfg.learner.total_steps >= cfg.learner.rollout_steps;
    if (ran_updates && last.success_rate < cfg.learner.success_target) {
      std::cerr << "pretrain: success-rate target " << cfg.learner.success_target
                << " not met (" << last.success_rate << ")\n";
      return 2;
    }
    return 0;
  } catch (const tf::NonFinite& e) {
    std::cerr << "pretrain: " << e.what() << "\n";
    return 2;
  } catch (const tf::NoConvergence& e) {
    std::cerr << "pretrain: " << e.what() << "\n";
    return 2;
  }
}

int cmd_serve_plant(RunConfig& cfg, const std::string& scene_path) {
  cfg.learner.seed = cfg.seed;
  echo_config(cfg);
  tf::world::Scene scene =
      scene_path.empty() ? default_true_scene(cfg) : tf::world::load_scene_json(scene_path);

  tf::orchestrator::PlantConfig pcfg;
  pcfg.num_episodes = cfg.num_episodes;
  pcfg.camera = cfg.camera();
  pcfg.calibration = cfg.calibration();
  pcfg.schedule = cfg.schedule();
  pcfg.seed = tf::split_seed(cfg.seed, "plant");

  std::unique_ptr<tf::orchestrator::Channel> chan;
  try {
    chan = tf::orchestrator::tcp_listen(cfg.host, cfg.port, std::chrono::milliseconds(600000));
  } catch (const std::exception& e) {
    std::cerr << "serve-plant: " << e.what() << "\n";
    return 3;
  }
  const auto log = tf::orchestrator::run_plant(*chan, cfg.arm(), scene, cfg.env,
                                               cfg.start_config(), pcfg);
  log.save_jsonl(cfg.out_dir + "/plant_log.jsonl");
  std::cout << "serve-plant: episodes=" << log.records.size() << " end=" << log.end_reason
            << "\n";
  return 0;
}

int cmd_run(RunConfig& cfg, const std::string& ckpt_path, bool loopback, bool stub,
            const std::string& scene_path) {
  cfg.learner.seed = cfg.seed;
  echo_config(cfg);
  const auto model = cfg.arm();
  const auto start_q = cfg.start_config();

  std::unique_ptr<tf::orchestrator::Channel> chan;
  std::thread plant_thread;
  tf::orchestrator::PlantLog plant_log;
  if (loopback) {
    auto pair = tf::orchestrator::make_in_process_pair();
    chan = std::move(pair.a);
    auto plant_chan = std::shared_ptr<tf::orchestrator::Channel>(std::move(pair.b));
    tf::world::Scene scene =
        scene_path.empty() ? default_true_scene(cfg) : tf::world::load_scene_json(scene_path);
    tf::orchestrator::PlantConfig pcfg;
    pcfg.num_episodes = cfg.num_episodes;
    pcfg.camera = cfg.camera();
    pcfg.calibration = cfg.calibration();
    pcfg.schedule = cfg.schedule();
    pcfg.seed = tf::split_seed(cfg.seed, "plant");
    plant_thread = std::thread([&plant_log, plant_chan, &model, scene, &cfg, &start_q, pcfg] {
      plant_log = tf::orchestrator::run_plant(*plant_chan, model, scene, cfg.env, start_q, pcfg);
    });
  } else {
    try {
      chan = tf::orchestrator::tcp_connect(cfg.host, cfg.port);
    } catch (const tf::PlantUnreachable& e) {
      std::cerr << "run: " << e.what() << "\n";
      return 3;
    }
  }

  std::unique_ptr<tf::orchestrator::TwinPolicy> policy;
  std::unique_ptr<tf::orchestrator::Retrainer> retrainer;
  if (stub) {
    policy = std::make_unique<tf::orchestrator::StraightLinePolicy>(cfg.env.a_max,
                                                                    cfg.scene.table_z);
    retrainer = std::make_unique<tf::orchestrator::NullRetrainer>();
  } else {
    if (ckpt_path.empty()) {
      std::cerr << "run: --checkpoint is required without --stub\n";
      return 1;
    }
    auto ckpt = tf::learner::load_checkpoint(ckpt_path);
    auto pp = std::make_unique<tf::orchestrator::ParamsPolicy>(ckpt.params, cfg.env.a_max);
    retrainer = std::make_unique<tf::orchestrator::LearnerRetrainer>(
        *pp, std::move(ckpt), cfg.train_setup(), cfg.learner, cfg.out_dir);
    policy = std::move(pp);
  }

  int code = 0;
  try {
    tf::orchestrator::OrchestratorConfig ocfg;
    const auto log = tf::orchestrator::orchestrate(*chan, *policy, *retrainer, model, cfg.env,
                                                   start_q, ocfg);
    log.save_jsonl(cfg.out_dir + "/session_log.jsonl");
    bool all_published = log.records.size() == static_cast<size_t>(cfg.num_episodes);
    for (const auto& r : log.records) all_published = all_published && r.published;
    std::cout << "run: episodes=" << log.records.size() << " end=" << log.end_reason << "\n";
    if (log.end_reason.rfind("no convergence", 0) == 0)
      code = 4;
    else if (!all_published)
      code = 1;
  } catch (const tf::ProtocolViolation& e) {
    std::cerr << "run: protocol violation: " << e.what() << "\n";
    code = 5;
  } catch (const tf::NoConvergence& e) {
    std::cerr << "run: " << e.what() << "\n";
    code = 4;
  }
  if (plant_thread.joinable()) {
    plant_thread.join();
    plant_log.save_jsonl(cfg.out_dir + "/plant_log.jsonl");
  }
  return code;
}

int cmd_evaluate(RunConfig& cfg, const std::string& ckpt_path, int episodes) {
  cfg.learner.seed = cfg.seed;
  const auto ckpt = tf::learner::load_checkpoint(ckpt_path);
  const auto stats = tf::learner::evaluate(cfg.train_setup(), ckpt.params,
                                           episodes > 0 ? episodes : cfg.learner.eval_episodes,
                                           cfg.seed);
  std::cout << "mean_eval_reward=" << stats.mean_reward
            << " success_rate=" << stats.success_rate
            << " collision_rate=" << stats.collision_rate << "\n";
  return 0;
}

struct Curve {
  std::vector<std::int64_t> steps;
  std::vector<double> rewards;
};

Curve load_curve(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open curve: " + path);
  Curve c;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    std::getline(row, cell, ',');
    c.steps.push_back(std::stoll(cell));
    std::getline(row, cell, ',');
    c.rewards.push_back(std::stod(cell));
  }
  return c;
}

int cmd_report(RunConfig& cfg, const std::string& session_path, const std::string& pre_path,
               const std::string& re_path) {
  try {
    std::filesystem::create_directories(cfg.out_dir);
    tf::orchestrator::SessionLog session;
    if (!session_path.empty()) session = tf::orchestrator::SessionLog::load_jsonl(session_path);

    Curve pre, re;
    if (!pre_path.empty()) pre = load_curve(pre_path);
    if (!re_path.empty()) re = load_curve(re_path);

    // merged curves on a shared step axis
    std::map<std::int64_t, std::pair<std::optional<double>, std::optional<double>>> merged;
    for (size_t i = 0; i < pre.steps.size(); ++i) merged[pre.steps[i]].first = pre.rewards[i];
    for (size_t i = 0; i < re.steps.size(); ++i) merged[re.steps[i]].second = re.rewards[i];
    {
      std::ofstream out(cfg.out_dir + "/report.csv");
      out << "step,pretrain_reward,retrain_reward,difference\n";
      for (const auto& [step, pair] : merged) {
        out << step << ",";
        if (pair.first) out << *pair.first;
        out << ",";
        if (pair.second) out << *pair.second;
        out << ",";
        if (pair.first && pair.second) out << (*pair.second - *pair.first);
        out << "\n";
      }
    }

    std::int64_t retrain_steps = 0;
    int retrains = 0, collisions = 0, goal_misses = 0, published = 0;
    for (const auto& r : session.records) {
      retrain_steps += r.retrain_steps;
      retrains += r.retrain_count;
      if (r.retrain_reason == "collision") ++collisions;
      if (r.retrain_reason == "goal_not_reached") ++goal_misses;
      if (r.published) ++published;
    }
    const std::int64_t pretrain_steps = pre.steps.empty() ? 0 : pre.steps.back();
    std::ofstream out(cfg.out_dir + "/summary.txt");
    out << "episodes=" << session.records.size() << "\n";
    out << "published=" << published << "\n";
    out << "retrain_events=" << retrains << "\n";
    out << "retrain_steps=" << retrain_steps << "\n";
    out << "pretrain_steps=" << pretrain_steps << "\n";
    out << "retrain_ratio="
        << (pretrain_steps > 0 ? static_cast<double>(retrain_steps) / pretrain_steps : 0.0)
        << "\n";
    out << "collision_interrupts=" << collisions << "\n";
    out << "goal_interrupts=" << goal_misses << "\n";
    std::cout << "report written to " << cfg.out_dir << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "report: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"twinforge: digital-twin online RL training framework"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string log_level = "info";
  std::vector<double> start_q_opt;

  app.set_config("--config")->envname("TWINFORGE_CONFIG");
  // keep dotted option names intact when reading config files
  app.get_config_formatter_base()->parentSeparator(':');
  app.add_option("--seed", cfg.seed, "master seed");
  app.add_option("--out", cfg.out_dir, "output directory");
  app.add_option("--log-level", log_level, "log verbosity");
  app.add_option("--arm-file", cfg.arm_file, "arm spec JSON (default: reference arm)");
  app.add_option("--start-q", start_q_opt, "start joint configuration (5 radians)")
      ->expected(0, 5);

  app.add_option("--env.c1", cfg.env.weights.c1);
  app.add_option("--env.c2", cfg.env.weights.c2);
  app.add_option("--env.c3", cfg.env.weights.c3);
  app.add_option("--env.d_thre", cfg.env.weights.d_thre);
  app.add_option("--env.gamma", cfg.env.weights.gamma);
  app.add_option("--env.a_max", cfg.env.a_max);
  app.add_option("--env.horizon", cfg.env.horizon);
  app.add_option("--env.goal_radius", cfg.env.goal_radius);
  app.add_option("--env.control_period", cfg.env.control_period);

  app.add_option("--scene.x_min", cfg.scene.bounds.lo.x());
  app.add_option("--scene.x_max", cfg.scene.bounds.hi.x());
  app.add_option("--scene.y_min", cfg.scene.bounds.lo.y());
  app.add_option("--scene.y_max", cfg.scene.bounds.hi.y());
  app.add_option("--scene.z_max", cfg.scene.bounds.hi.z());
  app.add_option("--scene.table_z", cfg.scene.table_z);
  app.add_option("--scene.obstacle_h_min", cfg.scene.obstacle_h_min);
  app.add_option("--scene.obstacle_h_max", cfg.scene.obstacle_h_max);
  app.add_option("--scene.obstacle_w_min", cfg.scene.obstacle_w_min);
  app.add_option("--scene.obstacle_w_max", cfg.scene.obstacle_w_max);
  app.add_option("--scene.min_separation", cfg.scene.min_separation);

  app.add_option("--learner.hidden", cfg.learner.hidden);
  app.add_option("--learner.lr", cfg.learner.lr);
  app.add_option("--learner.clip_eps", cfg.learner.clip_eps);
  app.add_option("--learner.epochs", cfg.learner.epochs);
  app.add_option("--learner.rollout_steps", cfg.learner.rollout_steps);
  app.add_option("--learner.minibatch", cfg.learner.minibatch);
  app.add_option("--learner.gae_lambda", cfg.learner.gae_lambda);
  app.add_option("--learner.ent_coef", cfg.learner.ent_coef);
  app.add_option("--learner.vf_coef", cfg.learner.vf_coef);
  app.add_option("--total-steps,--learner.total_steps", cfg.learner.total_steps);
  app.add_option("--learner.eval_interval", cfg.learner.eval_interval);
  app.add_option("--learner.eval_episodes", cfg.learner.eval_episodes);
  app.add_option("--learner.plateau_eps", cfg.learner.plateau_eps);
  app.add_option("--learner.plateau_window", cfg.learner.plateau_window);
  app.add_option("--learner.patience", cfg.learner.patience);
  app.add_option("--learner.success_target", cfg.learner.success_target);
  app.add_option("--learner.max_resume_steps", cfg.learner.max_resume_steps);

  app.add_option("--perception.pixel_noise_sigma", cfg.pixel_noise_sigma);
  app.add_option("--perception.false_negative_rate", cfg.false_negative_rate);
  app.add_option("--perception.calibration_file", cfg.calibration_file);

  app.add_option("--episodes,--orchestrator.num_episodes", cfg.num_episodes);
  app.add_option("--perturb-episode,--orchestrator.perturb_episode", cfg.perturb_episode);
  app.add_option("--perturb-height,--orchestrator.perturb_height", cfg.perturb_height);
  app.add_option("--perturb-width,--orchestrator.perturb_width", cfg.perturb_width);
  app.add_option("--host,--orchestrator.host", cfg.host);
  app.add_option("--port,--orchestrator.port", cfg.port);

  auto* pretrain = app.add_subcommand("pretrain", "train the policy on small-obstacle scenes");

  std::string scene_path;
  auto* serve = app.add_subcommand("serve-plant", "run the simulated plant node");
  serve->add_option("--scene", scene_path, "ground-truth scene JSON");

  std::string ckpt_path;
  bool loopback = false, stub = false;
  auto* run = app.add_subcommand("run", "run the orchestrated twin session");
  run->add_option("--checkpoint", ckpt_path, "pretrained checkpoint (.tfck)");
  run->add_flag("--loopback", loopback, "in-process plant instead of a socket");
  run->add_flag("--stub", stub, "scripted policy, no learner");
  run->add_option("--scene", scene_path, "ground-truth scene JSON (loopback mode)");

  std::string eval_ckpt;
  int eval_episodes = 0;
  auto* evaluate = app.add_subcommand("evaluate", "evaluate a checkpoint on sampled scenes");
  evaluate->add_option("--checkpoint", eval_ckpt)->required();
  evaluate->add_option("--episodes", eval_episodes);

  std::string session_path, pre_curve, re_curve;
  auto* report = app.add_subcommand("report", "merge curves and summarize a session log");
  report->add_option("--session", session_path);
  report->add_option("--pretrain-curve", pre_curve);
  report->add_option("--retrain-curve", re_curve);

  try {
    app.parse(argc, argv);
  } catch (const CLI::FileError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  for (size_t i = 0; i < start_q_opt.size() && i < tf::kinematics::kNumJoints; ++i)
    cfg.start_q[i] = start_q_opt[i];

  try {
    if (*pretrain) return cmd_pretrain(cfg);
    if (*serve) return cmd_serve_plant(cfg, scene_path);
    if (*run) return cmd_run(cfg, ckpt_path, loopback, stub, scene_path);
    if (*evaluate) return cmd_evaluate(cfg, eval_ckpt, eval_episodes);
    if (*report) return cmd_report(cfg, session_path, pre_curve, re_curve);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
