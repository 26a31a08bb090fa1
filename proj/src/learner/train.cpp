#include "twinforge/learner/train.hpp"

#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>

#include "twinforge/errors.hpp"

namespace twinforge::learner {

namespace {

// Resample until the fixed start pose is clear of the sampled obstacle.
world::Scene sample_valid_scene(const TrainSetup& setup, Rng& rng) {
  for (int attempt = 0; attempt < 100; ++attempt) {
    world::Scene s = world::sample_scene(rng, setup.scene_params);
    if (!world::in_collision(setup.model, setup.start_q, s)) return s;
  }
  throw SamplingExhausted("no start-collision-free scene in 100 attempts");
}

struct RolloutState {
  env::Env env;
  env::Observation obs;
  bool needs_reset = true;
};

void collect_rollout(const TrainSetup& setup, const PolicyParams& params, RolloutBuffer& buf,
                     RolloutState& st, Rng& scene_rng, Rng& act_rng, double a_max) {
  const int n = buf.size();
  for (int t = 0; t < n; ++t) {
    if (st.needs_reset) {
      st.obs = st.env.reset(sample_valid_scene(setup, scene_rng), setup.start_q);
      st.needs_reset = false;
    }
    const ActResult ar = act(st.obs, params, a_max, act_rng);
    const env::StepOutcome out = st.env.step(ar.action);

    buf.obs.col(t) = st.obs.v;
    buf.pre_squash.col(t) = ar.pre_squash;
    buf.log_prob[t] = ar.log_prob;
    buf.value[t] = ar.value;
    buf.reward[t] = out.reward;
    buf.terminated[t] = out.terminated ? 1 : 0;
    buf.truncated[t] = out.truncated ? 1 : 0;

    st.obs = out.observation;
    if (out.terminated || out.truncated) {
      if (out.truncated) buf.bootstrap_value[t] = params.critic_value(st.obs.v)[0];
      st.needs_reset = true;
    } else if (t == n - 1) {
      buf.bootstrap_value[t] = params.critic_value(st.obs.v)[0];
    }
  }
}

struct EvalEpisode {
  double total_reward;
  int flag_task;
  int flag_safe;
};

EvalEpisode run_eval_episode(const TrainSetup& setup, const PolicyParams& params,
                             const world::Scene& scene) {
  env::Env e(setup.model, setup.env_config);
  env::Observation obs = e.reset(scene, setup.start_q);
  EvalEpisode ep{0.0, 0, 1};
  while (!e.done()) {
    const env::ActionDelta a = act_deterministic(obs, params, setup.env_config.a_max);
    const env::StepOutcome out = e.step(a);
    ep.total_reward += out.reward;
    obs = out.observation;
  }
  ep.flag_task = e.flag_task();
  ep.flag_safe = e.flag_safe();
  return ep;
}

struct Trainer {
  const TrainSetup& setup;
  const LearnerConfig& config;
  std::string out_dir;
  PolicyCheckpoint best;
  PolicyCheckpoint cur;
  std::vector<CurveRow> curve;

  void save(const PolicyCheckpoint& ckpt, const std::string& name) const {
    if (out_dir.empty()) return;
    std::filesystem::create_directories(out_dir);
    save_checkpoint(ckpt, out_dir + "/" + name);
  }

  EvalStats do_eval(std::int64_t global_step) {
    const EvalStats stats = evaluate(setup, cur.params, config.eval_episodes, config.seed);
    cur.global_step = global_step;
    cur.mean_eval_reward = stats.mean_reward;
    cur.is_best = false;
    curve.push_back({global_step, stats.mean_reward, stats.success_rate, stats.collision_rate});
    save(cur, "ckpt_" + std::to_string(global_step) + ".tfck");
    if (curve.size() == 1 || stats.mean_reward > best.mean_eval_reward) {
      best = cur;
      best.is_best = true;
      save(best, "best.tfck");
    }
    return stats;
  }
};

}  // namespace

EvalStats evaluate(const TrainSetup& setup, const PolicyParams& params, int episodes,
                   std::uint64_t eval_seed) {
  EvalStats stats;
  for (int i = 0; i < episodes; ++i) {
    Rng rng = make_rng(eval_seed + static_cast<std::uint64_t>(i) * 7919u, "eval-scene");
    Rng scene_rng(rng());
    world::Scene scene = sample_valid_scene(setup, scene_rng);
    const EvalEpisode ep = run_eval_episode(setup, params, scene);
    stats.mean_reward += ep.total_reward;
    stats.success_rate += ep.flag_task;
    stats.collision_rate += 1 - ep.flag_safe;
  }
  stats.mean_reward /= episodes;
  stats.success_rate /= episodes;
  stats.collision_rate /= episodes;
  return stats;
}

void write_reward_curve_csv(const std::vector<CurveRow>& curve, const std::string& path) {
  std::ofstream out(path);
  out << "global_step,mean_eval_reward,success_rate,collision_rate\n";
  for (const auto& row : curve) {
    out << row.global_step << "," << row.mean_eval_reward << "," << row.success_rate << ","
        << row.collision_rate << "\n";
  }
}

namespace {

TrainResult train_loop(Trainer& tr, std::int64_t step_budget, bool resume_mode) {
  const TrainSetup& setup = tr.setup;
  const LearnerConfig& cfg = tr.config;

  PpoHyper hyper;
  hyper.clip_eps = cfg.clip_eps;
  hyper.vf_coef = cfg.vf_coef;
  hyper.ent_coef = cfg.ent_coef;
  hyper.a_max = setup.env_config.a_max;
  hyper.epochs = cfg.epochs;
  hyper.minibatch = cfg.minibatch;
  hyper.lr = cfg.lr;
  tr.cur.optimizer.lr_ = cfg.lr;

  Rng scene_rng = make_rng(cfg.seed, resume_mode ? "resume-scenes" : "train-scenes");
  Rng act_rng = make_rng(cfg.seed, resume_mode ? "resume-actions" : "train-actions");
  Rng shuffle_rng = make_rng(cfg.seed, "shuffle");

  RolloutBuffer buf;
  buf.resize(tr.cur.params.obs_dim(), tr.cur.params.act_dim(), cfg.rollout_steps);
  RolloutState st{env::Env(setup.model, setup.env_config), {}, true};

  std::int64_t global_step = 0;
  tr.do_eval(0);

  std::deque<double> eval_history;
  eval_history.push_back(tr.curve.back().mean_eval_reward);
  double prev_ma = eval_history.back();
  int plateau_streak = 0;
  bool converged = false;
  std::int64_t next_eval = cfg.eval_interval;

  // never start a rollout the budget cannot cover
  while (global_step + cfg.rollout_steps <= step_budget && !converged) {
    collect_rollout(setup, tr.cur.params, buf, st, scene_rng, act_rng, hyper.a_max);
    global_step += cfg.rollout_steps;

    const GaeResult gae = compute_gae(buf, setup.env_config.weights.gamma, cfg.gae_lambda);
    ppo_update(buf, gae, tr.cur.params, tr.cur.optimizer, hyper, shuffle_rng);

    if (global_step >= next_eval) {
      const EvalStats stats = tr.do_eval(global_step);
      next_eval += cfg.eval_interval;

      if (resume_mode) {
        eval_history.push_back(stats.mean_reward);
        while (eval_history.size() > static_cast<size_t>(cfg.plateau_window))
          eval_history.pop_front();
        double ma = 0.0;
        for (double v : eval_history) ma += v;
        ma /= eval_history.size();
        const bool window_full = eval_history.size() == static_cast<size_t>(cfg.plateau_window);
        if (window_full && std::abs(ma - prev_ma) < cfg.plateau_eps &&
            stats.success_rate >= cfg.success_target) {
          if (++plateau_streak >= cfg.patience) converged = true;
        } else {
          plateau_streak = 0;
        }
        prev_ma = ma;
      }
    }
  }

  if (!tr.out_dir.empty()) {
    std::filesystem::create_directories(tr.out_dir);
    write_reward_curve_csv(tr.curve, tr.out_dir + "/reward_curve.csv");
  }

  TrainResult res;
  res.best = tr.best;
  res.last = tr.cur;
  res.curve = tr.curve;
  res.steps_run = global_step;
  res.converged = converged;
  return res;
}

}  // namespace

TrainResult train(const TrainSetup& setup, const LearnerConfig& config,
                  const std::string& out_dir) {
  Trainer tr{setup, config, out_dir, {}, {}, {}};
  tr.cur.params = PolicyParams(env::kObsDim, 3, config.hidden);
  Rng init_rng = make_rng(config.seed, "policy-init");
  tr.cur.params.init(init_rng);
  tr.cur.optimizer = Adam(tr.cur.params.size(), config.lr);
  return train_loop(tr, config.total_steps, /*resume_mode=*/false);
}

TrainResult resume_training(const PolicyCheckpoint& best, const TrainSetup& new_setup,
                            const LearnerConfig& config, const std::string& out_dir) {
  Trainer tr{new_setup, config, out_dir, {}, {}, {}};
  tr.cur = best;
  tr.cur.is_best = false;
  TrainResult res = train_loop(tr, config.max_resume_steps, /*resume_mode=*/true);
  if (!res.converged)
    throw NoConvergence("resume_training: no reward plateau within max_resume_steps");
  return res;
}

}  // namespace twinforge::learner
