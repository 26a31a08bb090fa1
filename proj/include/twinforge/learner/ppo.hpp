#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "twinforge/learner/policy.hpp"
#include "twinforge/learner/rollout.hpp"

namespace twinforge::learner {

struct PpoHyper {
  double clip_eps = 0.2;
  double vf_coef = 0.5;
  double ent_coef = 0.0;
  double a_max = 0.05;
  int epochs = 10;
  int minibatch = 64;
  double lr = 3e-4;
};

struct PpoBatch {
  Eigen::MatrixXd obs;         // obs_dim x n
  Eigen::MatrixXd pre_squash;  // act_dim x n
  Eigen::VectorXd old_log_prob;
  Eigen::VectorXd advantage;
  Eigen::VectorXd returns;
};

struct PpoStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
  int updates = 0;
};

// Clipped-surrogate + value + entropy loss on one minibatch; analytic
// gradient written into grad (same layout as params.flat). Returns the loss.
double ppo_loss_and_grad(const PolicyParams& params, const PpoBatch& batch,
                         const PpoHyper& hyper, Eigen::VectorXd& grad, PpoStats* stats = nullptr);

// First/second-moment adaptive gradient step.
class Adam {
 public:
  Adam() = default;
  Adam(int size, double lr) : lr_(lr), m_(Eigen::VectorXd::Zero(size)), v_(Eigen::VectorXd::Zero(size)) {}

  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad);

  double lr_ = 3e-4;
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  std::int64_t t_ = 0;
  Eigen::VectorXd m_, v_;
};

// Full PPO update over the buffer: whole-batch advantage normalization,
// shuffled minibatches, Adam steps. Throws NonFinite on a NaN loss.
PpoStats ppo_update(const RolloutBuffer& buffer, const GaeResult& gae, PolicyParams& params,
                    Adam& opt, const PpoHyper& hyper, Rng& rng);

}  // namespace twinforge::learner
