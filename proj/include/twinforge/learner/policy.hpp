#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "twinforge/env.hpp"
#include "twinforge/random.hpp"

namespace twinforge::learner {

// Actor-critic parameters stored in one flat vector so the optimizer,
// checkpointing, and finite-difference checks all see the same layout:
//   actor W1,b1,W2,b2,W3,b3, log_std, critic W1,b1,W2,b2,W3,b3
// Matrices are row-major blocks of shape (out x in).
class PolicyParams {
 public:
  PolicyParams(int obs_dim = env::kObsDim, int act_dim = 3, int hidden = 64);

  int obs_dim() const { return obs_dim_; }
  int act_dim() const { return act_dim_; }
  int hidden() const { return hidden_; }
  int size() const { return static_cast<int>(flat.size()); }

  // Gaussian policy init; final actor layer downscaled.
  void init(Rng& rng);

  // mean (act_dim x n) for an observation batch (obs_dim x n)
  Eigen::MatrixXd actor_mean(const Eigen::MatrixXd& obs) const;
  // values (n)
  Eigen::VectorXd critic_value(const Eigen::MatrixXd& obs) const;

  Eigen::Map<Eigen::VectorXd> log_std();
  Eigen::Map<const Eigen::VectorXd> log_std() const;
  void clamp_log_std(double lo = -5.0, double hi = 2.0);

  Eigen::VectorXd flat;

  // Offsets of each named block, used by the backward pass and checkpoints.
  struct Layout {
    int a_w1, a_b1, a_w2, a_b2, a_w3, a_b3, log_std, c_w1, c_b1, c_w2, c_b2, c_w3, c_b3, total;
  };
  const Layout& layout() const { return layout_; }

 private:
  int obs_dim_, act_dim_, hidden_;
  Layout layout_{};
};

struct ActResult {
  env::ActionDelta action;
  Eigen::Vector3d pre_squash;  // the Gaussian sample before tanh
  double log_prob = 0.0;
  double value = 0.0;
};

// Tanh-squashed Gaussian sample scaled to a_max; log_prob carries the squash
// correction. Throws NonFinite if the network output is NaN.
ActResult act(const env::Observation& obs, const PolicyParams& params, double a_max, Rng& rng);

// Mean action (no sampling), for evaluation and twin rollouts.
env::ActionDelta act_deterministic(const env::Observation& obs, const PolicyParams& params,
                                   double a_max);

// log pi(a) for a given squashed action; used by density checks.
double log_prob_of_action(const Eigen::VectorXd& action, const Eigen::VectorXd& mean,
                          const Eigen::VectorXd& log_std, double a_max);

// log pi from the stored pre-squash sample.
double log_prob_of_presquash(const Eigen::VectorXd& u, const Eigen::VectorXd& mean,
                             const Eigen::VectorXd& log_std, double a_max);

}  // namespace twinforge::learner
