#include "twinforge/learner/rollout.hpp"

namespace twinforge::learner {

void RolloutBuffer::resize(int obs_dim, int act_dim, int n) {
  obs.resize(obs_dim, n);
  pre_squash.resize(act_dim, n);
  log_prob.resize(n);
  value.resize(n);
  reward.resize(n);
  terminated.assign(n, 0);
  truncated.assign(n, 0);
  bootstrap_value = Eigen::VectorXd::Zero(n);
}

GaeResult compute_gae(const RolloutBuffer& b, double gamma, double lambda) {
  const int n = b.size();
  GaeResult out;
  out.advantages.resize(n);
  out.returns.resize(n);
  double next_adv = 0.0;
  for (int t = n - 1; t >= 0; --t) {
    double next_value;
    if (b.terminated[t]) {
      next_value = 0.0;
      next_adv = 0.0;
    } else if (b.truncated[t] || t == n - 1) {
      next_value = b.bootstrap_value[t];
      next_adv = 0.0;
    } else {
      next_value = b.value[t + 1];
    }
    const double delta = b.reward[t] + gamma * next_value - b.value[t];
    next_adv = delta + gamma * lambda * next_adv;
    out.advantages[t] = next_adv;
    out.returns[t] = next_adv + b.value[t];
  }
  return out;
}

}  // namespace twinforge::learner
