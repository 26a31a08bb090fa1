#pragma once

#include <Eigen/Dense>
#include <vector>

namespace twinforge::learner {

// Per-step rollout records. Terminal steps bootstrap with value 0; truncated
// steps (and a rollout cut mid-episode) bootstrap with bootstrap_value.
struct RolloutBuffer {
  Eigen::MatrixXd obs;        // obs_dim x N
  Eigen::MatrixXd pre_squash; // act_dim x N
  Eigen::VectorXd log_prob;   // N
  Eigen::VectorXd value;      // N
  Eigen::VectorXd reward;     // N
  std::vector<char> terminated;
  std::vector<char> truncated;
  Eigen::VectorXd bootstrap_value;  // meaningful where truncated (or last step)

  int size() const { return static_cast<int>(log_prob.size()); }
  void resize(int obs_dim, int act_dim, int n);
};

struct GaeResult {
  Eigen::VectorXd advantages;
  Eigen::VectorXd returns;  // advantages + values
};

GaeResult compute_gae(const RolloutBuffer& buffer, double gamma, double lambda);

}  // namespace twinforge::learner
