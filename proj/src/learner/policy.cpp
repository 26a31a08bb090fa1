#include "twinforge/learner/policy.hpp"

#include <cmath>

#include "twinforge/errors.hpp"

namespace twinforge::learner {

namespace {
constexpr double kLog2Pi = 1.8378770664093453;

using MapM = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using CMapM =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using MapV = Eigen::Map<Eigen::VectorXd>;
using CMapV = Eigen::Map<const Eigen::VectorXd>;
}  // namespace

PolicyParams::PolicyParams(int obs_dim, int act_dim, int hidden)
    : obs_dim_(obs_dim), act_dim_(act_dim), hidden_(hidden) {
  int off = 0;
  auto take = [&off](int n) {
    const int at = off;
    off += n;
    return at;
  };
  layout_.a_w1 = take(hidden * obs_dim);
  layout_.a_b1 = take(hidden);
  layout_.a_w2 = take(hidden * hidden);
  layout_.a_b2 = take(hidden);
  layout_.a_w3 = take(act_dim * hidden);
  layout_.a_b3 = take(act_dim);
  layout_.log_std = take(act_dim);
  layout_.c_w1 = take(hidden * obs_dim);
  layout_.c_b1 = take(hidden);
  layout_.c_w2 = take(hidden * hidden);
  layout_.c_b2 = take(hidden);
  layout_.c_w3 = take(1 * hidden);
  layout_.c_b3 = take(1);
  layout_.total = off;
  flat = Eigen::VectorXd::Zero(off);
}

void PolicyParams::init(Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  auto fill = [&](int offset, int rows, int cols, double scale) {
    MapM w(flat.data() + offset, rows, cols);
    const double s = scale * std::sqrt(2.0 / (rows + cols));
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) w(i, j) = s * normal(rng);
  };
  fill(layout_.a_w1, hidden_, obs_dim_, 1.0);
  fill(layout_.a_w2, hidden_, hidden_, 1.0);
  fill(layout_.a_w3, act_dim_, hidden_, 0.01);
  fill(layout_.c_w1, hidden_, obs_dim_, 1.0);
  fill(layout_.c_w2, hidden_, hidden_, 1.0);
  fill(layout_.c_w3, 1, hidden_, 1.0);
  log_std().setConstant(-0.5);
}

Eigen::Map<Eigen::VectorXd> PolicyParams::log_std() {
  return MapV(flat.data() + layout_.log_std, act_dim_);
}
Eigen::Map<const Eigen::VectorXd> PolicyParams::log_std() const {
  return CMapV(flat.data() + layout_.log_std, act_dim_);
}

void PolicyParams::clamp_log_std(double lo, double hi) {
  auto ls = log_std();
  for (int i = 0; i < act_dim_; ++i) ls[i] = std::clamp(ls[i], lo, hi);
}

namespace {

Eigen::MatrixXd mlp_forward(const double* p, const PolicyParams::Layout& L, bool actor,
                            int obs_dim, int act_dim, int hidden, const Eigen::MatrixXd& X) {
  const int w1 = actor ? L.a_w1 : L.c_w1, b1 = actor ? L.a_b1 : L.c_b1;
  const int w2 = actor ? L.a_w2 : L.c_w2, b2 = actor ? L.a_b2 : L.c_b2;
  const int w3 = actor ? L.a_w3 : L.c_w3, b3 = actor ? L.a_b3 : L.c_b3;
  const int out_dim = actor ? act_dim : 1;
  CMapM W1(p + w1, hidden, obs_dim), W2(p + w2, hidden, hidden), W3(p + w3, out_dim, hidden);
  CMapV B1(p + b1, hidden), B2(p + b2, hidden), B3(p + b3, out_dim);
  Eigen::MatrixXd H1 = ((W1 * X).colwise() + B1).array().tanh();
  Eigen::MatrixXd H2 = ((W2 * H1).colwise() + B2).array().tanh();
  return (W3 * H2).colwise() + B3;
}

}  // namespace

Eigen::MatrixXd PolicyParams::actor_mean(const Eigen::MatrixXd& obs) const {
  return mlp_forward(flat.data(), layout_, true, obs_dim_, act_dim_, hidden_, obs);
}

Eigen::VectorXd PolicyParams::critic_value(const Eigen::MatrixXd& obs) const {
  return mlp_forward(flat.data(), layout_, false, obs_dim_, act_dim_, hidden_, obs).row(0);
}

double log_prob_of_presquash(const Eigen::VectorXd& u, const Eigen::VectorXd& mean,
                             const Eigen::VectorXd& log_std, double a_max) {
  double lp = 0.0;
  for (int i = 0; i < u.size(); ++i) {
    const double sigma = std::exp(log_std[i]);
    const double z = (u[i] - mean[i]) / sigma;
    lp += -0.5 * z * z - log_std[i] - 0.5 * kLog2Pi;
    const double th = std::tanh(u[i]);
    lp -= std::log(a_max * (1.0 - th * th) + 1e-12);
  }
  return lp;
}

double log_prob_of_action(const Eigen::VectorXd& action, const Eigen::VectorXd& mean,
                          const Eigen::VectorXd& log_std, double a_max) {
  Eigen::VectorXd u(action.size());
  for (int i = 0; i < action.size(); ++i) u[i] = std::atanh(action[i] / a_max);
  return log_prob_of_presquash(u, mean, log_std, a_max);
}

ActResult act(const env::Observation& obs, const PolicyParams& params, double a_max, Rng& rng) {
  const Eigen::MatrixXd X = obs.v;
  const Eigen::VectorXd mean = params.actor_mean(X).col(0);
  const double value = params.critic_value(X)[0];
  if (!mean.allFinite() || !std::isfinite(value))
    throw NonFinite("policy network produced a non-finite output");

  std::normal_distribution<double> normal(0.0, 1.0);
  const Eigen::VectorXd log_std = params.log_std();
  Eigen::Vector3d u;
  for (int i = 0; i < 3; ++i) u[i] = mean[i] + std::exp(log_std[i]) * normal(rng);

  ActResult res;
  res.pre_squash = u;
  res.action.dx = a_max * std::tanh(u[0]);
  res.action.dy = a_max * std::tanh(u[1]);
  res.action.dz = a_max * std::tanh(u[2]);
  res.log_prob = log_prob_of_presquash(u, mean, log_std, a_max);
  res.value = value;
  return res;
}

env::ActionDelta act_deterministic(const env::Observation& obs, const PolicyParams& params,
                                   double a_max) {
  const Eigen::VectorXd mean = params.actor_mean(obs.v).col(0);
  if (!mean.allFinite()) throw NonFinite("policy network produced a non-finite output");
  env::ActionDelta a;
  a.dx = a_max * std::tanh(mean[0]);
  a.dy = a_max * std::tanh(mean[1]);
  a.dz = a_max * std::tanh(mean[2]);
  return a;
}

}  // namespace twinforge::learner
