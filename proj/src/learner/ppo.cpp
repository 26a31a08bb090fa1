#include "twinforge/learner/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "twinforge/errors.hpp"

namespace twinforge::learner {

namespace {
constexpr double kLog2Pi = 1.8378770664093453;

using MapM = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using CMapM =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using MapV = Eigen::Map<Eigen::VectorXd>;
using CMapV = Eigen::Map<const Eigen::VectorXd>;

struct MlpCache {
  Eigen::MatrixXd H1, H2, Y;
};

MlpCache mlp_forward_cached(const double* p, int w1, int b1, int w2, int b2, int w3, int b3,
                            int in, int hid, int out, const Eigen::MatrixXd& X) {
  CMapM W1(p + w1, hid, in), W2(p + w2, hid, hid), W3(p + w3, out, hid);
  CMapV B1(p + b1, hid), B2(p + b2, hid), B3(p + b3, out);
  MlpCache c;
  c.H1 = ((W1 * X).colwise() + B1).array().tanh();
  c.H2 = ((W2 * c.H1).colwise() + B2).array().tanh();
  c.Y = (W3 * c.H2).colwise() + B3;
  return c;
}

void mlp_backward(const double* p, double* g, int w1, int b1, int w2, int b2, int w3, int b3,
                  int in, int hid, int out, const Eigen::MatrixXd& X, const MlpCache& c,
                  const Eigen::MatrixXd& Gy) {
  CMapM W2(p + w2, hid, hid), W3(p + w3, out, hid);
  MapM dW1(g + w1, hid, in), dW2(g + w2, hid, hid), dW3(g + w3, out, hid);
  MapV dB1(g + b1, hid), dB2(g + b2, hid), dB3(g + b3, out);

  dW3 += Gy * c.H2.transpose();
  dB3 += Gy.rowwise().sum();
  Eigen::MatrixXd G2 =
      (W3.transpose() * Gy).array() * (1.0 - c.H2.array().square());
  dW2 += G2 * c.H1.transpose();
  dB2 += G2.rowwise().sum();
  Eigen::MatrixXd G1 =
      (W2.transpose() * G2).array() * (1.0 - c.H1.array().square());
  dW1 += G1 * X.transpose();
  dB1 += G1.rowwise().sum();
}

}  // namespace

double ppo_loss_and_grad(const PolicyParams& params, const PpoBatch& batch,
                         const PpoHyper& hyper, Eigen::VectorXd& grad, PpoStats* stats) {
  const int n = static_cast<int>(batch.old_log_prob.size());
  const int obs_dim = params.obs_dim();
  const int act_dim = params.act_dim();
  const int hid = params.hidden();
  const auto& L = params.layout();
  const double* p = params.flat.data();

  grad.setZero(params.size());
  double* g = grad.data();

  const MlpCache actor =
      mlp_forward_cached(p, L.a_w1, L.a_b1, L.a_w2, L.a_b2, L.a_w3, L.a_b3, obs_dim, hid,
                         act_dim, batch.obs);
  const MlpCache critic =
      mlp_forward_cached(p, L.c_w1, L.c_b1, L.c_w2, L.c_b2, L.c_w3, L.c_b3, obs_dim, hid, 1,
                         batch.obs);

  const Eigen::VectorXd log_std = params.log_std();
  Eigen::VectorXd sigma = log_std.array().exp();

  // Squash corrections are parameter-independent given the stored samples;
  // recomputing them keeps the new log-probs on the same scale as the stored
  // ones so the ratio is exact.
  Eigen::VectorXd lpn(n);
  Eigen::MatrixXd Z(act_dim, n);
  for (int k = 0; k < n; ++k) {
    double lp = 0.0;
    for (int i = 0; i < act_dim; ++i) {
      const double z = (batch.pre_squash(i, k) - actor.Y(i, k)) / sigma[i];
      Z(i, k) = z;
      lp += -0.5 * z * z - log_std[i] - 0.5 * kLog2Pi;
      const double th = std::tanh(batch.pre_squash(i, k));
      lp -= std::log(hyper.a_max * (1.0 - th * th) + 1e-12);
    }
    lpn[k] = lp;
  }

  double policy_loss = 0.0, value_loss = 0.0, kl = 0.0;
  int clipped_count = 0;
  Eigen::MatrixXd Gmean = Eigen::MatrixXd::Zero(act_dim, n);
  MapV d_log_std(g + L.log_std, act_dim);

  for (int k = 0; k < n; ++k) {
    const double A = batch.advantage[k];
    const double rho = std::exp(lpn[k] - batch.old_log_prob[k]);
    const double rho_c = std::clamp(rho, 1.0 - hyper.clip_eps, 1.0 + hyper.clip_eps);
    const double unclipped = rho * A;
    const double clipped = rho_c * A;
    policy_loss -= std::min(unclipped, clipped) / n;
    if (std::abs(rho - 1.0) > hyper.clip_eps) ++clipped_count;
    kl += (batch.old_log_prob[k] - lpn[k]) / n;

    const double gk = (unclipped <= clipped) ? rho * A : 0.0;
    for (int i = 0; i < act_dim; ++i) {
      // d(-min)/dmean and d(-min)/dlog_std through lpn
      Gmean(i, k) = -(gk / n) * (Z(i, k) / sigma[i]);
      d_log_std[i] += -(gk / n) * (Z(i, k) * Z(i, k) - 1.0);
    }

    const double verr = critic.Y(0, k) - batch.returns[k];
    value_loss += 0.5 * verr * verr / n;
  }

  // Gaussian entropy bonus (state independent).
  const double entropy = log_std.sum() + 0.5 * act_dim * (1.0 + kLog2Pi);
  for (int i = 0; i < act_dim; ++i) d_log_std[i] -= hyper.ent_coef;

  Eigen::MatrixXd Gv(1, n);
  for (int k = 0; k < n; ++k) Gv(0, k) = hyper.vf_coef * (critic.Y(0, k) - batch.returns[k]) / n;

  mlp_backward(p, g, L.a_w1, L.a_b1, L.a_w2, L.a_b2, L.a_w3, L.a_b3, obs_dim, hid, act_dim,
               batch.obs, actor, Gmean);
  mlp_backward(p, g, L.c_w1, L.c_b1, L.c_w2, L.c_b2, L.c_w3, L.c_b3, obs_dim, hid, 1,
               batch.obs, critic, Gv);

  const double loss = policy_loss + hyper.vf_coef * value_loss - hyper.ent_coef * entropy;
  if (stats) {
    stats->policy_loss += policy_loss;
    stats->value_loss += value_loss;
    stats->entropy += entropy;
    stats->clip_fraction += static_cast<double>(clipped_count) / n;
    stats->approx_kl += kl;
    stats->updates += 1;
  }
  return loss;
}

void Adam::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
  t_ += 1;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_.array() + (1.0 - beta2_) * grad.array().square();
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  params.array() -= lr_ * (m_.array() / bc1) / ((v_.array() / bc2).sqrt() + eps_);
}

PpoStats ppo_update(const RolloutBuffer& buffer, const GaeResult& gae, PolicyParams& params,
                    Adam& opt, const PpoHyper& hyper, Rng& rng) {
  const int n = buffer.size();
  Eigen::VectorXd adv = gae.advantages;
  const double mean = adv.mean();
  const double std = std::sqrt((adv.array() - mean).square().sum() / n);
  adv = (adv.array() - mean) / (std + 1e-8);

  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);

  PpoStats stats;
  Eigen::VectorXd grad;
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    std::shuffle(idx.begin(), idx.end(), rng);
    for (int start = 0; start < n; start += hyper.minibatch) {
      const int m = std::min(hyper.minibatch, n - start);
      PpoBatch batch;
      batch.obs.resize(buffer.obs.rows(), m);
      batch.pre_squash.resize(buffer.pre_squash.rows(), m);
      batch.old_log_prob.resize(m);
      batch.advantage.resize(m);
      batch.returns.resize(m);
      for (int j = 0; j < m; ++j) {
        const int k = idx[start + j];
        batch.obs.col(j) = buffer.obs.col(k);
        batch.pre_squash.col(j) = buffer.pre_squash.col(k);
        batch.old_log_prob[j] = buffer.log_prob[k];
        batch.advantage[j] = adv[k];
        batch.returns[j] = gae.returns[k];
      }
      const double loss = ppo_loss_and_grad(params, batch, hyper, grad, &stats);
      if (!std::isfinite(loss)) throw NonFinite("PPO loss diverged to NaN/inf");
      opt.step(params.flat, grad);
      params.clamp_log_std();
    }
  }
  if (stats.updates > 0) {
    stats.policy_loss /= stats.updates;
    stats.value_loss /= stats.updates;
    stats.entropy /= stats.updates;
    stats.clip_fraction /= stats.updates;
    stats.approx_kl /= stats.updates;
  }
  return stats;
}

}  // namespace twinforge::learner
