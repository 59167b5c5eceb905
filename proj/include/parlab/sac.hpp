#pragma once

// Soft actor-critic with twin critics, a tanh-squashed Gaussian actor and a
// fixed temperature. Shared by every method in the harness.

#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

#include "parlab/diffcore.hpp"
#include "parlab/replay_buffer.hpp"

namespace parlab {

struct SacConfig {
  int obs_dim = 3;
  std::vector<double> action_limits{2.0};
  int hidden = 64;
  Activation activation = Activation::Relu;
  double lr = 3e-4;
  double alpha = 0.2;
  double gamma = 0.99;
  double tau = 5e-3;
  double log_std_min = -20.0;
  double log_std_max = 2.0;

  int action_dim() const { return static_cast<int>(action_limits.size()); }
};

struct ActionSample {
  std::vector<double> action;
  double log_prob = 0.0;
};

struct CriticLosses {
  double q1 = 0.0;
  double q2 = 0.0;
};

class SacAgent {
 public:
  SacAgent() = default;

  SacAgent(SacConfig cfg, Rng& init) : cfg_(std::move(cfg)) {
    const int in = cfg_.obs_dim, ad = cfg_.action_dim(), h = cfg_.hidden;
    if (in <= 0 || ad <= 0 || h <= 0) throw ConfigError("SAC dimensions must be positive");
    actor_ = Mlp("actor", {in, h, h, 2 * ad}, init, cfg_.activation);
    q1_ = Mlp("q1", {in + ad, h, h, 1}, init, cfg_.activation);
    q2_ = Mlp("q2", {in + ad, h, h, 1}, init, cfg_.activation);
    q1_target_ = q1_;
    q2_target_ = q2_;
    AdamConfig adam{.lr = cfg_.lr};
    actor_opt_ = AdamState(actor_.params(), adam);
    q1_opt_ = AdamState(q1_.params(), adam);
    q2_opt_ = AdamState(q2_.params(), adam);
    limits_ = Eigen::Map<const Eigen::RowVectorXd>(cfg_.action_limits.data(), ad);
  }

  const SacConfig& config() const { return cfg_; }
  Mlp& actor() { return actor_; }
  const Mlp& actor() const { return actor_; }
  Mlp& q1() { return q1_; }
  Mlp& q2() { return q2_; }
  const Mlp& q1() const { return q1_; }
  const Mlp& q2() const { return q2_; }
  const Mlp& q1_target() const { return q1_target_; }
  const Mlp& q2_target() const { return q2_target_; }
  Mlp& q1_target() { return q1_target_; }
  Mlp& q2_target() { return q2_target_; }
  const AdamState& actor_opt() const { return actor_opt_; }

  // ---- policy ------------------------------------------------------------

  struct PolicyMatrices {
    Matrix action;    // n x d, within limits
    Matrix log_prob;  // n x 1
  };

  /// Squashed-Gaussian policy for given standard-normal noise (zero noise
  /// gives the deterministic action limit * tanh(mu)).
  PolicyMatrices policy(const Matrix& obs, const Matrix& noise) const {
    const Matrix head = actor_.eval(obs);
    const int d = cfg_.action_dim();
    const Matrix mu = head.leftCols(d);
    const Matrix log_std = head.rightCols(d).cwiseMax(cfg_.log_std_min).cwiseMin(cfg_.log_std_max);
    const Matrix u = mu + log_std.array().exp().matrix().cwiseProduct(noise);
    PolicyMatrices out;
    out.action = u.array().tanh().matrix();
    out.action.array().rowwise() *= limits_.array();
    const Matrix gauss = (-0.5 * noise.array().square() - log_std.array() - 0.5 * std::log(2.0 * std::numbers::pi)).matrix();
    const Matrix corr = u.unaryExpr([](double x) { return log_one_minus_tanh_sq(x); });
    out.log_prob = (gauss - corr).rowwise().sum();
    return out;
  }

  struct PolicyVars {
    Var action;
    Var log_prob;
  };

  PolicyVars policy(Var obs, const Matrix& noise, bool trainable = true) const {
    Graph& g = obs.graph();
    const int d = cfg_.action_dim();
    Var head = actor_.forward(obs, trainable);
    Var mu = slice_cols(head, 0, d);
    Var log_std = clamp(slice_cols(head, d, d), cfg_.log_std_min, cfg_.log_std_max);
    Var eps = g.constant(noise);
    Var u = mu + exp(log_std) * eps;
    Var scale = g.constant(limits_.replicate(obs.rows(), 1));
    Var action = scale * tanh(u);
    // log(1 - tanh(u)^2) = 2 (log 2 - u - softplus(-2u))
    Var corr = 2.0 * ((-1.0 * u) + (-1.0) * softplus(-2.0 * u) + std::log(2.0));
    Var gauss = (-1.0 * log_std) + g.constant(Matrix((-0.5 * noise.array().square() - 0.5 * std::log(2.0 * std::numbers::pi)).matrix()));
    return {action, sum_cols(gauss - corr)};
  }

  /// Log-density is that of the squashed variable tanh(u) in [-1, 1]^d; the
  /// constant Jacobian of the limit scaling is not included.
  ActionSample sample_action(std::span<const double> obs, bool deterministic, Rng& rng) const {
    if (static_cast<int>(obs.size()) != cfg_.obs_dim) throw ConfigError("observation width mismatch");
    const int d = cfg_.action_dim();
    Matrix o = Eigen::Map<const Eigen::RowVectorXd>(obs.data(), cfg_.obs_dim);
    Matrix noise = Matrix::Zero(1, d);
    if (!deterministic)
      for (int i = 0; i < d; ++i) noise(0, i) = rng.normal();
    PolicyMatrices p = policy(o, noise);
    ActionSample s;
    s.action.resize(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
      // tanh can round to exactly +-1; the limit is still respected.
      s.action[static_cast<std::size_t>(i)] = std::clamp(p.action(0, i), -cfg_.action_limits[static_cast<std::size_t>(i)],
                                                         cfg_.action_limits[static_cast<std::size_t>(i)]);
    }
    s.log_prob = p.log_prob(0, 0);
    return s;
  }

  Matrix draw_noise(Eigen::Index n, Rng& rng) const {
    Matrix eps(n, cfg_.action_dim());
    for (Eigen::Index r = 0; r < n; ++r)
      for (Eigen::Index c = 0; c < eps.cols(); ++c) eps(r, c) = rng.normal();
    return eps;
  }

  // ---- critics -----------------------------------------------------------

  static Matrix join(const Matrix& obs, const Matrix& act) {
    Matrix x(obs.rows(), obs.cols() + act.cols());
    x << obs, act;
    return x;
  }

  Matrix min_q(const Matrix& obs, const Matrix& act) const {
    const Matrix x = join(obs, act);
    return q1_.eval(x).cwiseMin(q2_.eval(x));
  }

  /// y = r + gamma (1 - done) [min target Q(s', a') - alpha log pi(a'|s')],
  /// a' ~ pi(.|s'). Computed off the tape, so no gradient reaches it.
  Matrix compute_target(const Batch& batch, const Matrix& next_noise) const {
    PolicyMatrices next = policy(batch.next_obs, next_noise);
    const Matrix x = join(batch.next_obs, next.action);
    const Matrix q = q1_target_.eval(x).cwiseMin(q2_target_.eval(x));
    const Matrix soft = q - cfg_.alpha * next.log_prob;
    return batch.rewards + cfg_.gamma * (1.0 - batch.dones.array()).matrix().cwiseProduct(soft);
  }

  Matrix compute_target(const Batch& batch, Rng& rng) const {
    return compute_target(batch, draw_noise(batch.size(), rng));
  }

  /// Mean (optionally weighted) squared TD error of each critic against y.
  std::pair<Var, Var> critic_loss(Graph& g, const Batch& batch, const Matrix& y) const {
    if (batch.empty()) throw UsageError("critic update on an empty batch");
    Var x = g.constant(join(batch.obs, batch.actions));
    Var target = g.constant(y);
    Var e1 = square(q1_.forward(x) - target);
    Var e2 = square(q2_.forward(x) - target);
    if (batch.weights.size()) {
      Var w = g.constant(batch.weights);
      e1 = w * e1;
      e2 = w * e2;
    }
    return {mean(e1), mean(e2)};
  }

  CriticLosses critic_update(const Batch& batch, const Matrix& y) {
    Graph g;
    auto [l1, l2] = critic_loss(g, batch, y);
    Gradients grads = g.backward(l1 + l2);
    adam_step(q1_opt_, q1_.params(), select(grads, q1_.params()));
    adam_step(q2_opt_, q2_.params(), select(grads, q2_.params()));
    return {l1.scalar(), l2.scalar()};
  }

  CriticLosses critic_update(const Batch& batch, Rng& rng) {
    if (batch.empty()) throw UsageError("critic update on an empty batch");
    return critic_update(batch, compute_target(batch, rng));
  }

  // ---- actor -------------------------------------------------------------

  /// mean[min_i Q_i(s, a~) - alpha log pi(a~|s)] with frozen critics.
  Var actor_objective(Graph& g, const Batch& batch, const Matrix& noise) const {
    Var obs = g.constant(batch.obs);
    PolicyVars p = policy(obs, noise);
    Var x = concat_cols(obs, p.action);
    Var q = minimum(q1_.forward(x, false), q2_.forward(x, false));
    return mean(q - cfg_.alpha * p.log_prob);
  }

  double actor_update_online(const Batch& batch, const Matrix& noise) {
    if (batch.empty()) throw UsageError("actor update on an empty batch");
    Graph g;
    Var obj = actor_objective(g, batch, noise);
    Gradients grads = g.backward(-1.0 * obj);
    adam_step(actor_opt_, actor_.params(), select(grads, actor_.params()));
    return obj.scalar();
  }

  double actor_update_online(const Batch& batch, Rng& rng) {
    return actor_update_online(batch, draw_noise(batch.size(), rng));
  }

  /// nu / (|mean_j min_i Q_i(s_j, a_j)| + 1e-8) over the batch's own actions.
  double lambda_norm(const Batch& batch, double nu) const {
    if (!(nu > 0.0)) throw UsageError("nu must be positive");
    if (batch.empty()) throw UsageError("lambda_norm on an empty batch");
    const double m = min_q(batch.obs, batch.actions).mean();
    return nu / (std::abs(m) + 1e-8);
  }

  /// lambda * actor_objective(mixed) - mean over source of (a - a~)^2.
  Var offline_objective(Graph& g, const Batch& source, const Batch& mixed, double lambda, const Matrix& mixed_noise,
                        const Matrix& source_noise) const {
    Var online = actor_objective(g, mixed, mixed_noise);
    Var src_obs = g.constant(source.obs);
    PolicyVars p = policy(src_obs, source_noise);
    Var bc = mean(square(g.constant(source.actions) - p.action));
    return lambda * online - bc;
  }

  double actor_update_offline(const Batch& source, const Batch& mixed, double nu, const Matrix& mixed_noise,
                              const Matrix& source_noise) {
    if (source.empty() || mixed.empty()) throw UsageError("actor update on an empty batch");
    const double lambda = lambda_norm(mixed, nu);
    Graph g;
    Var obj = offline_objective(g, source, mixed, lambda, mixed_noise, source_noise);
    apply_actor_gradients(g.backward(-1.0 * obj));
    return obj.scalar();
  }

  double actor_update_offline(const Batch& source, const Batch& mixed, double nu, Rng& rng) {
    Matrix mn = draw_noise(mixed.size(), rng);
    Matrix sn = draw_noise(source.size(), rng);
    return actor_update_offline(source, mixed, nu, mn, sn);
  }

  /// One Adam step on the actor from gradients of a loss to minimize.
  void apply_actor_gradients(const Gradients& grads) {
    adam_step(actor_opt_, actor_.params(), select(grads, actor_.params()));
  }

  void soft_update() { soft_update(cfg_.tau); }
  void soft_update(double tau) {
    polyak_update(q1_target_.params(), q1_.params(), tau);
    polyak_update(q2_target_.params(), q2_.params(), tau);
  }

 private:
  static double log_one_minus_tanh_sq(double u) {
    const double x = -2.0 * u;
    const double sp = std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
    return 2.0 * (std::log(2.0) - u - sp);
  }

  SacConfig cfg_;
  Mlp actor_, q1_, q2_, q1_target_, q2_target_;
  AdamState actor_opt_, q1_opt_, q2_opt_;
  Eigen::RowVectorXd limits_;
};

}  // namespace parlab
