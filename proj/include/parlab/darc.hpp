#pragma once

// DARC baseline: (s, a, s') and (s, a) domain classifiers, the log-ratio
// reward correction and its clipped importance-weight form.

#include <algorithm>
#include <cmath>

#include "parlab/diffcore.hpp"
#include "parlab/replay_buffer.hpp"

namespace parlab {

struct ClassifierConfig {
  int obs_dim = 3;
  int action_dim = 1;
  int hidden = 64;
  double noise_std = 1.0;
  double lr = 3e-4;
};

/// Softmax outputs of both classifiers for a batch. Column 0 is the source
/// class, column 1 the target class.
struct DomainProbs {
  Matrix sas;
  Matrix sa;
};

struct ClassifierLosses {
  double sas = 0.0;
  double sa = 0.0;
};

inline constexpr double kProbClamp = 1e-6;
inline constexpr double kWeightMin = 1e-4;
inline constexpr double kWeightMax = 1.0;

/// -log[q_sas(t) q_sa(s) / (q_sas(s) q_sa(t))] with each probability clamped
/// to [1e-6, 1 - 1e-6].
inline double delta_r_from_probs(double sas_target, double sas_source, double sa_target, double sa_source) {
  auto c = [](double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); };
  // Grouped as a difference of log-odds so that swapping labels negates it exactly.
  const double sas = std::log(c(sas_target)) - std::log(c(sas_source));
  const double sa = std::log(c(sa_target)) - std::log(c(sa_source));
  return -(sas - sa);
}

inline double weight_from_delta_r(double delta_r) { return std::clamp(std::exp(-delta_r), kWeightMin, kWeightMax); }

class DomainClassifiers {
 public:
  DomainClassifiers() = default;

  DomainClassifiers(ClassifierConfig cfg, Rng& init) : cfg_(cfg) {
    const int s = cfg_.obs_dim, a = cfg_.action_dim, h = cfg_.hidden;
    sas_ = Mlp("sas", {2 * s + a, h, h, 2}, init);
    sa_ = Mlp("sa", {s + a, h, h, 2}, init);
    sas_opt_ = AdamState(sas_.params(), AdamConfig{.lr = cfg_.lr});
    sa_opt_ = AdamState(sa_.params(), AdamConfig{.lr = cfg_.lr});
  }

  const ClassifierConfig& config() const { return cfg_; }
  Mlp& sas() { return sas_; }
  Mlp& sa() { return sa_; }
  const Mlp& sas() const { return sas_; }
  const Mlp& sa() const { return sa_; }

  static Matrix sas_input(const Batch& b) {
    Matrix x(b.size(), 2 * b.obs.cols() + b.actions.cols());
    x << b.obs, b.actions, b.next_obs;
    return x;
  }
  static Matrix sa_input(const Batch& b) {
    Matrix x(b.size(), b.obs.cols() + b.actions.cols());
    x << b.obs, b.actions;
    return x;
  }

  /// Mean cross-entropy of one classifier over source rows (label 0) and
  /// target rows (label 1), averaged over the two halves.
  static Var cross_entropy(Graph& g, const Mlp& net, const Matrix& source_x, const Matrix& target_x) {
    Var ls = net.forward(g.constant(source_x));
    Var lt = net.forward(g.constant(target_x));
    Var ce_s = mean(logsumexp_cols(ls) - slice_cols(ls, 0, 1));
    Var ce_t = mean(logsumexp_cols(lt) - slice_cols(lt, 1, 1));
    return 0.5 * (ce_s + ce_t);
  }

  /// One Adam step per classifier. Inputs get N(0, noise_std^2) noise, drawn
  /// from `rng`; pass noise_std = 0 in the config to train on clean inputs.
  ClassifierLosses update(const Batch& source, const Batch& target, Rng& rng) {
    if (source.empty() || target.empty()) throw UsageError("classifier update on an empty batch");
    if (source.size() != target.size()) throw UsageError("classifier batches must have equal sizes");
    Matrix s_sas = noisy(sas_input(source), rng), t_sas = noisy(sas_input(target), rng);
    Matrix s_sa = noisy(sa_input(source), rng), t_sa = noisy(sa_input(target), rng);
    Graph g;
    Var l_sas = cross_entropy(g, sas_, s_sas, t_sas);
    Var l_sa = cross_entropy(g, sa_, s_sa, t_sa);
    Gradients grads = g.backward(l_sas + l_sa);
    adam_step(sas_opt_, sas_.params(), select(grads, sas_.params()));
    adam_step(sa_opt_, sa_.params(), select(grads, sa_.params()));
    return {l_sas.scalar(), l_sa.scalar()};
  }

  DomainProbs probs(const Batch& b) const { return {softmax(sas_.eval(sas_input(b))), softmax(sa_.eval(sa_input(b)))}; }

  Matrix delta_r(const Batch& b) const {
    DomainProbs p = probs(b);
    Matrix out(b.size(), 1);
    for (Eigen::Index i = 0; i < b.size(); ++i)
      out(i, 0) = delta_r_from_probs(p.sas(i, 1), p.sas(i, 0), p.sa(i, 1), p.sa(i, 0));
    return out;
  }

  double delta_r(const EnvSpec& spec, const Transition& t) const {
    const Transition one[] = {t};
    return delta_r(make_batch(spec, one))(0, 0);
  }

  /// Clipped importance weights exp(-delta_r) in [1e-4, 1].
  Matrix weights(const Batch& b) const { return delta_r(b).unaryExpr(&weight_from_delta_r); }

  double weight(const EnvSpec& spec, const Transition& t) const {
    return weight_from_delta_r(delta_r(spec, t));
  }

  /// Copy of the batch with r - beta * delta_r.
  Batch modify_rewards(const Batch& source_batch, double beta) const {
    if (beta < 0) throw ConfigError("beta must be non-negative");
    Batch out = source_batch;
    if (beta != 0.0) out.rewards -= beta * delta_r(source_batch);
    return out;
  }

  static Matrix softmax(const Matrix& logits) {
    Matrix p = logits;
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
      const double m = p.row(i).maxCoeff();
      p.row(i) = (p.row(i).array() - m).exp().matrix();
      p.row(i) /= p.row(i).sum();
    }
    return p;
  }

 private:
  Matrix noisy(Matrix x, Rng& rng) const {
    if (cfg_.noise_std > 0)
      for (Eigen::Index c = 0; c < x.cols(); ++c)
        for (Eigen::Index r = 0; r < x.rows(); ++r) x(r, c) += cfg_.noise_std * rng.normal();
    return x;
  }

  ClassifierConfig cfg_;
  Mlp sas_, sa_;
  AdamState sas_opt_, sa_opt_;
};

}  // namespace parlab
