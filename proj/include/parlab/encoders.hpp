#pragma once

// Latent dynamics encoders trained on target-domain data only, and the
// representation-mismatch penalty they put on source transitions.

#include <string_view>

#include "parlab/diffcore.hpp"
#include "parlab/replay_buffer.hpp"

namespace parlab {

enum class EncoderVariant { Par, ParB };

inline std::string_view variant_name(EncoderVariant v) { return v == EncoderVariant::Par ? "par" : "par-b"; }

inline EncoderVariant parse_variant(std::string_view s) {
  if (s == "par") return EncoderVariant::Par;
  if (s == "par-b") return EncoderVariant::ParB;
  throw ConfigError("unknown encoder variant '" + std::string(s) + "'");
}

struct EncoderConfig {
  int obs_dim = 3;
  int action_dim = 1;
  int hidden = 64;
  int latent = 64;
  double lr = 3e-4;
  EncoderVariant variant = EncoderVariant::Par;
};

/// f: state -> z and g: (z, a) -> z' for PAR; for PAR-B g reads the raw state
/// features instead of f(s). Both deterministic MLPs with linear outputs.
class EncoderPair {
 public:
  EncoderPair() = default;

  EncoderPair(EncoderConfig cfg, Rng& init) : cfg_(cfg) {
    if (cfg_.latent <= 0 || cfg_.hidden <= 0) throw ConfigError("encoder widths must be positive");
    const int h = cfg_.hidden, z = cfg_.latent;
    f_ = Mlp("f", {cfg_.obs_dim, h, h, z}, init);
    const int g_in = (cfg_.variant == EncoderVariant::Par ? z : cfg_.obs_dim) + cfg_.action_dim;
    g_ = Mlp("g", {g_in, h, h, z}, init);
    f_opt_ = AdamState(f_.params(), AdamConfig{.lr = cfg_.lr});
    g_opt_ = AdamState(g_.params(), AdamConfig{.lr = cfg_.lr});
  }

  const EncoderConfig& config() const { return cfg_; }
  EncoderVariant variant() const { return cfg_.variant; }
  const Mlp& f() const { return f_; }
  const Mlp& g() const { return g_; }
  Mlp& f() { return f_; }
  Mlp& g() { return g_; }
  long steps() const { return f_opt_.t; }

  /// mean over batch and latent dims of (g(f(s), a) - SG(f(s')))^2.
  Var loss_par(Graph& gr, const Batch& batch) const {
    require(EncoderVariant::Par, batch);
    Var z = f_.forward(gr.constant(batch.obs));
    Var zn = stop_gradient(f_.forward(gr.constant(batch.next_obs)));
    Var pred = g_.forward(concat_cols(z, gr.constant(batch.actions)));
    return mean(square(pred - zn));
  }

  /// mean of (g(s, a) - f(s'))^2; gradient reaches f through the s' branch.
  Var loss_par_b(Graph& gr, const Batch& batch) const {
    require(EncoderVariant::ParB, batch);
    Var zn = f_.forward(gr.constant(batch.next_obs));
    Var pred = g_.forward(concat_cols(gr.constant(batch.obs), gr.constant(batch.actions)));
    return mean(square(pred - zn));
  }

  Var loss(Graph& gr, const Batch& batch) const {
    return cfg_.variant == EncoderVariant::Par ? loss_par(gr, batch) : loss_par_b(gr, batch);
  }

  /// One Adam step on f and g from a target-domain batch.
  double update(const Batch& target_batch) {
    Graph gr;
    Var l = loss(gr, target_batch);
    Gradients grads = gr.backward(l);
    adam_step(f_opt_, f_.params(), select(grads, f_.params()));
    adam_step(g_opt_, g_.params(), select(grads, g_.params()));
    return l.scalar();
  }

  /// Per-row penalty, mean over latent dims of (prediction - f(s'))^2.
  Matrix penalties(const Batch& batch) const {
    const Matrix zn = f_.eval(batch.next_obs);
    const Matrix head = cfg_.variant == EncoderVariant::Par ? f_.eval(batch.obs) : batch.obs;
    Matrix x(batch.size(), head.cols() + batch.actions.cols());
    x << head, batch.actions;
    const Matrix d = g_.eval(x) - zn;
    return d.array().square().rowwise().mean().matrix();
  }

  double penalty(const EnvSpec& spec, const Transition& t) const {
    const Transition one[] = {t};
    return penalties(make_batch(spec, one))(0, 0);
  }

  /// Copy of the batch with r - beta * penalty; the input is left untouched.
  Batch modify_rewards(const Batch& source_batch, double beta) const {
    if (beta < 0) throw ConfigError("beta must be non-negative");
    Batch out = source_batch;
    if (beta != 0.0) out.rewards -= beta * penalties(source_batch);
    return out;
  }

 private:
  void require(EncoderVariant v, const Batch& batch) const {
    if (cfg_.variant != v) throw UsageError("encoder loss does not match the configured variant");
    if (batch.empty()) throw UsageError("encoder update on an empty batch");
    for (Domain d : batch.domains)
      if (d != Domain::Target) throw UsageError("encoders may only be trained on target-domain transitions");
  }

  EncoderConfig cfg_;
  Mlp f_, g_;
  AdamState f_opt_, g_opt_;
};

}  // namespace parlab
