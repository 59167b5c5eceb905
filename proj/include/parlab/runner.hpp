#pragma once

// Training loops for every method, evaluation and checkpoints.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "parlab/binary_io.hpp"
#include "parlab/config.hpp"
#include "parlab/darc.hpp"
#include "parlab/encoders.hpp"
#include "parlab/envsuite.hpp"
#include "parlab/metrics.hpp"
#include "parlab/offline_dataset.hpp"
#include "parlab/replay_buffer.hpp"
#include "parlab/sac.hpp"

namespace parlab {

// ---------------------------------------------------------------------------
// Environment driver and evaluation

/// Owns the state of one live episode and resets on termination or horizon.
class EnvDriver {
 public:
  EnvDriver(EnvSpec spec, Rng reset_rng, Rng step_rng)
      : spec_(std::move(spec)), reset_rng_(std::move(reset_rng)), step_rng_(std::move(step_rng)) {
    state_ = reset(spec_, reset_rng_);
  }

  const EnvSpec& spec() const { return spec_; }
  const std::vector<double>& state() const { return state_; }
  std::vector<double> obs() const { return observe(spec_, state_); }
  long steps() const { return steps_; }
  const std::vector<double>& episode_returns() const { return returns_; }

  Transition step(std::span<const double> action) {
    Transition tr = parlab::step(spec_, state_, action, step_rng_);
    ++steps_;
    ++t_;
    ret_ += tr.reward;
    if (tr.done || t_ >= spec_.horizon) {
      returns_.push_back(ret_);
      ret_ = 0.0;
      t_ = 0;
      state_ = reset(spec_, reset_rng_);
    } else {
      state_ = tr.next_state;
    }
    return tr;
  }

 private:
  EnvSpec spec_;
  Rng reset_rng_, step_rng_;
  std::vector<double> state_;
  int t_ = 0;
  long steps_ = 0;
  double ret_ = 0.0;
  std::vector<double> returns_;
};

struct EvalResult {
  double mean = 0.0;
  double std = 0.0;  // population std over episodes
  std::vector<double> returns;
};

inline EvalResult summarize_returns(std::vector<double> returns) {
  EvalResult r;
  r.returns = std::move(returns);
  if (r.returns.empty()) return r;
  for (double x : r.returns) r.mean += x;
  r.mean /= static_cast<double>(r.returns.size());
  double v = 0.0;
  for (double x : r.returns) v += (x - r.mean) * (x - r.mean);
  r.std = std::sqrt(v / static_cast<double>(r.returns.size()));
  return r;
}

/// Rolls out `policy(obs) -> action` for whole episodes. Nothing is stored and
/// the caller's interaction counters are not touched.
template <class Policy>
EvalResult evaluate(const EnvSpec& spec, Policy&& policy, int episodes, std::uint64_t seed) {
  if (episodes < 1) throw ConfigError("evaluation needs at least one episode");
  Rng reset_rng = Rng::substream(seed, "eval.reset");
  Rng step_rng = Rng::substream(seed, "eval.step");
  std::vector<double> returns;
  std::vector<double> obs(static_cast<std::size_t>(spec.obs_dim()));
  for (int e = 0; e < episodes; ++e) {
    std::vector<double> s = reset(spec, reset_rng);
    double ret = 0.0;
    for (int t = 0; t < spec.horizon; ++t) {
      observe(spec, s, obs);
      const std::vector<double> a = policy(std::span<const double>(obs));
      Transition tr = step(spec, s, a, step_rng);
      ret += tr.reward;
      if (tr.done) break;
      s = std::move(tr.next_state);
    }
    returns.push_back(ret);
  }
  return summarize_returns(std::move(returns));
}

/// Deterministic (noise-free) actions of the agent.
inline EvalResult evaluate_policy(const SacAgent& agent, const EnvSpec& spec, int episodes, std::uint64_t seed) {
  Rng unused(0);
  return evaluate(
      spec, [&](std::span<const double> o) { return agent.sample_action(o, true, unused).action; }, episodes, seed);
}

// ---------------------------------------------------------------------------
// Construction helpers shared by the loops, tests and tools

inline SacConfig sac_config(const TrainConfig& c, const EnvSpec& spec) {
  SacConfig s;
  s.obs_dim = spec.obs_dim();
  s.action_limits = spec.action_limits;
  s.hidden = c.hidden;
  s.lr = c.lr;
  s.alpha = c.alpha;
  s.gamma = c.gamma;
  s.tau = c.tau;
  return s;
}

inline EncoderConfig encoder_config(const TrainConfig& c, const EnvSpec& spec) {
  return {spec.obs_dim(), spec.action_dim(), c.hidden, c.latent_dim, c.lr, c.variant()};
}

inline ClassifierConfig classifier_config(const TrainConfig& c, const EnvSpec& spec) {
  return {spec.obs_dim(), spec.action_dim(), c.hidden, c.classifier_noise, c.lr};
}

inline std::uint64_t eval_seed(std::uint64_t master) { return splitmix64(master ^ fnv1a("eval")); }

/// Instrumentation points. Every hook is optional.
struct RunHooks {
  std::function<void(long step, const Batch& batch)> encoder_batch;  // batch each encoder/classifier update sees
  std::function<void(long step, const Batch& batch)> critic_batch;   // mixed batch fed to the critic loss
  std::function<void(long step, std::string_view path)> trace;       // code-path markers
  std::function<void(Domain)> env_step;
};

struct RunResult {
  TrainConfig config;
  std::vector<MetricsRow> metrics;
  std::vector<double> wall_seconds;   // one per metrics row
  std::vector<double> penalty_trace;  // mean source-batch penalty per learning step
  long source_steps = 0;
  long target_steps = 0;
  long gradient_steps = 0;
  SacAgent agent;
  EncoderPair encoders;
  DomainClassifiers classifiers;
};

// ---------------------------------------------------------------------------
// Checkpoints

inline constexpr std::string_view kCheckpointMagic = "PARLABCK";
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::string task;
  std::string method;
  std::uint32_t hidden = 0;
  std::map<std::string, Matrix> params;
};

inline void collect(Checkpoint& ck, const ParamSet& ps) {
  for (std::size_t i = 0; i < ps.size(); ++i) ck.params[ps.name(i)] = ps.value(i);
}

inline Checkpoint make_checkpoint(const RunResult& r) {
  Checkpoint ck{r.config.task, r.config.method, static_cast<std::uint32_t>(r.config.hidden), {}};
  for (const Mlp* m : {&r.agent.actor(), &r.agent.q1(), &r.agent.q2(), &r.agent.q1_target(), &r.agent.q2_target()})
    collect(ck, m->params());
  if (r.encoders.f().params().size()) {
    collect(ck, r.encoders.f().params());
    collect(ck, r.encoders.g().params());
  }
  if (r.classifiers.sas().params().size()) {
    collect(ck, r.classifiers.sas().params());
    collect(ck, r.classifiers.sa().params());
  }
  return ck;
}

inline void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  io::Writer w(kCheckpointMagic, kCheckpointVersion);
  w.put_string(ck.task);
  w.put_string(ck.method);
  w.put_u32(ck.hidden);
  w.put_u32(static_cast<std::uint32_t>(ck.params.size()));
  for (const auto& [name, m] : ck.params) {
    w.put_string(name);
    w.put_u32(static_cast<std::uint32_t>(m.rows()));
    w.put_u32(static_cast<std::uint32_t>(m.cols()));
    for (Eigen::Index k = 0; k < m.size(); ++k) w.put_f64(m.data()[k]);
  }
  w.save(path);
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  io::Reader r = io::Reader::open(path, kCheckpointMagic, kCheckpointVersion);
  Checkpoint ck;
  ck.task = r.get_string();
  ck.method = r.get_string();
  ck.hidden = r.get_u32();
  const std::uint32_t n = r.get_u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    std::string name = r.get_string();
    const std::uint32_t rows = r.get_u32(), cols = r.get_u32();
    Matrix m(rows, cols);
    for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = r.get_f64();
    ck.params.emplace(std::move(name), std::move(m));
  }
  if (!r.at_end()) throw DataError("trailing bytes in checkpoint");
  return ck;
}

inline void restore(ParamSet& ps, const Checkpoint& ck) {
  for (std::size_t i = 0; i < ps.size(); ++i) {
    auto it = ck.params.find(ps.name(i));
    if (it == ck.params.end()) throw DataError("checkpoint lacks parameter '" + ps.name(i) + "'");
    if (it->second.rows() != ps.value(i).rows() || it->second.cols() != ps.value(i).cols())
      throw DimensionMismatchError("checkpoint shape mismatch for '" + ps.name(i) + "'");
    ps.assign(i, it->second);
  }
}

/// Agent whose actor and critics carry the checkpointed weights.
inline SacAgent agent_from_checkpoint(const Checkpoint& ck) {
  const DomainPair pair = make_pair(ck.task);
  TrainConfig c;
  c.task = ck.task;
  c.hidden = static_cast<int>(ck.hidden);
  Rng init(0);
  SacAgent agent(sac_config(c, pair.source), init);
  restore(agent.actor().params(), ck);
  restore(agent.q1().params(), ck);
  restore(agent.q2().params(), ck);
  restore(agent.q1_target().params(), ck);
  restore(agent.q2_target().params(), ck);
  return agent;
}

// ---------------------------------------------------------------------------
// Loops

namespace detail {

struct Window {
  double penalty = 0, encoder = 0, critic = 0, actor = 0;
  long n = 0, n_enc = 0;
  void reset() { *this = Window{}; }
  double avg(double s, long k) const { return k ? s / static_cast<double>(k) : 0.0; }
};

inline std::vector<double> random_action(const EnvSpec& spec, Rng& rng) {
  std::vector<double> a(spec.action_limits.size());
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = rng.uniform(-spec.action_limits[i], spec.action_limits[i]);
  return a;
}

inline void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw NumericError(std::string("non-finite ") + what);
}

inline void write_outputs(const RunResult& r, bool offline) {
  if (r.config.out_dir.empty()) return;
  const std::filesystem::path dir(r.config.out_dir);
  std::filesystem::create_directories(dir);
  write_text(dir / "config.resolved.ini", resolved_ini(r.config, offline));
  write_text(dir / "metrics.csv", metrics_csv(r.metrics));
  std::ostringstream timing;
  timing << "source_step,wall_seconds\n";
  for (std::size_t i = 0; i < r.metrics.size(); ++i)
    timing << r.metrics[i].source_step << ',' << detail::g17(r.wall_seconds[i]) << '\n';
  write_text(dir / "timing.csv", timing.str());
  save_checkpoint(make_checkpoint(r), dir / "checkpoint.bin");
  Series s{r.config.method, {}, {}, {}};
  for (const MetricsRow& m : r.metrics) {
    s.x.push_back(static_cast<double>(m.source_step));
    s.mean.push_back(m.eval_mean);
    s.std.push_back(m.eval_std);
  }
  write_text(dir / "curve.svg", svg_plot({s}, r.config.method + " on " + r.config.task,
                                         offline ? "gradient steps" : "source steps", "target return"));
}

class Clock {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace detail

/// Online training. PAR variants and DARC variants follow the same step
/// order: source step, a target step every F source steps, target batch,
/// encoder or classifier update, source batch, reward modification, critic,
/// actor, soft update. sac-tar interacts with the target domain only, one
/// update per target step on 2N target transitions.
inline RunResult run_online(const TrainConfig& cfg, const RunHooks& hooks = {}) {
  validate_online(cfg);
  const detail::Clock clock;
  const Method method = cfg.method_id();
  const DomainPair pair = make_pair(cfg.task_id());
  const double beta = cfg.resolved_beta();
  const std::uint64_t seed = cfg.seed;
  const auto N = static_cast<std::size_t>(cfg.batch_size);
  const int F = cfg.interval;

  RunResult res;
  res.config = cfg;
  Rng init_sac = Rng::substream(seed, "init.sac");
  res.agent = SacAgent(sac_config(cfg, pair.source), init_sac);
  if (is_par(method)) {
    Rng init_enc = Rng::substream(seed, "init.encoder");
    res.encoders = EncoderPair(encoder_config(cfg, pair.source), init_enc);
  }
  if (is_darc(method)) {
    Rng init_cls = Rng::substream(seed, "init.classifier");
    res.classifiers = DomainClassifiers(classifier_config(cfg, pair.source), init_cls);
  }

  EnvDriver src_env(pair.source, Rng::substream(seed, "env.source.reset"), Rng::substream(seed, "env.source.step"));
  EnvDriver tar_env(pair.target, Rng::substream(seed, "env.target.reset"), Rng::substream(seed, "env.target.step"));
  Rng act_src = Rng::substream(seed, "act.source"), act_tar = Rng::substream(seed, "act.target");
  Rng sample_src = Rng::substream(seed, "sample.source"), sample_tar = Rng::substream(seed, "sample.target");
  Rng noise = Rng::substream(seed, "noise.update"), cls_noise = Rng::substream(seed, "noise.classifier");
  const auto capacity = static_cast<std::size_t>(cfg.buffer_capacity);
  ReplayBuffer src_buf(pair.source, capacity), tar_buf(pair.target, capacity);
  const std::uint64_t eseed = eval_seed(seed);
  const long warmup = static_cast<long>(std::floor(cfg.darc_warmup * static_cast<double>(cfg.total_steps)));
  detail::Window win;

  auto act = [&](EnvDriver& env, Rng& rng, bool random) {
    if (random) return detail::random_action(env.spec(), rng);
    return res.agent.sample_action(env.obs(), false, rng).action;
  };
  auto env_step = [&](EnvDriver& env, ReplayBuffer& buf, Rng& rng, bool random) {
    const std::vector<double> a = act(env, rng, random);
    buf.add(env.step(a));
    if (hooks.env_step) hooks.env_step(env.spec().domain);
  };
  auto sac_update = [&](long t, const Batch& mixed) {
    if (hooks.critic_batch) hooks.critic_batch(t, mixed);
    const CriticLosses cl = res.agent.critic_update(mixed, noise);
    const double obj = res.agent.actor_update_online(mixed, noise);
    res.agent.soft_update();
    detail::require_finite(cl.q1 + cl.q2, "critic loss");
    detail::require_finite(obj, "actor objective");
    win.critic += 0.5 * (cl.q1 + cl.q2);
    win.actor += obj;
    ++win.n;
    ++res.gradient_steps;
  };
  auto record = [&](long source_step) {
    const EvalResult ev = evaluate_policy(res.agent, pair.target, cfg.eval_episodes, eseed);
    res.metrics.push_back({source_step, tar_env.steps(), ev.mean, ev.std, win.avg(win.penalty, win.n_enc),
                           win.avg(win.encoder, win.n_enc), win.avg(win.critic, win.n), win.avg(win.actor, win.n)});
    res.wall_seconds.push_back(clock.seconds());
    win.reset();
  };

  if (method == Method::SacTar) {
    const long K = cfg.total_steps / F;
    const long random_steps = cfg.seed_steps / F, starts = cfg.learning_starts() / F;
    for (long k = 1; k <= K; ++k) {
      env_step(tar_env, tar_buf, act_tar, k <= random_steps);
      if (k > starts) sac_update(k, tar_buf.sample(2 * N, sample_tar));
      if ((k * F) / cfg.eval_period > ((k - 1) * F) / cfg.eval_period) record(k * F);
    }
    res.source_steps = 0;
    res.target_steps = tar_env.steps();
    detail::write_outputs(res, false);
    return res;
  }

  for (long t = 1; t <= cfg.total_steps; ++t) {
    const bool random = t <= cfg.seed_steps;
    env_step(src_env, src_buf, act_src, random);
    if (t % F == 0) env_step(tar_env, tar_buf, act_tar, random);

    if (t > cfg.learning_starts() && tar_buf.size() > 0) {
      Batch tar = tar_buf.sample(N, sample_tar);
      Batch src;
      double pen_mean = 0.0;
      if (is_par(method)) {
        if (hooks.encoder_batch) hooks.encoder_batch(t, tar);
        win.encoder += res.encoders.update(tar);
        src = src_buf.sample(N, sample_src);
        const Matrix pen = res.encoders.penalties(src);
        pen_mean = pen.mean();
        if (beta != 0.0) src.rewards -= beta * pen;
      } else {
        // The classifiers need both domains, so the source batch is drawn
        // before their update and reused for the correction.
        src = src_buf.sample(N, sample_src);
        if (hooks.encoder_batch) hooks.encoder_batch(t, tar);
        const ClassifierLosses cl = res.classifiers.update(src, tar, cls_noise);
        win.encoder += cl.sas + cl.sa;
        const Matrix dr = res.classifiers.delta_r(src);
        pen_mean = dr.mean();
        if (t > warmup) {
          if (method == Method::Darc)
            src.rewards -= beta * dr;
          else
            src.weights = dr.unaryExpr(&weight_from_delta_r);
        }
      }
      detail::require_finite(pen_mean, "reward penalty");
      res.penalty_trace.push_back(pen_mean);
      win.penalty += pen_mean;
      ++win.n_enc;
      sac_update(t, concat(src, tar));
    }
    if (t % cfg.eval_period == 0) record(t);
  }
  res.source_steps = src_env.steps();
  res.target_steps = tar_env.steps();
  detail::write_outputs(res, false);
  return res;
}

/// Offline training from a fixed source dataset: T_max gradient steps with one
/// target interaction at the start of every block of F steps.
inline RunResult run_offline(const TrainConfig& cfg, const OfflineDataset& data, const RunHooks& hooks = {}) {
  validate_offline(cfg);
  const detail::Clock clock;
  const DomainPair pair = make_pair(cfg.task_id());
  if (data.header.task != cfg.task_id())
    throw DataError("dataset task '" + std::string(task_name(data.header.task)) + "' does not match '" + cfg.task +
                    "'");
  const double beta = cfg.resolved_beta(true);
  const double nu = cfg.resolved_nu();
  const std::uint64_t seed = cfg.seed;
  const auto N = static_cast<std::size_t>(cfg.batch_size);

  RunResult res;
  res.config = cfg;
  Rng init_sac = Rng::substream(seed, "init.sac"), init_enc = Rng::substream(seed, "init.encoder");
  res.agent = SacAgent(sac_config(cfg, pair.source), init_sac);
  res.encoders = EncoderPair(encoder_config(cfg, pair.source), init_enc);

  const ReplayBuffer src_buf = to_buffer(data, pair.source);
  EnvDriver tar_env(pair.target, Rng::substream(seed, "env.target.reset"), Rng::substream(seed, "env.target.step"));
  ReplayBuffer tar_buf(pair.target, static_cast<std::size_t>(cfg.buffer_capacity));
  Rng act_tar = Rng::substream(seed, "act.target");
  Rng sample_src = Rng::substream(seed, "sample.source"), sample_tar = Rng::substream(seed, "sample.target");
  Rng noise = Rng::substream(seed, "noise.update");
  const std::uint64_t eseed = eval_seed(seed);
  detail::Window win;
  auto trace = [&](long t, std::string_view p) {
    if (hooks.trace) hooks.trace(t, p);
  };

  for (long t = 1; t <= cfg.total_steps; ++t) {
    if ((t - 1) % cfg.interval == 0) {
      const std::vector<double> a = res.agent.sample_action(tar_env.obs(), false, act_tar).action;
      tar_buf.add(tar_env.step(a));
      if (hooks.env_step) hooks.env_step(Domain::Target);
    }
    Batch tar = tar_buf.sample(N, sample_tar);
    if (hooks.encoder_batch) hooks.encoder_batch(t, tar);
    win.encoder += res.encoders.update(tar);
    trace(t, "encoder");

    const Batch src = src_buf.sample(N, sample_src);
    Batch penalized = src;
    const Matrix pen = res.encoders.penalties(src);
    if (beta != 0.0) penalized.rewards -= beta * pen;
    trace(t, "penalty");
    res.penalty_trace.push_back(pen.mean());
    win.penalty += pen.mean();
    ++win.n_enc;

    const Batch mixed = concat(penalized, tar);
    if (hooks.critic_batch) hooks.critic_batch(t, mixed);
    const CriticLosses cl = res.agent.critic_update(mixed, noise);
    const double lambda = res.agent.lambda_norm(mixed, nu);
    trace(t, "lambda");
    const Matrix mn = res.agent.draw_noise(mixed.size(), noise), sn = res.agent.draw_noise(src.size(), noise);
    Graph g;
    Var obj = res.agent.offline_objective(g, src, mixed, lambda, mn, sn);
    Gradients grads = g.backward(-1.0 * obj);
    res.agent.apply_actor_gradients(grads);
    trace(t, "bc");
    res.agent.soft_update();
    detail::require_finite(cl.q1 + cl.q2, "critic loss");
    detail::require_finite(obj.scalar(), "actor objective");
    win.critic += 0.5 * (cl.q1 + cl.q2);
    win.actor += obj.scalar();
    ++win.n;
    ++res.gradient_steps;

    if (t % cfg.eval_period == 0) {
      const EvalResult ev = evaluate_policy(res.agent, pair.target, cfg.eval_episodes, eseed);
      res.metrics.push_back({t, tar_env.steps(), ev.mean, ev.std, win.avg(win.penalty, win.n_enc),
                             win.avg(win.encoder, win.n_enc), win.avg(win.critic, win.n), win.avg(win.actor, win.n)});
      res.wall_seconds.push_back(clock.seconds());
      win.reset();
    }
  }
  res.source_steps = 0;
  res.target_steps = tar_env.steps();
  detail::write_outputs(res, true);
  return res;
}

}  // namespace parlab
