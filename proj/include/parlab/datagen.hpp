#pragma once

// Offline dataset generation: train a SAC agent in the source domain, keep
// periodic snapshots, and roll out the snapshot whose normalized score
// (R - R_random) / (R_expert - R_random) falls in the medium band.

#include <optional>
#include <sstream>
#include <vector>

#include "parlab/offline_dataset.hpp"
#include "parlab/runner.hpp"

namespace parlab {

struct GenConfig {
  long train_steps = 30'000;
  long snapshot_period = 100;
  long seed_steps = 1000;
  int batch_size = 256;
  int hidden = 64;
  int screen_episodes = 20;  // score of every snapshot
  int eval_episodes = 20;    // confirmation of the chosen snapshots
  double band_lo = 0.4;
  double band_hi = 0.6;
};

struct Snapshot {
  long step = 0;
  double screen_return = 0.0;
  std::size_t buffer_size = 0;
  std::size_t episodes_done = 0;
  SacAgent agent;
};

struct GenReport {
  double random_return = 0.0;
  double expert_return = 0.0;
  long expert_step = 0;
  long medium_step = -1;
  double medium_return = 0.0;
  double medium_score = 0.0;
  std::vector<std::pair<long, double>> screen;     // (step, screened return)
  std::vector<std::pair<long, double>> confirmed;  // (step, confirmed return) of in-band candidates

  std::string describe() const {
    std::ostringstream os;
    os << "random return " << random_return << ", expert return " << expert_return << " at step " << expert_step
       << "; snapshot returns:";
    for (const auto& [s, r] : screen) os << ' ' << s << ':' << r;
    if (!confirmed.empty()) {
      os << "; confirmations:";
      for (const auto& [s, r] : confirmed) os << ' ' << s << ':' << r;
    }
    return os.str();
  }
};

inline double normalized_score(double ret, double random_ret, double expert_ret) {
  return (ret - random_ret) / (expert_ret - random_ret);
}

/// SAC on the source spec alone, snapshotting the agent every period.
struct SourceTraining {
  std::vector<Snapshot> snapshots;
  std::vector<Transition> buffer;  // insertion order
  std::vector<double> episode_returns;
};

inline SourceTraining train_source_sac(const EnvSpec& spec, std::uint64_t seed, const GenConfig& g) {
  TrainConfig tc;
  tc.hidden = g.hidden;
  Rng init = Rng::substream(seed, "gen.init");
  SacAgent agent(sac_config(tc, spec), init);
  EnvDriver env(spec, Rng::substream(seed, "gen.reset"), Rng::substream(seed, "gen.step"));
  Rng act = Rng::substream(seed, "gen.act"), sample = Rng::substream(seed, "gen.sample"),
      noise = Rng::substream(seed, "gen.noise");
  ReplayBuffer buf(spec, static_cast<std::size_t>(g.train_steps) + 1);
  SourceTraining out;
  const std::uint64_t eseed = splitmix64(seed ^ fnv1a("gen.eval"));
  for (long t = 1; t <= g.train_steps; ++t) {
    const std::vector<double> a =
        t <= g.seed_steps ? detail::random_action(spec, act) : agent.sample_action(env.obs(), false, act).action;
    Transition tr = env.step(a);
    buf.add(tr);
    out.buffer.push_back(std::move(tr));
    if (t > g.seed_steps) {
      const Batch b = buf.sample(static_cast<std::size_t>(g.batch_size), sample);
      agent.critic_update(b, noise);
      agent.actor_update_online(b, noise);
      agent.soft_update();
    }
    if (t % g.snapshot_period == 0) {
      const double r = evaluate_policy(agent, spec, g.screen_episodes, eseed).mean;
      out.snapshots.push_back({t, r, buf.size(), env.episode_returns().size(), agent});
    }
  }
  out.episode_returns = env.episode_returns();
  return out;
}

/// Deterministic rollouts of `agent` until `count` transitions are collected.
inline void rollout(const SacAgent& agent, const EnvSpec& spec, std::size_t count, std::uint64_t seed,
                    OfflineDataset& into) {
  EnvDriver env(spec, Rng::substream(seed, "rollout.reset"), Rng::substream(seed, "rollout.step"));
  Rng unused(0);
  for (std::size_t i = 0; i < count; ++i) into.add(env.step(agent.sample_action(env.obs(), true, unused).action));
}

inline OfflineDataset generate_offline(TaskId task, Tier tier, std::size_t size, std::uint64_t seed,
                                       const GenConfig& g = {}, GenReport* report = nullptr) {
  if (size == 0 && tier != Tier::MediumReplay) throw ConfigError("dataset size must be positive");
  const EnvSpec spec = make_pair(task).source;
  const SourceTraining run = train_source_sac(spec, seed, g);
  if (run.snapshots.empty()) throw GenerationError("no snapshots taken; train_steps < snapshot_period");

  GenReport rep;
  const std::uint64_t eseed = splitmix64(seed ^ fnv1a("gen.confirm"));
  Rng rnd = Rng::substream(seed, "gen.random");
  rep.random_return = evaluate(
      spec, [&](std::span<const double>) { return detail::random_action(spec, rnd); }, g.eval_episodes, eseed).mean;
  const Snapshot* expert = &run.snapshots.front();
  for (const Snapshot& s : run.snapshots) {
    rep.screen.emplace_back(s.step, s.screen_return);
    if (s.screen_return > expert->screen_return) expert = &s;
  }
  rep.expert_step = expert->step;
  rep.expert_return = evaluate_policy(expert->agent, spec, g.eval_episodes, eseed).mean;
  if (!(rep.expert_return > rep.random_return))
    throw GenerationError("expert does not beat the random policy; " + rep.describe());

  const Snapshot* medium = nullptr;
  for (const Snapshot& s : run.snapshots) {
    if (s.step > expert->step) break;
    const double screened = normalized_score(s.screen_return, rep.random_return, rep.expert_return);
    if (screened < g.band_lo || screened > g.band_hi) continue;
    const double confirmed = evaluate_policy(s.agent, spec, g.eval_episodes, eseed).mean;
    rep.confirmed.emplace_back(s.step, confirmed);
    const double score = normalized_score(confirmed, rep.random_return, rep.expert_return);
    if (score >= g.band_lo && score <= g.band_hi) {
      medium = &s;
      rep.medium_return = confirmed;
      rep.medium_score = score;
      break;
    }
  }
  if (!medium)
    throw GenerationError("no snapshot reached the medium band [" + std::to_string(g.band_lo) + ", " +
                          std::to_string(g.band_hi) + "] of normalized return; " + rep.describe());
  rep.medium_step = medium->step;

  OfflineDataset ds(task, tier, spec, seed);
  switch (tier) {
    case Tier::Medium:
      rollout(medium->agent, spec, size, splitmix64(seed ^ fnv1a("medium")), ds);
      ds.header.mean_return = rep.medium_return;
      break;
    case Tier::MediumReplay: {
      for (std::size_t i = 0; i < medium->buffer_size; ++i) ds.add(run.buffer[i]);
      double s = 0.0;
      for (std::size_t i = 0; i < medium->episodes_done; ++i) s += run.episode_returns[i];
      ds.header.mean_return = medium->episodes_done ? s / static_cast<double>(medium->episodes_done) : 0.0;
      break;
    }
    case Tier::MediumExpert: {
      const std::size_t n_expert = size / 2, n_medium = size - n_expert;
      rollout(medium->agent, spec, n_medium, splitmix64(seed ^ fnv1a("medium")), ds);
      rollout(expert->agent, spec, n_expert, splitmix64(seed ^ fnv1a("expert")), ds);
      ds.header.mean_return = (static_cast<double>(n_medium) * rep.medium_return +
                               static_cast<double>(n_expert) * rep.expert_return) /
                              static_cast<double>(size);
      break;
    }
  }
  if (report) *report = rep;
  return ds;
}

}  // namespace parlab
