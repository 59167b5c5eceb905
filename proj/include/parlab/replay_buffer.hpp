#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include "parlab/diffcore.hpp"
#include "parlab/envsuite.hpp"

namespace parlab {

/// N stacked transitions, one per row. `obs`/`next_obs` are network features
/// of the raw states. `weights` is empty unless a caller attaches per-sample
/// critic weights.
struct Batch {
  Matrix states, actions, rewards, next_states, dones;
  Matrix obs, next_obs;
  Matrix weights;
  std::vector<Domain> domains;

  Eigen::Index size() const { return rewards.rows(); }
  bool empty() const { return size() == 0; }

  Transition transition(Eigen::Index i) const {
    Transition t;
    t.state.resize(static_cast<std::size_t>(states.cols()));
    for (Eigen::Index c = 0; c < states.cols(); ++c) t.state[static_cast<std::size_t>(c)] = states(i, c);
    t.action.resize(static_cast<std::size_t>(actions.cols()));
    for (Eigen::Index c = 0; c < actions.cols(); ++c) t.action[static_cast<std::size_t>(c)] = actions(i, c);
    t.next_state.resize(static_cast<std::size_t>(next_states.cols()));
    for (Eigen::Index c = 0; c < next_states.cols(); ++c)
      t.next_state[static_cast<std::size_t>(c)] = next_states(i, c);
    t.reward = rewards(i, 0);
    t.done = dones(i, 0) != 0.0;
    t.domain = domains[static_cast<std::size_t>(i)];
    return t;
  }
};

namespace detail {
template <class At>
Batch make_batch(const EnvSpec& spec, std::size_t count, At at) {
  const auto n = static_cast<Eigen::Index>(count);
  Batch b;
  b.states.resize(n, spec.state_dim());
  b.next_states.resize(n, spec.state_dim());
  b.actions.resize(n, spec.action_dim());
  b.rewards.resize(n, 1);
  b.dones.resize(n, 1);
  b.obs.resize(n, spec.obs_dim());
  b.next_obs.resize(n, spec.obs_dim());
  std::vector<double> o(static_cast<std::size_t>(spec.obs_dim()));
  for (Eigen::Index i = 0; i < n; ++i) {
    const Transition& t = at(static_cast<std::size_t>(i));
    if (static_cast<int>(t.state.size()) != spec.state_dim() || static_cast<int>(t.action.size()) != spec.action_dim())
      throw ConfigError("transition dimensions do not match the environment");
    for (int c = 0; c < spec.state_dim(); ++c) {
      b.states(i, c) = t.state[static_cast<std::size_t>(c)];
      b.next_states(i, c) = t.next_state[static_cast<std::size_t>(c)];
    }
    for (int c = 0; c < spec.action_dim(); ++c) b.actions(i, c) = t.action[static_cast<std::size_t>(c)];
    b.rewards(i, 0) = t.reward;
    b.dones(i, 0) = t.done ? 1.0 : 0.0;
    observe(spec, t.state, o);
    for (int c = 0; c < spec.obs_dim(); ++c) b.obs(i, c) = o[static_cast<std::size_t>(c)];
    observe(spec, t.next_state, o);
    for (int c = 0; c < spec.obs_dim(); ++c) b.next_obs(i, c) = o[static_cast<std::size_t>(c)];
    b.domains.push_back(t.domain);
  }
  return b;
}
}  // namespace detail

inline Batch make_batch(const EnvSpec& spec, std::span<const Transition> ts) {
  return detail::make_batch(spec, ts.size(), [&](std::size_t i) -> const Transition& { return ts[i]; });
}

namespace detail {
inline Matrix vstack(const Matrix& a, const Matrix& b) {
  if (a.size() == 0) return b;
  if (b.size() == 0) return a;
  Matrix out(a.rows() + b.rows(), a.cols());
  out << a, b;
  return out;
}
}  // namespace detail

/// Rows of `a` followed by rows of `b`.
inline Batch concat(const Batch& a, const Batch& b) {
  Batch out;
  out.states = detail::vstack(a.states, b.states);
  out.actions = detail::vstack(a.actions, b.actions);
  out.rewards = detail::vstack(a.rewards, b.rewards);
  out.next_states = detail::vstack(a.next_states, b.next_states);
  out.dones = detail::vstack(a.dones, b.dones);
  out.obs = detail::vstack(a.obs, b.obs);
  out.next_obs = detail::vstack(a.next_obs, b.next_obs);
  if (a.weights.size() || b.weights.size()) {
    Matrix wa = a.weights.size() ? a.weights : Matrix::Ones(a.size(), 1);
    Matrix wb = b.weights.size() ? b.weights : Matrix::Ones(b.size(), 1);
    out.weights = detail::vstack(wa, wb);
  }
  out.domains = a.domains;
  out.domains.insert(out.domains.end(), b.domains.begin(), b.domains.end());
  return out;
}

/// Fixed-capacity FIFO of transitions with uniform sampling.
class ReplayBuffer {
 public:
  static constexpr std::size_t kDefaultCapacity = 1'000'000;

  explicit ReplayBuffer(EnvSpec spec, std::size_t capacity = kDefaultCapacity)
      : spec_(std::move(spec)), capacity_(capacity) {
    if (capacity_ == 0) throw ConfigError("replay buffer capacity must be positive");
  }

  void add(const Transition& t) {
    if (static_cast<int>(t.state.size()) != spec_.state_dim() || static_cast<int>(t.action.size()) != spec_.action_dim() ||
        static_cast<int>(t.next_state.size()) != spec_.state_dim())
      throw ConfigError("transition dimensions do not match the buffer");
    if (data_.size() < capacity_) {
      data_.push_back(t);
    } else {
      data_[cursor_] = t;
    }
    cursor_ = (cursor_ + 1) % capacity_;
  }

  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::size_t cursor() const { return cursor_; }
  const EnvSpec& spec() const { return spec_; }
  /// Slot i of the ring (not insertion order once the buffer has wrapped).
  const Transition& at(std::size_t i) const { return data_.at(i); }

  std::vector<std::size_t> sample_indices(std::size_t n, Rng& rng) const {
    if (data_.empty()) throw UsageError("sampling from an empty replay buffer");
    std::vector<std::size_t> idx(n);
    for (auto& i : idx) i = rng.index(data_.size());
    return idx;
  }

  Batch gather(std::span<const std::size_t> idx) const {
    return detail::make_batch(spec_, idx.size(), [&](std::size_t k) -> const Transition& { return data_.at(idx[k]); });
  }

  Batch sample(std::size_t n, Rng& rng) const {
    auto idx = sample_indices(n, rng);
    return gather(idx);
  }

 private:
  EnvSpec spec_;
  std::size_t capacity_;
  std::size_t cursor_ = 0;
  std::vector<Transition> data_;
};

}  // namespace parlab
