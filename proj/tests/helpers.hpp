#pragma once

// Small fixtures and loop-level oracles shared by the unit tests.

#include <algorithm>
#include <vector>

#include "parlab/replay_buffer.hpp"

namespace parlab::testkit {

inline Transition random_transition(const EnvSpec& spec, Rng& rng, Domain tag) {
  std::vector<double> s = reset(spec, rng);
  std::vector<double> a;
  for (double l : spec.action_limits) a.push_back(rng.uniform(-l, l));
  Transition t = step(spec, s, a, rng);
  t.domain = tag;
  return t;
}

inline Batch random_batch(const EnvSpec& spec, int n, Rng& rng) {
  std::vector<Transition> ts;
  for (int i = 0; i < n; ++i) ts.push_back(random_transition(spec, rng, spec.domain));
  return make_batch(spec, ts);
}

/// Loop-level evaluation of one input row: hidden ReLU layers, linear output.
inline std::vector<double> eval_by_hand(const Mlp& net, std::vector<double> x) {
  const ParamSet& p = net.params();
  for (std::size_t k = 0; k < net.layers(); ++k) {
    const Matrix& w = p.value(2 * k);
    const Matrix& b = p.value(2 * k + 1);
    std::vector<double> y(static_cast<std::size_t>(w.cols()));
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      double s = b(0, j);
      for (Eigen::Index i = 0; i < w.rows(); ++i) s += x[static_cast<std::size_t>(i)] * w(i, j);
      y[static_cast<std::size_t>(j)] = k + 1 < net.layers() ? std::max(s, 0.0) : s;
    }
    x = std::move(y);
  }
  return x;
}

inline std::vector<double> row(const Matrix& m, Eigen::Index i) {
  std::vector<double> r(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index c = 0; c < m.cols(); ++c) r[static_cast<std::size_t>(c)] = m(i, c);
  return r;
}

inline std::vector<double> cat(std::vector<double> a, const std::vector<double>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

/// Output layer set to zero weights and the given bias.
inline void constant_head(Mlp& net, const std::vector<double>& bias) {
  const std::size_t last = 2 * (net.layers() - 1);
  ParamSet& p = net.params();
  p.assign(last, Matrix::Zero(p.value(last).rows(), p.value(last).cols()));
  Matrix b(1, static_cast<Eigen::Index>(bias.size()));
  for (std::size_t i = 0; i < bias.size(); ++i) b(0, static_cast<Eigen::Index>(i)) = bias[i];
  p.assign(last + 1, b);
}

}  // namespace parlab::testkit
