#pragma once

// Random small graphs and a central finite-difference check against backward().

#include <functional>
#include <string>
#include <vector>

#include "parlab/diffcore.hpp"

namespace parlab::testkit {

struct Leaf {
  std::string name;
  Matrix value;
};

using Builder = std::function<Var(Graph&, const std::vector<Var>&)>;

struct RandomGraph {
  std::vector<Leaf> leaves;
  Builder build;
  std::string description;
};

inline double evaluate(const RandomGraph& rg, const std::vector<Leaf>& leaves) {
  Graph g;
  std::vector<Var> vars;
  for (const Leaf& l : leaves) vars.push_back(g.variable(l.name, l.value));
  return rg.build(g, vars).scalar();
}

inline Gradients analytic(const RandomGraph& rg) {
  Graph g;
  std::vector<Var> vars;
  for (const Leaf& l : rg.leaves) vars.push_back(g.variable(l.name, l.value));
  return g.backward(rg.build(g, vars));
}

struct FdResult {
  double worst_rel = 0.0;
  std::string worst_leaf;
};

/// Per leaf ||analytic - fd|| / max(||analytic|| + ||fd||, 1e-7), central
/// differences with step h.
inline FdResult finite_difference_check(const RandomGraph& rg, double h = 1e-5) {
  const Gradients an = analytic(rg);
  FdResult out;
  for (std::size_t li = 0; li < rg.leaves.size(); ++li) {
    const Leaf& leaf = rg.leaves[li];
    Matrix fd(leaf.value.rows(), leaf.value.cols());
    std::vector<Leaf> work = rg.leaves;
    for (Eigen::Index k = 0; k < leaf.value.size(); ++k) {
      const double x0 = leaf.value.data()[k];
      work[li].value.data()[k] = x0 + h;
      const double up = evaluate(rg, work);
      work[li].value.data()[k] = x0 - h;
      const double down = evaluate(rg, work);
      work[li].value.data()[k] = x0;
      fd.data()[k] = (up - down) / (2.0 * h);
    }
    const Matrix& a = an.at(leaf.name);
    const double rel = (a - fd).norm() / std::max(a.norm() + fd.norm(), 1e-7);
    if (rel > out.worst_rel) {
      out.worst_rel = rel;
      out.worst_leaf = leaf.name;
    }
  }
  return out;
}

inline Matrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng, double scale = 1.0) {
  Matrix m(r, c);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = rng.uniform(-scale, scale);
  return m;
}

/// An MLP of 1-3 layers with widths <= 8 feeding one of several loss heads.
/// Inputs, weights and biases are all variables.
inline RandomGraph random_graph(Rng& rng) {
  RandomGraph rg;
  const int layers = 1 + static_cast<int>(rng.index(3));
  const auto n = static_cast<Eigen::Index>(1 + rng.index(5));
  std::vector<int> widths{1 + static_cast<int>(rng.index(8))};
  for (int k = 0; k < layers; ++k) widths.push_back(2 + static_cast<int>(rng.index(7)));
  const int act = static_cast<int>(rng.index(4));
  const int head = static_cast<int>(rng.index(9));

  rg.leaves.push_back({"x", random_matrix(n, widths[0], rng)});
  for (int k = 0; k < layers; ++k) {
    rg.leaves.push_back({"w" + std::to_string(k), random_matrix(widths[k], widths[k + 1], rng, 1.2)});
    rg.leaves.push_back({"b" + std::to_string(k), random_matrix(1, widths[k + 1], rng, 0.5)});
  }
  const Matrix target = random_matrix(n, widths.back(), rng);
  rg.description = "layers=" + std::to_string(layers) + " act=" + std::to_string(act) + " head=" + std::to_string(head);

  rg.build = [layers, act, head, target](Graph& g, const std::vector<Var>& v) {
    Var h = v[0];
    for (int k = 0; k < layers; ++k) {
      h = add_bias(matmul(h, v[static_cast<std::size_t>(1 + 2 * k)]), v[static_cast<std::size_t>(2 + 2 * k)]);
      if (k + 1 < layers) {
        switch (act) {
          case 0: h = tanh(h); break;
          case 1: h = relu(h); break;
          case 2: h = softplus(h); break;
          default: break;
        }
      }
    }
    const Eigen::Index c = h.cols();
    switch (head) {
      case 0: return mean(square(h - g.constant(target)));
      case 1: return mean(logsumexp_cols(h));
      case 2: return sum(minimum(slice_cols(h, 0, 1), slice_cols(h, c - 1, 1)));
      case 3: return mean(exp(clamp(h, -0.8, 0.8)));
      case 4: return mean(h * tanh(h)) + mean(tanh(h));
      case 5: return mean(square(concat_rows(h, 2.0 * h)) + 0.5);
      case 6: return mean(log(softplus(h) + 1.0));
      case 7: return sum(sum_cols(concat_cols(h, -1.0 * h) * concat_cols(h, square(h))));
      default: return mean(slice_rows(h, 0, 1)) - sum(3.0 * tanh(h));
    }
  };
  return rg;
}

}  // namespace parlab::testkit
