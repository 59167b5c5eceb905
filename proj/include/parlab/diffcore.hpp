#pragma once

// Define-by-run reverse-mode autodiff over dense double matrices.
//
// Every node holds a (rows x cols) Eigen matrix. Batches are laid out one
// sample per row. A Graph is built fresh for each loss evaluation and thrown
// away after backward().

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "parlab/errors.hpp"
#include "parlab/rng.hpp"

namespace parlab {

using Matrix = Eigen::MatrixXd;
using Gradients = std::map<std::string, Matrix>;

/// Named parameter tensors. Shapes are fixed once an entry is added.
class ParamSet {
 public:
  ParamSet() = default;

  void add(std::string name, Matrix init) {
    if (index_.contains(name)) throw ConfigError("duplicate parameter '" + name + "'");
    index_.emplace(name, values_.size());
    names_.push_back(std::move(name));
    values_.push_back(std::move(init));
  }

  std::size_t size() const { return values_.size(); }
  const std::string& name(std::size_t i) const { return names_.at(i); }
  const Matrix& value(std::size_t i) const { return values_.at(i); }
  bool contains(std::string_view name) const { return index_.find(name) != index_.end(); }

  std::size_t index_of(std::string_view name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ConfigError("unknown parameter '" + std::string(name) + "'");
    return it->second;
  }
  const Matrix& operator[](std::string_view name) const { return values_[index_of(name)]; }

  /// Mutable view of the coefficients; the shape cannot change through it.
  std::span<double> data(std::size_t i) {
    Matrix& m = values_.at(i);
    return {m.data(), static_cast<std::size_t>(m.size())};
  }
  std::span<const double> data(std::size_t i) const {
    const Matrix& m = values_.at(i);
    return {m.data(), static_cast<std::size_t>(m.size())};
  }

  void assign(std::size_t i, const Matrix& v) {
    Matrix& m = values_.at(i);
    if (m.rows() != v.rows() || m.cols() != v.cols())
      throw ConfigError("shape mismatch assigning '" + names_[i] + "'");
    m = v;
  }

  std::size_t total_size() const {
    std::size_t n = 0;
    for (const auto& v : values_) n += static_cast<std::size_t>(v.size());
    return n;
  }

  friend bool operator==(const ParamSet& a, const ParamSet& b) {
    if (a.names_ != b.names_) return false;
    for (std::size_t i = 0; i < a.values_.size(); ++i) {
      const Matrix& x = a.values_[i];
      const Matrix& y = b.values_[i];
      if (x.rows() != y.rows() || x.cols() != y.cols()) return false;
      if (!std::equal(x.data(), x.data() + x.size(), y.data())) return false;
    }
    return true;
  }

 private:
  std::vector<std::string> names_;
  std::vector<Matrix> values_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

/// Entries of `grads` that belong to `params`.
inline Gradients select(const Gradients& grads, const ParamSet& params) {
  Gradients out;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto it = grads.find(params.name(i));
    if (it != grads.end()) out.emplace(it->first, it->second);
  }
  return out;
}

class Graph;

/// Handle to a graph node.
class Var {
 public:
  Var() = default;
  Var(Graph* g, int id) : g_(g), id_(id) {}

  int id() const { return id_; }
  Graph& graph() const { return *g_; }
  const Matrix& value() const;
  double scalar() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }

 private:
  Graph* g_ = nullptr;
  int id_ = -1;
};

class Graph {
 public:
  enum class Op {
    Leaf, MatMul, AddBias, Add, Sub, Mul, Scale, AddScalar, Tanh, Relu, Exp, Log,
    Square, Softplus, SumCols, Mean, Sum, Min, ConcatCols, ConcatRows, SliceCols,
    SliceRows, Clamp, StopGradient, LogSumExpCols
  };

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Leaf that never receives a gradient.
  Var constant(Matrix v) { return leaf(std::move(v), {}, false); }

  /// Leaf whose gradient is reported by backward() under `name`.
  Var variable(std::string name, Matrix v) { return leaf(std::move(v), std::move(name), true); }

  /// Leaf bound to params[i]. Repeated calls return the same node. A frozen
  /// parameter behaves as a constant: gradients flow through it to its
  /// consumers' other inputs but it is not reported.
  Var param(const ParamSet& params, std::size_t i, bool trainable = true) {
    auto key = std::make_tuple(static_cast<const void*>(&params), i, trainable);
    if (auto it = param_nodes_.find(key); it != param_nodes_.end()) return {this, it->second};
    Var v = trainable ? leaf(params.value(i), params.name(i), true)
                      : leaf(params.value(i), {}, false);
    param_nodes_.emplace(key, v.id());
    return v;
  }

  const Matrix& value(Var v) const { return nodes_.at(static_cast<std::size_t>(v.id())).value; }
  std::size_t size() const { return nodes_.size(); }

  /// Reverse sweep from a scalar loss. Every named leaf in the graph appears
  /// in the result; leaves the loss does not depend on get zeros.
  Gradients backward(Var loss) {
    Node& root = node(loss);
    if (root.value.rows() != 1 || root.value.cols() != 1)
      throw UsageError("backward() requires a 1x1 loss");
    for (auto& n : nodes_) n.grad.resize(0, 0);
    root.grad = Matrix::Ones(1, 1);
    for (int id = loss.id(); id >= 0; --id) {
      Node& n = nodes_[static_cast<std::size_t>(id)];
      if (n.grad.size() == 0 || !n.requires_grad || n.op == Op::Leaf) continue;
      propagate(n);
    }
    Gradients out;
    for (auto& n : nodes_) {
      if (n.op != Op::Leaf || n.name.empty()) continue;
      Matrix g = n.grad.size() ? n.grad : Matrix::Zero(n.value.rows(), n.value.cols());
      auto [it, fresh] = out.try_emplace(n.name, g);
      if (!fresh) it->second += g;
    }
    return out;
  }

  // Node construction; the free functions below are the public surface.
  Var push(Op op, Matrix value, int a, int b = -1, double s0 = 0, double s1 = 0, Eigen::Index i0 = 0) {
    Node n;
    n.op = op;
    n.a = a;
    n.b = b;
    n.s0 = s0;
    n.s1 = s1;
    n.i0 = i0;
    n.value = std::move(value);
    n.requires_grad = op != Op::StopGradient &&
                      ((a >= 0 && nodes_[static_cast<std::size_t>(a)].requires_grad) ||
                       (b >= 0 && nodes_[static_cast<std::size_t>(b)].requires_grad));
    nodes_.push_back(std::move(n));
    return {this, static_cast<int>(nodes_.size() - 1)};
  }

 private:
  struct Node {
    Op op = Op::Leaf;
    int a = -1, b = -1;
    double s0 = 0, s1 = 0;
    Eigen::Index i0 = 0;
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    std::string name;
  };

  Node& node(Var v) { return nodes_.at(static_cast<std::size_t>(v.id())); }

  Var leaf(Matrix v, std::string name, bool requires_grad) {
    Node n;
    n.value = std::move(v);
    n.name = std::move(name);
    n.requires_grad = requires_grad;
    nodes_.push_back(std::move(n));
    return {this, static_cast<int>(nodes_.size() - 1)};
  }

  template <class Expr>
  void accumulate(int id, const Expr& g) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.requires_grad) return;
    if (n.grad.size() == 0)
      n.grad = g;
    else
      n.grad += g;
  }

  bool wants(int id) const { return id >= 0 && nodes_[static_cast<std::size_t>(id)].requires_grad; }

  void propagate(const Node& n) {
    const Matrix& g = n.grad;
    const Matrix* A = n.a >= 0 ? &nodes_[static_cast<std::size_t>(n.a)].value : nullptr;
    const Matrix* B = n.b >= 0 ? &nodes_[static_cast<std::size_t>(n.b)].value : nullptr;
    switch (n.op) {
      case Op::Leaf:
      case Op::StopGradient:
        break;
      case Op::MatMul:
        if (wants(n.a)) accumulate(n.a, g * B->transpose());
        if (wants(n.b)) accumulate(n.b, A->transpose() * g);
        break;
      case Op::AddBias:
        if (wants(n.a)) accumulate(n.a, g);
        if (wants(n.b)) accumulate(n.b, g.colwise().sum());
        break;
      case Op::Add:
        if (wants(n.a)) accumulate(n.a, g);
        if (wants(n.b)) accumulate(n.b, g);
        break;
      case Op::Sub:
        if (wants(n.a)) accumulate(n.a, g);
        if (wants(n.b)) accumulate(n.b, -g);
        break;
      case Op::Mul:
        if (wants(n.a)) accumulate(n.a, g.cwiseProduct(*B));
        if (wants(n.b)) accumulate(n.b, g.cwiseProduct(*A));
        break;
      case Op::Scale:
        accumulate(n.a, n.s0 * g);
        break;
      case Op::AddScalar:
        accumulate(n.a, g);
        break;
      case Op::Tanh:
        accumulate(n.a, g.cwiseProduct((1.0 - n.value.array().square()).matrix()));
        break;
      case Op::Relu:
        accumulate(n.a, (A->array() > 0.0).select(g.array(), 0.0).matrix());
        break;
      case Op::Exp:
        accumulate(n.a, g.cwiseProduct(n.value));
        break;
      case Op::Log:
        accumulate(n.a, g.cwiseQuotient(*A));
        break;
      case Op::Square:
        accumulate(n.a, 2.0 * g.cwiseProduct(*A));
        break;
      case Op::Softplus:
        accumulate(n.a, g.cwiseProduct(A->unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); })));
        break;
      case Op::SumCols:
        accumulate(n.a, g.replicate(1, A->cols()));
        break;
      case Op::Mean:
        accumulate(n.a, Matrix::Constant(A->rows(), A->cols(), g(0, 0) / static_cast<double>(A->size())));
        break;
      case Op::Sum:
        accumulate(n.a, Matrix::Constant(A->rows(), A->cols(), g(0, 0)));
        break;
      case Op::Min: {
        auto take_a = (A->array() <= B->array());
        if (wants(n.a)) accumulate(n.a, take_a.select(g.array(), 0.0).matrix());
        if (wants(n.b)) accumulate(n.b, take_a.select(0.0, g.array()).matrix());
        break;
      }
      case Op::ConcatCols:
        if (wants(n.a)) accumulate(n.a, g.leftCols(A->cols()));
        if (wants(n.b)) accumulate(n.b, g.rightCols(B->cols()));
        break;
      case Op::ConcatRows:
        if (wants(n.a)) accumulate(n.a, g.topRows(A->rows()));
        if (wants(n.b)) accumulate(n.b, g.bottomRows(B->rows()));
        break;
      case Op::SliceCols: {
        Node& in = nodes_[static_cast<std::size_t>(n.a)];
        if (!in.requires_grad) break;
        if (in.grad.size() == 0) in.grad = Matrix::Zero(A->rows(), A->cols());
        in.grad.middleCols(n.i0, g.cols()) += g;
        break;
      }
      case Op::SliceRows: {
        Node& in = nodes_[static_cast<std::size_t>(n.a)];
        if (!in.requires_grad) break;
        if (in.grad.size() == 0) in.grad = Matrix::Zero(A->rows(), A->cols());
        in.grad.middleRows(n.i0, g.rows()) += g;
        break;
      }
      case Op::Clamp:
        accumulate(n.a, (A->array() >= n.s0 && A->array() <= n.s1).select(g.array(), 0.0).matrix());
        break;
      case Op::LogSumExpCols: {
        // softmax(x) = exp(x - lse)
        Matrix soft = (A->colwise() - n.value.col(0)).array().exp().matrix();
        accumulate(n.a, soft.cwiseProduct(g.replicate(1, A->cols())));
        break;
      }
    }
  }

  std::vector<Node> nodes_;
  std::map<std::tuple<const void*, std::size_t, bool>, int> param_nodes_;
};

inline const Matrix& Var::value() const { return g_->value(*this); }
inline double Var::scalar() const {
  const Matrix& m = value();
  if (m.size() != 1) throw UsageError("scalar() on a non-1x1 node");
  return m(0, 0);
}

namespace detail {
inline void same_shape(Var a, Var b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ConfigError(std::string("shape mismatch in ") + op);
}
}  // namespace detail

using Op = Graph::Op;

inline Var matmul(Var a, Var b) {
  if (a.cols() != b.rows()) throw ConfigError("shape mismatch in matmul");
  return a.graph().push(Op::MatMul, a.value() * b.value(), a.id(), b.id());
}
/// x (n x k) plus row vector b (1 x k) broadcast over rows.
inline Var add_bias(Var x, Var b) {
  if (b.rows() != 1 || b.cols() != x.cols()) throw ConfigError("shape mismatch in add_bias");
  Matrix v = x.value().rowwise() + b.value().row(0);
  return x.graph().push(Op::AddBias, std::move(v), x.id(), b.id());
}
inline Var operator+(Var a, Var b) {
  detail::same_shape(a, b, "add");
  return a.graph().push(Op::Add, a.value() + b.value(), a.id(), b.id());
}
inline Var operator-(Var a, Var b) {
  detail::same_shape(a, b, "sub");
  return a.graph().push(Op::Sub, a.value() - b.value(), a.id(), b.id());
}
/// Elementwise product.
inline Var operator*(Var a, Var b) {
  detail::same_shape(a, b, "mul");
  return a.graph().push(Op::Mul, a.value().cwiseProduct(b.value()), a.id(), b.id());
}
inline Var operator*(double s, Var a) { return a.graph().push(Op::Scale, s * a.value(), a.id(), -1, s); }
inline Var operator-(Var a) { return -1.0 * a; }
inline Var operator+(Var a, double s) {
  return a.graph().push(Op::AddScalar, (a.value().array() + s).matrix(), a.id(), -1, s);
}
inline Var tanh(Var a) { return a.graph().push(Op::Tanh, a.value().array().tanh().matrix(), a.id()); }
inline Var relu(Var a) { return a.graph().push(Op::Relu, a.value().cwiseMax(0.0), a.id()); }
inline Var exp(Var a) { return a.graph().push(Op::Exp, a.value().array().exp().matrix(), a.id()); }
inline Var log(Var a) { return a.graph().push(Op::Log, a.value().array().log().matrix(), a.id()); }
inline Var square(Var a) { return a.graph().push(Op::Square, a.value().array().square().matrix(), a.id()); }
/// log(1 + e^x), evaluated without overflow.
inline Var softplus(Var a) {
  Matrix v = a.value().unaryExpr([](double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); });
  return a.graph().push(Op::Softplus, std::move(v), a.id());
}
/// Row sums: (n x k) -> (n x 1).
inline Var sum_cols(Var a) { return a.graph().push(Op::SumCols, a.value().rowwise().sum(), a.id()); }
inline Var mean(Var a) {
  if (a.value().size() == 0) throw UsageError("mean of an empty node");
  return a.graph().push(Op::Mean, Matrix::Constant(1, 1, a.value().mean()), a.id());
}
inline Var sum(Var a) { return a.graph().push(Op::Sum, Matrix::Constant(1, 1, a.value().sum()), a.id()); }
inline Var minimum(Var a, Var b) {
  detail::same_shape(a, b, "minimum");
  return a.graph().push(Op::Min, a.value().cwiseMin(b.value()), a.id(), b.id());
}
inline Var concat_cols(Var a, Var b) {
  if (a.rows() != b.rows()) throw ConfigError("shape mismatch in concat_cols");
  Matrix v(a.rows(), a.cols() + b.cols());
  v << a.value(), b.value();
  return a.graph().push(Op::ConcatCols, std::move(v), a.id(), b.id());
}
inline Var concat_rows(Var a, Var b) {
  if (a.cols() != b.cols()) throw ConfigError("shape mismatch in concat_rows");
  Matrix v(a.rows() + b.rows(), a.cols());
  v << a.value(), b.value();
  return a.graph().push(Op::ConcatRows, std::move(v), a.id(), b.id());
}
inline Var slice_cols(Var a, Eigen::Index start, Eigen::Index n) {
  if (start < 0 || start + n > a.cols()) throw ConfigError("slice_cols out of range");
  return a.graph().push(Op::SliceCols, a.value().middleCols(start, n), a.id(), -1, 0, 0, start);
}
inline Var slice_rows(Var a, Eigen::Index start, Eigen::Index n) {
  if (start < 0 || start + n > a.rows()) throw ConfigError("slice_rows out of range");
  return a.graph().push(Op::SliceRows, a.value().middleRows(start, n), a.id(), -1, 0, 0, start);
}
inline Var clamp(Var a, double lo, double hi) {
  return a.graph().push(Op::Clamp, a.value().cwiseMax(lo).cwiseMin(hi), a.id(), -1, lo, hi);
}
/// Forwards the value unchanged; contributes nothing to upstream gradients.
inline Var stop_gradient(Var a) { return a.graph().push(Op::StopGradient, a.value(), a.id()); }
/// Row-wise log-sum-exp: (n x k) -> (n x 1).
inline Var logsumexp_cols(Var a) {
  Eigen::VectorXd mx = a.value().rowwise().maxCoeff();
  Eigen::VectorXd s = (a.value().colwise() - mx).array().exp().rowwise().sum().log().matrix();
  return a.graph().push(Op::LogSumExpCols, Matrix(s + mx), a.id());
}

// ---------------------------------------------------------------------------
// Multilayer perceptrons

enum class Activation { Identity, Relu, Tanh };

inline Matrix activate(Matrix x, Activation act) {
  switch (act) {
    case Activation::Relu: return x.cwiseMax(0.0);
    case Activation::Tanh: return x.array().tanh().matrix();
    case Activation::Identity: break;
  }
  return x;
}

inline Var activate(Var x, Activation act) {
  switch (act) {
    case Activation::Relu: return relu(x);
    case Activation::Tanh: return tanh(x);
    case Activation::Identity: break;
  }
  return x;
}

/// Dense feed-forward network. Layer k has weights "<prefix>.l<k>.w"
/// (in x out) and bias "<prefix>.l<k>.b" (1 x out).
class Mlp {
 public:
  Mlp() = default;

  /// Uniform(+-1/sqrt(fan_in)) weights, zero biases.
  Mlp(std::string prefix, std::vector<int> widths, Rng& rng, Activation hidden = Activation::Relu,
      Activation output = Activation::Identity)
      : prefix_(std::move(prefix)), widths_(std::move(widths)), hidden_(hidden), output_(output) {
    if (widths_.size() < 2) throw ConfigError("an MLP needs at least input and output widths");
    for (int w : widths_)
      if (w <= 0) throw ConfigError("MLP widths must be positive");
    for (std::size_t k = 0; k + 1 < widths_.size(); ++k) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(widths_[k]));
      Matrix w(widths_[k], widths_[k + 1]);
      for (Eigen::Index c = 0; c < w.cols(); ++c)
        for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = rng.uniform(-bound, bound);
      params_.add(weight_name(k), std::move(w));
      params_.add(bias_name(k), Matrix::Zero(1, widths_[k + 1]));
    }
  }

  std::size_t layers() const { return widths_.size() - 1; }
  int in_dim() const { return widths_.front(); }
  int out_dim() const { return widths_.back(); }
  const std::vector<int>& widths() const { return widths_; }
  const std::string& prefix() const { return prefix_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }

  std::string weight_name(std::size_t k) const { return prefix_ + ".l" + std::to_string(k) + ".w"; }
  std::string bias_name(std::size_t k) const { return prefix_ + ".l" + std::to_string(k) + ".b"; }

  /// Plain evaluation, no tape. Rows of x are samples.
  Matrix eval(const Matrix& x) const {
    check_input(x.cols());
    Matrix h = x;
    for (std::size_t k = 0; k < layers(); ++k) {
      Matrix z = h * params_.value(2 * k);
      z.rowwise() += params_.value(2 * k + 1).row(0);
      h = activate(std::move(z), k + 1 == layers() ? output_ : hidden_);
    }
    return h;
  }

  /// Taped evaluation. With trainable = false the weights act as constants.
  Var forward(Var x, bool trainable = true) const {
    check_input(x.cols());
    Graph& g = x.graph();
    Var h = x;
    for (std::size_t k = 0; k < layers(); ++k) {
      Var w = g.param(params_, 2 * k, trainable);
      Var b = g.param(params_, 2 * k + 1, trainable);
      h = activate(add_bias(matmul(h, w), b), k + 1 == layers() ? output_ : hidden_);
    }
    return h;
  }

 private:
  void check_input(Eigen::Index cols) const {
    if (cols != widths_.front())
      throw ConfigError(prefix_ + ": input width " + std::to_string(cols) + " != " +
                        std::to_string(widths_.front()));
  }

  std::string prefix_;
  std::vector<int> widths_;
  Activation hidden_ = Activation::Relu;
  Activation output_ = Activation::Identity;
  ParamSet params_;
};

// ---------------------------------------------------------------------------
// Adam

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamState() = default;
  AdamState(const ParamSet& params, AdamConfig cfg) : config(cfg) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      m.push_back(Matrix::Zero(params.value(i).rows(), params.value(i).cols()));
      v.push_back(m.back());
    }
  }

  AdamConfig config;
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  long t = 0;
};

/// One bias-corrected Adam step. Parameters without an entry in `grads` are
/// treated as having zero gradient.
inline void adam_step(AdamState& state, ParamSet& params, const Gradients& grads) {
  if (state.m.size() != params.size()) throw ConfigError("Adam state does not match parameter set");
  for (const auto& [name, g] : grads) {
    if (!params.contains(name)) throw UsageError("gradient for unknown parameter '" + name + "'");
    const Matrix& p = params[name];
    if (p.rows() != g.rows() || p.cols() != g.cols())
      throw ConfigError("gradient shape mismatch for '" + name + "'");
  }
  ++state.t;
  const AdamConfig& c = state.config;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto it = grads.find(params.name(i));
    Matrix& m = state.m[i];
    Matrix& v = state.v[i];
    if (it != grads.end()) {
      m = c.beta1 * m + (1.0 - c.beta1) * it->second;
      v = c.beta2 * v + (1.0 - c.beta2) * it->second.cwiseProduct(it->second);
    } else {
      m *= c.beta1;
      v *= c.beta2;
    }
    std::span<double> p = params.data(i);
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double mh = m.data()[k] / bc1;
      const double vh = v.data()[k] / bc2;
      p[k] -= c.lr * mh / (std::sqrt(vh) + c.eps);
    }
  }
}

/// target <- tau * source + (1 - tau) * target, elementwise.
inline void polyak_update(ParamSet& target, const ParamSet& source, double tau) {
  if (target.size() != source.size()) throw ConfigError("soft update between mismatched sets");
  for (std::size_t i = 0; i < target.size(); ++i) {
    std::span<double> t = target.data(i);
    std::span<const double> s = source.data(i);
    if (t.size() != s.size()) throw ConfigError("soft update shape mismatch");
    for (std::size_t k = 0; k < t.size(); ++k) t[k] = tau * s[k] + (1.0 - tau) * t[k];
  }
}

}  // namespace parlab
