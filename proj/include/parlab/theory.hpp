#pragma once

// Exact checks of the representation/dynamics identities and the return-gap
// bounds on small enumerable problems.
//
// Returns come in two normalizations. J = E_rho[r] = (1 - gamma) mu0'V is the
// normalized form; R = mu0'V is the plain discounted return. The telescoping
// and policy-difference identities are exact for R, and the proof chains of
// the return-gap bounds are derived for R as well, so checks report both.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "parlab/errors.hpp"
#include "parlab/rng.hpp"

namespace parlab::theory {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kNormTol = 1e-12;

namespace detail {
inline void require_distribution(const double* p, std::size_t n, const char* what) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(p[i] >= 0.0)) throw ConfigError(std::string(what) + ": negative or NaN probability");
    s += p[i];
  }
  if (std::abs(s - 1.0) > kNormTol) throw ConfigError(std::string(what) + ": probabilities do not sum to 1");
}
}  // namespace detail

struct TabularMDP {
  int S = 0;
  int A = 0;
  std::vector<double> P;  // P[(s * A + a) * S + s2]
  Matrix r;               // S x A
  double gamma = 0.9;
  Vector mu0;

  TabularMDP() = default;
  TabularMDP(int states, int actions, double discount)
      : S(states), A(actions), P(static_cast<std::size_t>(states * actions * states), 0.0),
        r(Matrix::Zero(states, actions)), gamma(discount), mu0(Vector::Constant(states, 1.0 / states)) {}

  double& p(int s, int a, int s2) { return P[static_cast<std::size_t>((s * A + a) * S + s2)]; }
  double p(int s, int a, int s2) const { return P[static_cast<std::size_t>((s * A + a) * S + s2)]; }
  const double* row(int s, int a) const { return P.data() + static_cast<std::ptrdiff_t>((s * A + a) * S); }
  Vector row_vec(int s, int a) const { return Eigen::Map<const Vector>(row(s, a), S); }

  double r_max() const { return r.cwiseAbs().maxCoeff(); }

  void validate() const {
    if (S <= 0 || A <= 0) throw ConfigError("MDP needs at least one state and one action");
    if (P.size() != static_cast<std::size_t>(S * A * S) || r.rows() != S || r.cols() != A || mu0.size() != S)
      throw ConfigError("MDP arrays do not match |S|, |A|");
    if (!(gamma >= 0.0) || gamma >= 1.0) throw ConfigError("discount must lie in [0, 1)");
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) detail::require_distribution(row(s, a), static_cast<std::size_t>(S), "P");
    detail::require_distribution(mu0.data(), static_cast<std::size_t>(S), "mu0");
  }
};

struct TabularPolicy {
  Matrix pi;  // S x A, rows are distributions

  void validate(int S, int A) const {
    if (pi.rows() != S || pi.cols() != A) throw ConfigError("policy shape does not match the MDP");
    for (int s = 0; s < S; ++s) {
      Eigen::RowVectorXd row = pi.row(s);
      detail::require_distribution(row.data(), static_cast<std::size_t>(A), "pi");
    }
  }
};

/// Joint over (z, s'_tar, s'_src) with sizes Z, T, U; flat index (z * T + t) * U + u.
struct DiscreteJoint {
  int Z = 0, T = 0, U = 0;
  std::vector<double> p;

  double at(int z, int t, int u) const { return p[static_cast<std::size_t>((z * T + t) * U + u)]; }
  double& at(int z, int t, int u) { return p[static_cast<std::size_t>((z * T + t) * U + u)]; }

  void validate() const {
    if (Z <= 0 || T <= 0 || U <= 0 || p.size() != static_cast<std::size_t>(Z * T * U))
      throw ConfigError("joint table does not match its supports");
    detail::require_distribution(p.data(), p.size(), "joint");
  }

  /// P(z, s'_tar) as a Z x T table.
  Matrix zt() const {
    Matrix m = Matrix::Zero(Z, T);
    for (int z = 0; z < Z; ++z)
      for (int t = 0; t < T; ++t)
        for (int u = 0; u < U; ++u) m(z, t) += at(z, t, u);
    return m;
  }
  /// P(z, s'_src) as a Z x U table.
  Matrix zu() const {
    Matrix m = Matrix::Zero(Z, U);
    for (int z = 0; z < Z; ++z)
      for (int t = 0; t < T; ++t)
        for (int u = 0; u < U; ++u) m(z, u) += at(z, t, u);
    return m;
  }
};

// ---------------------------------------------------------------------------
// Discrete information measures

/// KL(p || q) in nats; DomainError if p puts mass where q has none.
inline double kl_discrete(const Vector& p, const Vector& q) {
  if (p.size() != q.size()) throw ConfigError("KL between vectors of different length");
  double s = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) throw DomainError("KL divergence is infinite: p > 0 where q = 0");
    s += p[i] * std::log(p[i] / q[i]);
  }
  return s;
}

inline double tv_discrete(const Vector& p, const Vector& q) {
  if (p.size() != q.size()) throw ConfigError("TV between vectors of different length");
  return 0.5 * (p - q).cwiseAbs().sum();
}

inline double entropy(const Vector& p) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i)
    if (p[i] > 0.0) h -= p[i] * std::log(p[i]);
  return h;
}

inline double mutual_info(const Matrix& joint) {
  const Vector px = joint.rowwise().sum();
  const Eigen::RowVectorXd py = joint.colwise().sum();
  double mi = 0.0;
  for (Eigen::Index i = 0; i < joint.rows(); ++i)
    for (Eigen::Index j = 0; j < joint.cols(); ++j)
      if (joint(i, j) > 0.0) mi += joint(i, j) * std::log(joint(i, j) / (px[i] * py[j]));
  return mi;
}

// ---------------------------------------------------------------------------
// Exact policy evaluation

struct PolicyEval {
  Vector V;     // S
  Matrix Q;     // S x A
  Vector d;     // normalized discounted state occupancy
  Matrix rho;   // S x A, d(s) pi(a|s)
  double J = 0.0;          // sum rho * r
  double J_from_V = 0.0;   // (1 - gamma) mu0'V
  double R = 0.0;          // mu0'V
};

inline Matrix policy_transition(const TabularMDP& m, const TabularPolicy& pi) {
  Matrix Ppi = Matrix::Zero(m.S, m.S);
  for (int s = 0; s < m.S; ++s)
    for (int a = 0; a < m.A; ++a) Ppi.row(s) += pi.pi(s, a) * m.row_vec(s, a).transpose();
  return Ppi;
}

inline PolicyEval exact_policy_eval(const TabularMDP& m, const TabularPolicy& pi) {
  if (!(m.gamma < 1.0)) throw ConfigError("policy evaluation needs gamma < 1");
  m.validate();
  pi.validate(m.S, m.A);
  const Matrix Ppi = policy_transition(m, pi);
  const Vector rpi = m.r.cwiseProduct(pi.pi).rowwise().sum();
  const Matrix I = Matrix::Identity(m.S, m.S);
  Eigen::FullPivLU<Matrix> lu(I - m.gamma * Ppi);
  if (!lu.isInvertible()) throw ConfigError("Bellman system is singular");
  PolicyEval e;
  e.V = lu.solve(rpi);
  e.Q = m.r;
  for (int s = 0; s < m.S; ++s)
    for (int a = 0; a < m.A; ++a) e.Q(s, a) += m.gamma * m.row_vec(s, a).dot(e.V);
  Eigen::FullPivLU<Matrix> lut(I - m.gamma * Ppi.transpose());
  e.d = (1.0 - m.gamma) * lut.solve(m.mu0);
  e.rho = e.d.asDiagonal() * pi.pi;
  e.J = e.rho.cwiseProduct(m.r).sum();
  e.R = m.mu0.dot(e.V);
  e.J_from_V = (1.0 - m.gamma) * e.R;
  return e;
}

/// E_{rho(s,a), s'~P(.|s,a)}[f(s')].
inline double next_state_expectation(const TabularMDP& m, const Matrix& rho, const Vector& f) {
  double s = 0.0;
  for (int x = 0; x < m.S; ++x)
    for (int a = 0; a < m.A; ++a) s += rho(x, a) * m.row_vec(x, a).dot(f);
  return s;
}

// ---------------------------------------------------------------------------
// Identity checks

struct IdentityCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double gap = 0.0;
};

inline IdentityCheck make_identity(double lhs, double rhs) { return {lhs, rhs, std::abs(lhs - rhs)}; }

/// h = I(z; s'_tar) - I(z; s'_src) against sum P log[P(z|s'_tar) / P(z|s'_src)].
inline IdentityCheck theorem1_check(const DiscreteJoint& j) {
  j.validate();
  const Matrix zt = j.zt(), zu = j.zu();
  const Eigen::RowVectorXd pt = zt.colwise().sum(), pu = zu.colwise().sum();
  const double h = mutual_info(zt) - mutual_info(zu);
  double kl = 0.0;
  for (int z = 0; z < j.Z; ++z)
    for (int t = 0; t < j.T; ++t)
      for (int u = 0; u < j.U; ++u) {
        const double p = j.at(z, t, u);
        if (p == 0.0) continue;
        const double z_given_t = zt(z, t) / pt[t];
        const double z_given_u = zu(z, u) / pu[u];
        if (z_given_u == 0.0) throw DomainError("P(z|s'_src) = 0 where the joint is positive");
        kl += p * std::log(z_given_t / z_given_u);
      }
  return make_identity(h, kl);
}

/// The conditional-KL sum of theorem1_check against
/// sum P log[P(s'_tar|z) / P(s'_src|z)] + H(s'_tar) - H(s'_src).
inline IdentityCheck theorem2_check(const DiscreteJoint& j) {
  const IdentityCheck first = theorem1_check(j);
  const Matrix zt = j.zt(), zu = j.zu();
  const Vector pz = zt.rowwise().sum();
  const Vector pt = zt.colwise().sum().transpose(), pu = zu.colwise().sum().transpose();
  double s = 0.0;
  for (int z = 0; z < j.Z; ++z)
    for (int t = 0; t < j.T; ++t)
      for (int u = 0; u < j.U; ++u) {
        const double p = j.at(z, t, u);
        if (p == 0.0) continue;
        const double t_given_z = zt(z, t) / pz[z];
        const double u_given_z = zu(z, u) / pz[z];
        if (u_given_z == 0.0) throw DomainError("P(s'_src|z) = 0 where the joint is positive");
        s += p * std::log(t_given_z / u_given_z);
      }
  return make_identity(first.rhs, s + entropy(pt) - entropy(pu));
}

inline void require_shared(const TabularMDP& a, const TabularMDP& b) {
  if (a.S != b.S || a.A != b.A) throw ConfigError("MDPs do not share state and action spaces");
  if (a.gamma != b.gamma || a.r != b.r || a.mu0 != b.mu0)
    throw ConfigError("MDPs must share rewards, discount and initial distribution");
}

struct TelescopingCheck {
  IdentityCheck exact;   // R1 - R2 against the next-state value-difference sum
  double lhs_normalized = 0.0;  // J1 - J2
  double literal_gap = 0.0;     // |(J1 - J2) - rhs|
};

/// gamma/(1-gamma) sum rho1(s,a) sum_s' (P1 - P2)(s'|s,a) V2(s').
inline TelescopingCheck telescoping_check(const TabularMDP& m1, const TabularMDP& m2, const TabularPolicy& pi) {
  require_shared(m1, m2);
  const PolicyEval e1 = exact_policy_eval(m1, pi), e2 = exact_policy_eval(m2, pi);
  double inner = 0.0;
  for (int s = 0; s < m1.S; ++s)
    for (int a = 0; a < m1.A; ++a) inner += e1.rho(s, a) * (m1.row_vec(s, a) - m2.row_vec(s, a)).dot(e2.V);
  const double rhs = m1.gamma / (1.0 - m1.gamma) * inner;
  TelescopingCheck c;
  c.exact = make_identity(e1.R - e2.R, rhs);
  c.lhs_normalized = e1.J - e2.J;
  c.literal_gap = std::abs(c.lhs_normalized - rhs);
  return c;
}

struct PolicyDiffCheck {
  IdentityCheck exact;       // R1 - R2 against the state-occupancy form
  double next_state_term = 0.0;  // 1/(1-gamma) E_{rho1, P}[A(s')]
  double literal_gap = 0.0;      // |(R1 - R2) - next_state_term|
};

/// With A(s) = E_{pi1}Q2(s,.) - E_{pi2}Q2(s,.) and d1 the state occupancy of
/// pi1, R1 - R2 = 1/(1-gamma) E_{d1}[A] where
/// d1 = (1-gamma) mu0 + gamma (rho1 P). The next-state form alone drops the
/// mu0 term and the gamma weight.
inline PolicyDiffCheck policy_diff_check(const TabularMDP& m, const TabularPolicy& pi1, const TabularPolicy& pi2) {
  const PolicyEval e1 = exact_policy_eval(m, pi1), e2 = exact_policy_eval(m, pi2);
  const Vector adv = pi1.pi.cwiseProduct(e2.Q).rowwise().sum() - pi2.pi.cwiseProduct(e2.Q).rowwise().sum();
  const double g = m.gamma;
  const double via_next = next_state_expectation(m, e1.rho, adv);
  const double rhs = ((1.0 - g) * m.mu0.dot(adv) + g * via_next) / (1.0 - g);
  PolicyDiffCheck c;
  c.exact = make_identity(e1.R - e2.R, rhs);
  c.next_state_term = via_next / (1.0 - g);
  c.literal_gap = std::abs((e1.R - e2.R) - c.next_state_term);
  return c;
}

// ---------------------------------------------------------------------------
// Inequality checks

struct BoundCheck {
  double gap = 0.0;    // return difference, plain discounted returns
  double bound = 0.0;  // lower bound on gap (non-positive)
  double gap_normalized = 0.0;  // same difference for J
  double bound_normalized = 0.0;  // bound applied to J, when it differs
  bool holds = false;
};

/// R_tar - R_src >= -(2 gamma r_max / (1-gamma)^2) E_{rho_src}[TV(P_src, P_tar)]
/// and the same with sqrt(KL(P_src || P_tar) / 2) in place of TV.
struct TvBoundCheck {
  BoundCheck tv;
  BoundCheck pinsker;
};

inline TvBoundCheck tv_bound_check(const TabularMDP& src, const TabularMDP& tar, const TabularPolicy& pi) {
  require_shared(src, tar);
  const PolicyEval es = exact_policy_eval(src, pi), et = exact_policy_eval(tar, pi);
  const double g = src.gamma;
  const double coef = 2.0 * g * src.r_max() / ((1.0 - g) * (1.0 - g));
  double e_tv = 0.0, e_pinsker = 0.0;
  for (int s = 0; s < src.S; ++s)
    for (int a = 0; a < src.A; ++a) {
      const Vector ps = src.row_vec(s, a), pt = tar.row_vec(s, a);
      e_tv += es.rho(s, a) * tv_discrete(ps, pt);
      e_pinsker += es.rho(s, a) * std::sqrt(0.5 * kl_discrete(ps, pt));
    }
  auto fill = [&](double expectation) {
    BoundCheck b;
    b.gap = et.R - es.R;
    b.bound = -coef * expectation;
    b.gap_normalized = et.J - es.J;
    b.bound_normalized = b.bound;
    b.holds = b.gap >= b.bound && b.gap_normalized >= b.bound_normalized;
    return b;
  };
  return {fill(e_tv), fill(e_pinsker)};
}

/// J(pi_D) - J(pi) >= -(2 r_max / (1-gamma)^2) E_{rho_D, P}[TV(pi_D(.|s'), pi(.|s'))]
/// as stated for J, plus the form derivable for plain returns, whose
/// expectation runs over the state occupancy d_D instead of next states.
struct OfflineTermCheck {
  BoundCheck stated;    // J form, next-state expectation
  BoundCheck rigorous;  // R form, state-occupancy expectation
  double literal_R_bound = 0.0;  // next-state expectation applied to R; reported only
  bool literal_R_holds = false;
  bool holds = false;
};

inline OfflineTermCheck offline_policy_term_check(const TabularMDP& m, const TabularPolicy& pi_d,
                                                  const TabularPolicy& pi) {
  const PolicyEval ed = exact_policy_eval(m, pi_d), ep = exact_policy_eval(m, pi);
  const double g = m.gamma;
  const double coef = 2.0 * m.r_max() / ((1.0 - g) * (1.0 - g));
  Vector tv(m.S);
  for (int s = 0; s < m.S; ++s)
    tv[s] = tv_discrete(pi_d.pi.row(s).transpose(), pi.pi.row(s).transpose());
  const double e_next = next_state_expectation(m, ed.rho, tv);
  const double e_occ = ed.d.dot(tv);
  OfflineTermCheck c;
  c.stated.gap = ed.R - ep.R;
  c.stated.gap_normalized = ed.J - ep.J;
  c.stated.bound_normalized = -coef * e_next;
  c.stated.bound = c.stated.bound_normalized;
  c.stated.holds = c.stated.gap_normalized >= c.stated.bound_normalized;
  c.rigorous.gap = ed.R - ep.R;
  c.rigorous.gap_normalized = ed.J - ep.J;
  c.rigorous.bound = -coef * e_occ;
  c.rigorous.bound_normalized = -coef * (1.0 - g) * e_occ;
  c.rigorous.holds = c.rigorous.gap >= c.rigorous.bound && c.rigorous.gap_normalized >= c.rigorous.bound_normalized;
  c.literal_R_bound = -coef * e_next;
  c.literal_R_holds = c.rigorous.gap >= c.literal_R_bound;
  c.holds = c.stated.holds && c.rigorous.holds;
  return c;
}

// ---------------------------------------------------------------------------
// Random instances: Dirichlet(1) rows, Uniform(-1, 1) rewards.

inline Vector dirichlet(int n, Rng& rng) {
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.gamma(1.0);
  return v / v.sum();
}

/// Dirichlet draw renormalized so the sum is 1 to within rounding; the last
/// entry absorbs the residual.
inline Vector normalized_dirichlet(int n, Rng& rng) {
  Vector v = dirichlet(n, rng);
  v[n - 1] = std::max(0.0, 1.0 - (v.sum() - v[n - 1]));
  return v;
}

inline TabularMDP random_mdp(int S, int A, double gamma, Rng& rng) {
  TabularMDP m(S, A, gamma);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) {
      const Vector row = normalized_dirichlet(S, rng);
      for (int s2 = 0; s2 < S; ++s2) m.p(s, a, s2) = row[s2];
      m.r(s, a) = rng.uniform(-1.0, 1.0);
    }
  m.mu0 = normalized_dirichlet(S, rng);
  return m;
}

/// Same rewards, discount and initial distribution, fresh transition rows.
inline TabularMDP random_dynamics_like(const TabularMDP& base, Rng& rng) {
  TabularMDP m = base;
  for (int s = 0; s < m.S; ++s)
    for (int a = 0; a < m.A; ++a) {
      const Vector row = normalized_dirichlet(m.S, rng);
      for (int s2 = 0; s2 < m.S; ++s2) m.p(s, a, s2) = row[s2];
    }
  return m;
}

inline TabularPolicy random_policy(int S, int A, Rng& rng) {
  TabularPolicy p{Matrix(S, A)};
  for (int s = 0; s < S; ++s) p.pi.row(s) = normalized_dirichlet(A, rng).transpose();
  return p;
}

inline TabularPolicy uniform_policy(int S, int A) { return {Matrix::Constant(S, A, 1.0 / A)}; }

inline TabularPolicy deterministic_policy(const std::vector<int>& action_of_state, int A) {
  TabularPolicy p{Matrix::Zero(static_cast<Eigen::Index>(action_of_state.size()), A)};
  for (std::size_t s = 0; s < action_of_state.size(); ++s) p.pi(static_cast<Eigen::Index>(s), action_of_state[s]) = 1.0;
  return p;
}

inline DiscreteJoint random_joint(int Z, int T, int U, Rng& rng) {
  DiscreteJoint j{Z, T, U, {}};
  const Vector v = normalized_dirichlet(Z * T * U, rng);
  j.p.assign(v.data(), v.data() + v.size());
  return j;
}

// ---------------------------------------------------------------------------
// Suite

struct SuiteRow {
  std::string check;
  int instance = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  double gap = 0.0;  // identity gap, or slack (lhs - rhs) for inequalities
  bool pass = false;
};

struct SuiteSummary {
  std::string check;
  int instances = 0;
  int failures = 0;
  double worst = 0.0;  // max gap for identities, min slack for inequalities
  std::string criterion;
};

namespace tol {
inline constexpr double kTheorem = 1e-10;
inline constexpr double kLemma = 1e-8;
inline constexpr double kDuality = 1e-10;
}  // namespace tol

/// Every check on `instances` random draws from one seed. Identity checks
/// pass when the gap is under tolerance, inequality checks when the slack is
/// non-negative.
inline std::vector<SuiteRow> run_theory_suite(int instances, std::uint64_t seed) {
  if (instances < 1) throw ConfigError("instances must be at least 1");
  std::vector<SuiteRow> rows;
  auto identity = [&](std::string name, int i, const IdentityCheck& c, double tolerance) {
    rows.push_back({std::move(name), i, c.lhs, c.rhs, c.gap, c.gap < tolerance});
  };
  auto inequality = [&](std::string name, int i, double lhs, double bound, bool holds) {
    rows.push_back({std::move(name), i, lhs, bound, lhs - bound, holds});
  };

  Rng joints = Rng::substream(seed, "theory.joints");
  Rng mdps = Rng::substream(seed, "theory.mdps");
  for (int i = 0; i < instances; ++i) {
    const int Z = 2 + static_cast<int>(joints.index(3)), T = 2 + static_cast<int>(joints.index(3)),
              U = 2 + static_cast<int>(joints.index(3));
    const DiscreteJoint j = random_joint(Z, T, U, joints);
    identity("theorem1", i, theorem1_check(j), tol::kTheorem);
    identity("theorem2", i, theorem2_check(j), tol::kTheorem);
  }
  for (int i = 0; i < instances; ++i) {
    const TabularMDP m1 = random_mdp(5, 3, 0.9, mdps);
    const TabularMDP m2 = random_dynamics_like(m1, mdps);
    const TabularPolicy pi = random_policy(5, 3, mdps), pi2 = random_policy(5, 3, mdps);
    const PolicyEval e = exact_policy_eval(m1, pi);
    identity("occupancy_duality", i, make_identity(e.J, e.J_from_V), tol::kDuality);
    identity("occupancy_mass", i, make_identity(e.rho.sum(), 1.0), tol::kDuality);
    identity("telescoping", i, telescoping_check(m1, m2, pi).exact, tol::kLemma);
    identity("policy_difference", i, policy_diff_check(m1, pi, pi2).exact, tol::kLemma);
  }
  for (int i = 0; i < instances; ++i) {
    const int S = 2 + static_cast<int>(mdps.index(5)), A = 1 + static_cast<int>(mdps.index(3));
    const double g = mdps.uniform(0.5, 0.95);
    const TabularMDP src = random_mdp(S, A, g, mdps);
    const TabularMDP tar = random_dynamics_like(src, mdps);
    const TabularPolicy pi = random_policy(S, A, mdps), pi_d = random_policy(S, A, mdps);
    const TvBoundCheck tv = tv_bound_check(src, tar, pi);
    inequality("tv_bound", i, tv.tv.gap, tv.tv.bound, tv.tv.holds);
    inequality("tv_bound_pinsker", i, tv.pinsker.gap, tv.pinsker.bound, tv.pinsker.holds);
    const OfflineTermCheck off = offline_policy_term_check(src, pi_d, pi);
    inequality("offline_policy_term", i, off.stated.gap_normalized, off.stated.bound_normalized, off.holds);
  }
  return rows;
}

inline std::vector<SuiteSummary> summarize(const std::vector<SuiteRow>& rows) {
  std::vector<SuiteSummary> out;
  for (const SuiteRow& r : rows) {
    auto it = std::find_if(out.begin(), out.end(), [&](const SuiteSummary& s) { return s.check == r.check; });
    const bool inequality = r.check.starts_with("tv_") || r.check.starts_with("offline_");
    if (it == out.end()) {
      std::string crit = inequality ? "slack >= 0" : (r.check.starts_with("theorem") ? "gap < 1e-10" :
                                                      r.check.starts_with("occupancy") ? "gap < 1e-10" : "gap < 1e-8");
      out.push_back({r.check, 0, 0, inequality ? r.gap : 0.0, crit});
      it = out.end() - 1;
    }
    ++it->instances;
    if (!r.pass) ++it->failures;
    it->worst = inequality ? std::min(it->worst, r.gap) : std::max(it->worst, r.gap);
  }
  return out;
}

}  // namespace parlab::theory
