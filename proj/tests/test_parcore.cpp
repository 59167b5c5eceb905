#include <gtest/gtest.h>

#include "helpers.hpp"
#include "parlab/encoders.hpp"

using namespace parlab;
using testkit::cat;
using testkit::constant_head;
using testkit::eval_by_hand;
using testkit::row;

namespace {

const DomainPair kPair = make_pair(TaskId::PendulumTorque);

EncoderConfig tiny(EncoderVariant v = EncoderVariant::Par, int latent = 2) {
  EncoderConfig c;
  c.hidden = 3;
  c.latent = latent;
  c.variant = v;
  return c;
}

double mean_sq(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

}  // namespace

TEST(Parcore, LossMatchesHandArithmetic) {
  Rng init(1), rng(2);
  const EncoderPair enc(tiny(), init);
  const Batch b = testkit::random_batch(kPair.target, 1, rng);
  Graph g;
  const double loss = enc.loss(g, b).scalar();
  const auto z = eval_by_hand(enc.f(), row(b.obs, 0));
  const auto pred = eval_by_hand(enc.g(), cat(z, row(b.actions, 0)));
  const auto zn = eval_by_hand(enc.f(), row(b.next_obs, 0));
  EXPECT_NEAR(loss, mean_sq(pred, zn), 1e-12);
  EXPECT_NEAR(enc.penalties(b)(0, 0), mean_sq(pred, zn), 1e-12);
}

TEST(Parcore, ParBLossMatchesHandArithmetic) {
  Rng init(3), rng(4);
  const EncoderPair enc(tiny(EncoderVariant::ParB), init);
  const Batch b = testkit::random_batch(kPair.target, 1, rng);
  Graph g;
  const double loss = enc.loss(g, b).scalar();
  const auto pred = eval_by_hand(enc.g(), cat(row(b.obs, 0), row(b.actions, 0)));
  const auto zn = eval_by_hand(enc.f(), row(b.next_obs, 0));
  EXPECT_NEAR(loss, mean_sq(pred, zn), 1e-12);
  EXPECT_THROW(enc.loss_par(g, b), UsageError);
}

TEST(Parcore, ConsistentEncodersGiveZeroLossAndPenalty) {
  Rng init(5), rng(6);
  EncoderPair enc(tiny(), init);
  constant_head(enc.f(), {0.3, -0.2});
  constant_head(enc.g(), {0.3, -0.2});
  const Batch b = testkit::random_batch(kPair.target, 4, rng);
  Graph g;
  EXPECT_EQ(enc.loss(g, b).scalar(), 0.0);
  EXPECT_EQ(enc.penalties(b).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Parcore, PenaltyHalfExample) {
  Rng init(7), rng(8);
  EncoderPair enc(tiny(), init);
  constant_head(enc.f(), {1.0, 0.0});
  constant_head(enc.g(), {0.0, 0.0});
  const Transition t = testkit::random_transition(kPair.source, rng, Domain::Source);
  EXPECT_DOUBLE_EQ(enc.penalty(kPair.source, t), 0.5);
}

TEST(Parcore, NextStateBranchCarriesNoGradient) {
  Rng init(9), rng(10);
  const EncoderPair enc(tiny(EncoderVariant::Par, 4), init);
  const Batch b = testkit::random_batch(kPair.target, 5, rng);
  Graph g1;
  const Gradients full = g1.backward(enc.loss(g1, b));
  // Same loss with f(s') fed in as a constant.
  Graph g2;
  Var z = enc.f().forward(g2.constant(b.obs));
  Var pred = enc.g().forward(concat_cols(z, g2.constant(b.actions)));
  const Gradients cut = g2.backward(mean(square(pred - g2.constant(enc.f().eval(b.next_obs)))));
  for (const auto& [name, m] : full) EXPECT_TRUE(m.isApprox(cut.at(name), 1e-14)) << name;

  // With g frozen and only the s' input varying, the gradient wrt f is unchanged.
  Batch shifted = b;
  shifted.next_obs.array() += 0.7;
  Graph g3;
  const Gradients moved = g3.backward(enc.loss(g3, shifted));
  Graph g4;
  Var z4 = enc.f().forward(g4.constant(b.obs));
  Var p4 = enc.g().forward(concat_cols(z4, g4.constant(b.actions)));
  const Gradients ref = g4.backward(mean(square(p4 - g4.constant(enc.f().eval(shifted.next_obs)))));
  for (const auto& [name, m] : moved) EXPECT_TRUE(m.isApprox(ref.at(name), 1e-14)) << name;
}

TEST(Parcore, ParBGradientReachesStateEncoder) {
  Rng init(11), rng(12);
  const EncoderPair enc(tiny(EncoderVariant::ParB, 4), init);
  const Batch b = testkit::random_batch(kPair.target, 5, rng);
  Graph g;
  const Gradients grads = select(g.backward(enc.loss(g, b)), enc.f().params());
  double total = 0.0;
  for (const auto& [name, m] : grads) total += m.norm();
  EXPECT_GT(total, 0.0);
}

TEST(Parcore, SourceTaggedBatchRejected) {
  Rng init(13), rng(14);
  EncoderPair enc(tiny(), init);
  Batch b = testkit::random_batch(kPair.target, 4, rng);
  b.domains[2] = Domain::Source;
  const ParamSet before = enc.f().params();
  EXPECT_THROW(enc.update(b), UsageError);
  EXPECT_EQ(enc.f().params(), before);
  EXPECT_THROW(enc.update(Batch{}), UsageError);
  EXPECT_THROW(enc.update(testkit::random_batch(kPair.source, 4, rng)), UsageError);
}

TEST(Parcore, UpdateTouchesOnlyEncodersAndPenaltyIsPure) {
  Rng init(15), rng(16);
  EncoderPair enc(tiny(EncoderVariant::Par, 8), init);
  const Batch tb = testkit::random_batch(kPair.target, 16, rng);
  const double l0 = enc.update(tb);
  EXPECT_GT(l0, 0.0);
  EXPECT_EQ(enc.steps(), 1);
  const ParamSet f = enc.f().params(), g = enc.g().params();
  const Batch sb = testkit::random_batch(kPair.source, 16, rng);
  const Matrix p1 = enc.penalties(sb);
  const Matrix p2 = enc.penalties(sb);
  EXPECT_EQ(p1, p2);
  EXPECT_EQ(enc.f().params(), f);
  EXPECT_EQ(enc.g().params(), g);
  EXPECT_TRUE((p1.array() >= 0.0).all());
}

TEST(Parcore, ModifyRewards) {
  Rng init(17), rng(18);
  EncoderPair enc(tiny(), init);
  Batch b = testkit::random_batch(kPair.source, 8, rng);
  const Matrix r0 = b.rewards;
  EXPECT_EQ(enc.modify_rewards(b, 0.0).rewards, r0);
  const Batch m = enc.modify_rewards(b, 1.5);
  EXPECT_EQ(b.rewards, r0);  // input untouched
  EXPECT_TRUE((m.rewards.array() <= r0.array()).all());
  EXPECT_TRUE(m.rewards.isApprox(r0 - 1.5 * enc.penalties(b), 1e-15));
  EXPECT_THROW(enc.modify_rewards(b, -1.0), ConfigError);

  // r = -1, penalty 0.5, beta = 2 -> -2.
  constant_head(enc.f(), {1.0, 0.0});
  constant_head(enc.g(), {0.0, 0.0});
  b.rewards.setConstant(-1.0);
  EXPECT_TRUE((enc.modify_rewards(b, 2.0).rewards.array() == -2.0).all());
}

TEST(Parcore, TrainingReducesLoss) {
  Rng init(19), rng(20);
  EncoderPair enc(tiny(EncoderVariant::Par, 8), init);
  const Batch tb = testkit::random_batch(kPair.target, 64, rng);
  Graph g0;
  const double before = enc.loss(g0, tb).scalar();
  for (int i = 0; i < 200; ++i) enc.update(tb);
  Graph g1;
  EXPECT_LT(enc.loss(g1, tb).scalar(), before);
}
