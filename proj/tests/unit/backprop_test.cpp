#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "itemgrad/backprop.hpp"
#include "itemgrad/errors.hpp"
#include "oracle.hpp"

namespace itemgrad {
namespace {

using testing::finite_difference;
using testing::max_relative_error;
using testing::random_instance;
using testing::relative_frobenius;
using testing::Which;

ForwardTrace trace_of(const testing::Instance& inst) {
  return forward_batch(inst.params, inst.h0, inst.inputs, inst.targets);
}

TEST(Standard, OutputGradientHasClosedForm) {
  const auto inst = random_instance(7, 5, 7, 6);
  const ForwardTrace tr = trace_of(inst);
  Matrix expected = Matrix::Zero(7, 5);
  for (std::size_t t = 0; t < tr.length(); ++t) {
    expected += (tr.steps[t].probs - one_hot(inst.targets[t], 7)) * tr.steps[t].hidden.transpose();
  }
  const GradientSet g = bptt_standard(tr, inst.params);
  EXPECT_LT(relative_frobenius(g.dV, expected), 1e-14);
  EXPECT_LT(max_relative_error(g.dV, finite_difference(inst, Which::V)), 1e-5);
}

TEST(Standard, ZeroRecurrentAndInputWeightsKillDw) {
  auto inst = random_instance(8, 4, 6, 5);
  inst.params.U.setZero();
  inst.params.W.setZero();
  inst.h0.setZero();
  const GradientSet g = bptt_standard(trace_of(inst), inst.params);
  EXPECT_TRUE(g.dW.isZero(0.0));
  std::vector<bool> used(6, false);
  for (auto x : inst.inputs) used[x] = true;
  for (Eigen::Index c = 0; c < 6; ++c) {
    if (!used[static_cast<std::size_t>(c)]) EXPECT_TRUE(g.dU.col(c).isZero(0.0));
  }
}

TEST(Standard, MatchesFiniteDifferencesEverywhere) {
  const auto inst = random_instance(99, 8, 12, 6);
  const GradientSet g = bptt_standard(trace_of(inst), inst.params);
  EXPECT_LT(max_relative_error(g.dU, finite_difference(inst, Which::U)), 1e-5);
  EXPECT_LT(max_relative_error(g.dW, finite_difference(inst, Which::W)), 1e-5);
  EXPECT_LT(max_relative_error(g.dV, finite_difference(inst, Which::V)), 1e-5);
}

TEST(Standard, DimensionMismatch) {
  const auto inst = random_instance(1, 3, 4, 3);
  const ForwardTrace tr = trace_of(inst);
  EXPECT_THROW(bptt_standard(tr, ModelParams::zeros(4, 4)), ShapeError);
  EXPECT_THROW(bptt_itemized(tr, ModelParams::zeros(3, 5), 2), ShapeError);
}

TEST(Itemized, HorizonZeroKeepsOnlyDiagonal) {
  const auto inst = random_instance(21, 5, 6, 7);
  const ForwardTrace tr = trace_of(inst);
  const ItemizedResult r = bptt_itemized(tr, inst.params, 0);
  const auto deltas = loss_head_gradients(tr, inst.params);
  Matrix sum = Matrix::Zero(5, 5);
  for (std::size_t t = 0; t < tr.length(); ++t) {
    EXPECT_EQ(r.itemized.steps_for(t), 1u);
    const Vector tp = (1.0 - tr.steps[t].hidden.array().square()).matrix();
    const Matrix expected = deltas[t].cwiseProduct(tp) * tr.hidden_before(t).transpose();
    EXPECT_LT(relative_frobenius(r.itemized.contrib(t, t), expected), 1e-14);
    if (t > 0) EXPECT_FALSE(r.itemized.contains(t, t - 1));
    sum += r.itemized.contrib(t, t);
  }
  EXPECT_LT(relative_frobenius(r.gradients.dW, sum), 1e-14);
}

TEST(Itemized, UntruncatedEqualsStandard) {
  const auto inst = random_instance(5, 7, 9, 8);
  const ForwardTrace tr = trace_of(inst);
  const GradientSet std_g = bptt_standard(tr, inst.params);
  const ItemizedResult r = bptt_itemized(tr, inst.params, 7);
  EXPECT_LT(relative_frobenius(r.gradients.dW, std_g.dW), 1e-8);
  EXPECT_LT(relative_frobenius(r.itemized.sum(), std_g.dW), 1e-8);
  EXPECT_EQ(r.gradients.dU, std_g.dU);
  EXPECT_EQ(r.gradients.dV, std_g.dV);
}

TEST(Itemized, LastOriginMatchesSingleLossFiniteDifference) {
  const auto inst = random_instance(606, 6, 8, 5);
  const ForwardTrace tr = trace_of(inst);
  const ItemizedResult r = bptt_itemized(tr, inst.params, 4);
  const std::size_t t = 4;
  Matrix per_origin = Matrix::Zero(6, 6);
  for (std::size_t j = 0; j <= t; ++j) per_origin += r.itemized.contrib(t, j);
  const Matrix fd = finite_difference(inst, Which::W, 1e-5L, static_cast<long>(t));
  EXPECT_LT(max_relative_error(per_origin, fd), 1e-5);
}

TEST(Itemized, NegativeHorizonRejected) {
  const auto inst = random_instance(1, 3, 4, 3);
  EXPECT_THROW(bptt_itemized(trace_of(inst), inst.params, -1), ConfigError);
}

TEST(Itemized, DomainQueries) {
  const auto inst = random_instance(2, 3, 4, 6);
  const ItemizedResult r = bptt_itemized(trace_of(inst), inst.params, 2);
  EXPECT_EQ(r.itemized.steps_for(0), 1u);
  EXPECT_EQ(r.itemized.steps_for(1), 2u);
  EXPECT_EQ(r.itemized.steps_for(5), 3u);
  EXPECT_TRUE(r.itemized.contains(5, 3));
  EXPECT_FALSE(r.itemized.contains(5, 2));
  EXPECT_FALSE(r.itemized.contains(2, 3));
  EXPECT_THROW(r.itemized.contrib(5, 2), BoundsError);
  EXPECT_THROW(r.itemized.magnitudes_by_distance(6), BoundsError);
  for (std::size_t t = 0; t < 6; ++t) {
    const auto mags = r.itemized.magnitudes_by_distance(t);
    ASSERT_EQ(mags.size(), r.itemized.steps_for(t));
    for (std::size_t d = 0; d < mags.size(); ++d) EXPECT_EQ(mags[d], r.itemized.magnitude(t, t - d));
  }
}

// Randomized sweep: engine equivalence, bookkeeping identity, monotone
// coverage and magnitude sign/zero properties.
TEST(Itemized, Properties) {
  for (std::uint64_t seed = 100; seed < 160; ++seed) {
    const std::size_t h = 1 + seed % 16;
    const std::size_t c = 2 + seed % 19;
    const std::size_t n = 1 + seed % 12;
    const auto inst = random_instance(seed, h, c, n);
    const ForwardTrace tr = trace_of(inst);
    const GradientSet ref = bptt_standard(tr, inst.params);
    const ItemizedResult full = bptt_itemized(tr, inst.params, static_cast<int>(n - 1));
    EXPECT_LT(relative_frobenius(full.gradients.dW, ref.dW), 1e-8) << "seed " << seed;

    for (int k = 0; k < static_cast<int>(n); ++k) {
      const ItemizedResult a = bptt_itemized(tr, inst.params, k);
      const ItemizedResult b = bptt_itemized(tr, inst.params, k + 1);
      EXPECT_EQ(a.gradients.dW, a.itemized.sum());
      EXPECT_EQ(a.gradients.dU, ref.dU);
      EXPECT_EQ(a.gradients.dV, ref.dV);
      for (std::size_t t = 0; t < n; ++t) {
        for (std::size_t j = 0; j <= t; ++j) {
          if (a.itemized.contains(t, j)) {
            EXPECT_TRUE(b.itemized.contains(t, j));
            const double m = a.itemized.magnitude(t, j);
            EXPECT_GE(m, 0.0);
            EXPECT_EQ(m == 0.0, a.itemized.contrib(t, j).isZero(0.0));
          }
        }
      }
    }
  }
}

TEST(Magnitude, MeanAbsoluteEntry) {
  EXPECT_DOUBLE_EQ(aggregate_magnitude(Matrix::Identity(2, 2)), 0.5);
  EXPECT_DOUBLE_EQ(aggregate_magnitude(Matrix::Zero(3, 3)), 0.0);
  EXPECT_DOUBLE_EQ(aggregate_magnitude(Matrix::Constant(4, 4, -3.0)), 3.0);
}

TEST(DecayRatios, Arithmetic) {
  const std::vector<double> mags{4, 2, 1};
  EXPECT_EQ(decay_ratios(mags), (std::vector<double>{0.5, 0.5}));
  const std::vector<double> zeros{0, 0, 0};
  EXPECT_EQ(decay_ratios(zeros), (std::vector<double>{1, 1}));
  const std::vector<double> jump{0, 2};
  EXPECT_EQ(decay_ratios(jump), (std::vector<double>{std::numeric_limits<double>::infinity()}));
}

TEST(DecayRatios, ItemizedOrigins) {
  const auto inst = random_instance(4, 3, 4, 5);
  const ItemizedResult r = bptt_itemized(trace_of(inst), inst.params, 3);
  EXPECT_THROW(decay_ratios(r.itemized, 0), BoundsError);
  EXPECT_THROW(decay_ratios(r.itemized, 5), BoundsError);
  const auto ratios = decay_ratios(r.itemized, 4);
  ASSERT_EQ(ratios.size(), 3u);
  EXPECT_DOUBLE_EQ(ratios[0], r.itemized.magnitude(4, 3) / r.itemized.magnitude(4, 4));
}

TEST(GradientHorizon, StopsAtFirstDrop) {
  const std::vector<double> mags{5, 3, 0.01, 2};
  EXPECT_EQ(gradient_horizon(mags, 0.1), 2u);
  EXPECT_EQ(gradient_horizon(mags, 0.001), 4u);
  EXPECT_EQ(gradient_horizon(mags, 10.0), 0u);
  EXPECT_THROW(gradient_horizon(mags, 0.0), ConfigError);
  const auto inst = random_instance(4, 3, 4, 5);
  const ItemizedResult r = bptt_itemized(trace_of(inst), inst.params, 3);
  EXPECT_THROW(gradient_horizon(r.itemized, 9, 0.1), BoundsError);
}

}  // namespace
}  // namespace itemgrad
