// Copyright 2026 The CLSC Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "clsc/clsc_loss.hpp"
#include "test_util.hpp"

namespace clsc {
namespace {

using testing::random_matrix;
using testing::random_stochastic;

Eigen::MatrixXd one_hot(const std::vector<Eigen::Index>& labels, int K) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(labels.size()), K);
  Eigen::Index i = 0;
  for (Eigen::Index l : labels) m(i++, l) = 1.0;
  return m;
}

TEST(TargetMatrixTest, OneHotClassesGiveUniformWithinClass) {
  Eigen::Matrix3d expected;
  expected << 0.5, 0.5, 0, 0.5, 0.5, 0, 0, 0, 1;
  EXPECT_EQ(target_matrix(one_hot({0, 0, 1}, 2)), Eigen::MatrixXd(expected));
}

TEST(TargetMatrixTest, UniformRowsGiveAllHalves) {
  // T_ij = (1/2 * 1/2) / 1 + (1/2 * 1/2) / 1 = 1/2.
  EXPECT_EQ(target_matrix(Eigen::MatrixXd::Constant(2, 2, 0.5)),
            Eigen::MatrixXd::Constant(2, 2, 0.5));
}

TEST(TargetMatrixTest, SingleClassBatchIsUniform) {
  const Eigen::MatrixXd T = target_matrix(one_hot({1, 1, 1, 1}, 3));
  EXPECT_LE((T.array() - 0.25).abs().maxCoeff(), 1e-15);
}

TEST(TargetMatrixTest, RowsSumToOne) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::MatrixXd Phi = random_stochastic(2 + trial % 12, 1 + trial % 5, rng);
    if (Phi.cols() > 1) Phi.col(0).setZero();  // an absent type
    for (Eigen::Index i = 0; i < Phi.rows(); ++i) Phi.row(i) /= Phi.row(i).sum();
    const Eigen::MatrixXd T = target_matrix(Phi);
    EXPECT_LE((T.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-10);
  }
}

TEST(AgreementMaskTest, Examples) {
  const Eigen::MatrixXd E = agreement_mask(one_hot({0, 1, 0}, 2));
  Eigen::Matrix3d expected;
  expected << 1, 0, 1, 0, 1, 0, 1, 0, 1;
  EXPECT_EQ(E, Eigen::MatrixXd(expected));

  Eigen::MatrixXd Phi(2, 2);
  Phi << 1, 0, 0.5, 0.5;
  EXPECT_EQ(agreement_mask(Phi)(0, 1), 0.5);

  EXPECT_LE((agreement_mask(Eigen::MatrixXd::Constant(4, 4, 0.25)).array() -
             0.25).abs().maxCoeff(),
            1e-15);
}

TEST(AgreementMaskTest, IsSymmetricWithinUnitInterval) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::MatrixXd Phi = random_stochastic(5, 3, rng);
    const Eigen::MatrixXd E = agreement_mask(Phi);
    EXPECT_EQ(E, E.transpose());
    EXPECT_GE(E.minCoeff(), 0.0);
    EXPECT_LE(E.maxCoeff(), 1.0);
    for (Eigen::Index i = 0; i < 5; ++i) {
      EXPECT_NEAR(E(i, i), Phi.row(i).squaredNorm(), 1e-15);
    }
  }
}

TEST(MarkovPowersTest, FirstPowerIsH) {
  std::mt19937_64 rng(3);
  const Eigen::MatrixXd H = random_stochastic(4, 4, rng);
  const auto P = markov_powers(H, random_stochastic(4, 4, rng), 1);
  ASSERT_EQ(P.size(), 1u);
  EXPECT_EQ(P[0], H);
}

TEST(MarkovPowersTest, AllOnesMaskGivesMatrixPowers) {
  std::mt19937_64 rng(4);
  for (Eigen::Index B = 2; B <= 8; ++B) {
    const Eigen::MatrixXd H = random_stochastic(B, B, rng);
    const auto P = markov_powers(H, Eigen::MatrixXd::Ones(B, B), 4);
    Eigen::MatrixXd power = H;
    for (int s = 1; s <= 4; ++s) {
      EXPECT_LE((P[s - 1] - power).cwiseAbs().maxCoeff(), 1e-12);
      power = H * power;
    }
  }
}

TEST(MarkovPowersTest, ZeroMaskKillsLongerPaths) {
  std::mt19937_64 rng(5);
  const Eigen::MatrixXd H = random_stochastic(4, 4, rng);
  const auto P = markov_powers(H, Eigen::MatrixXd::Zero(4, 4), 3);
  EXPECT_EQ(P[1], Eigen::MatrixXd::Zero(4, 4));
  EXPECT_EQ(P[2], Eigen::MatrixXd::Zero(4, 4));
}

TEST(MarkovPowersTest, OneHotPosteriorGatesAllButTheLastStep) {
  std::mt19937_64 rng(6);
  const std::vector<Eigen::Index> cls = {0, 1, 2, 0, 1, 2};
  const Eigen::MatrixXd Phi = one_hot(cls, 3);
  const Eigen::MatrixXd H = random_stochastic(6, 6, rng);
  const auto P = markov_powers(H, agreement_mask(Phi), 5);
  // Reference: the gated walk G = H restricted to same-class pairs; every
  // step before the last stays inside the class, the last one is free.
  Eigen::MatrixXd G = H;
  for (Eigen::Index i = 0; i < 6; ++i)
    for (Eigen::Index j = 0; j < 6; ++j)
      if (cls[i] != cls[j]) G(i, j) = 0.0;
  Eigen::MatrixXd walk = Eigen::MatrixXd::Identity(6, 6);
  for (std::size_t s = 1; s < P.size(); ++s) {
    walk = G * walk;
    for (Eigen::Index i = 0; i < 6; ++i)
      for (Eigen::Index j = 0; j < 6; ++j)
        if (cls[i] != cls[j]) EXPECT_EQ(walk(i, j), 0.0);
    EXPECT_LE((P[s] - walk * H).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(MarkovPowersTest, BlockDiagonalGraphHasNoCrossClassMass) {
  std::mt19937_64 rng(8);
  const std::vector<Eigen::Index> cls = {0, 0, 0, 1, 1, 1};
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(6, 6);
  H.topLeftCorner(3, 3) = random_stochastic(3, 3, rng);
  H.bottomRightCorner(3, 3) = random_stochastic(3, 3, rng);
  const auto P = markov_powers(H, agreement_mask(one_hot(cls, 2)), 4);
  for (std::size_t s = 1; s < P.size(); ++s) {
    EXPECT_EQ(P[s].topRightCorner(3, 3), Eigen::MatrixXd::Zero(3, 3));
    EXPECT_EQ(P[s].bottomLeftCorner(3, 3), Eigen::MatrixXd::Zero(3, 3));
  }
}

TEST(MarkovPowersTest, EntriesNonNegativeAndRowsLeakMass) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::MatrixXd H = random_stochastic(6, 6, rng);
    const Eigen::MatrixXd E = agreement_mask(random_stochastic(6, 3, rng));
    for (const auto& P : markov_powers(H, E, 6)) {
      EXPECT_GE(P.minCoeff(), 0.0);
      EXPECT_LE(P.rowwise().sum().maxCoeff(), 1.0 + 1e-9);
    }
  }
}

TEST(ClscLossTest, HalvesGiveHalfLogTwo) {
  const Eigen::MatrixXd half = Eigen::MatrixXd::Constant(2, 2, 0.5);
  const std::vector<Eigen::MatrixXd> powers = {half};
  EXPECT_NEAR(clsc_loss(half, powers), 0.5 * std::log(2.0), 1e-12);
  EXPECT_NEAR(clsc_loss(half, powers), 0.3466, 5e-5);
}

TEST(ClscLossTest, ZeroTargetsSkipZeroTransitions) {
  Eigen::Matrix2d T;
  T << 1, 0, 0, 1;
  Eigen::Matrix2d H;
  H << 1, 0, 0, 1;
  const std::vector<Eigen::MatrixXd> powers = {H};
  // Only the two diagonal terms count, each -log(1 + eps); a zero target
  // over a zero transition would have added -0 * log(eps) = 0 as well, but
  // is skipped rather than evaluated.
  const double expected = -0.25 * 2.0 * std::log(1.0 + 1e-12);
  EXPECT_DOUBLE_EQ(clsc_loss(Eigen::MatrixXd(T), powers), expected);
}

TEST(ClscLossTest, SingleStepEqualsOneStepLossBitwise) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index B = 2 + trial % 9;
    const Eigen::MatrixXd H = random_stochastic(B, B, rng);
    const Eigen::MatrixXd T = target_matrix(random_stochastic(B, 3, rng));
    const std::vector<Eigen::MatrixXd> powers = {H};
    EXPECT_EQ(clsc_loss(T, powers), one_step_loss(T, H));
  }
}

TEST(ClscLossTest, TargetMinimizesSingleStepLoss) {
  std::mt19937_64 rng(9);
  const Eigen::MatrixXd T = target_matrix(random_stochastic(6, 3, rng));
  const double at_target = one_step_loss(T, T);
  for (int trial = 0; trial < 100; ++trial) {
    EXPECT_LE(at_target, one_step_loss(T, random_stochastic(6, 6, rng)));
  }
}

TEST(ClscBackwardTest, SymmetricPointHasZeroGradient) {
  std::mt19937_64 rng(10);
  const Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(4, 3);
  const Eigen::MatrixXd Phi = random_stochastic(4, 2, rng);
  const ClscGradient g = clsc_backward(Z, Phi, 3);
  EXPECT_LE(g.dZ.cwiseAbs().maxCoeff(), 1e-15);
  const auto f = [&](const Eigen::VectorXd& z) {
    return clsc_backward(testing::as_matrix(z, 4, 3), Phi, 3).loss;
  };
  EXPECT_LE(testing::numeric_gradient(f, testing::as_vector(Z))
                .cwiseAbs()
                .maxCoeff(),
            1e-9);
}

TEST(ClscBackwardTest, MatchesFiniteDifferencesWithFrozenPosterior) {
  for (int steps : {1, 3}) {
    std::mt19937_64 rng(static_cast<std::uint64_t>(11 + steps));
    for (int trial = 0; trial < 20; ++trial) {
      const Eigen::MatrixXd Z = random_matrix(6, 4, rng);
      const Eigen::MatrixXd Phi = random_stochastic(6, 3, rng);
      const auto f = [&](const Eigen::VectorXd& z) {
        return clsc_backward(testing::as_matrix(z, 6, 4), Phi, steps).loss;
      };
      const Eigen::VectorXd analytic =
          testing::as_vector(clsc_backward(Z, Phi, steps).dZ);
      const Eigen::VectorXd numeric =
          testing::numeric_gradient(f, testing::as_vector(Z));
      EXPECT_LE(testing::relative_error(analytic, numeric), 1e-5)
          << "S_m=" << steps << " trial " << trial;
    }
  }
}

TEST(ClscBackwardTest, CompactClustersHaveSmallerGradient) {
  std::mt19937_64 rng(14);
  const Eigen::MatrixXd Phi = one_hot({0, 0, 0, 1, 1, 1}, 2);
  Eigen::MatrixXd compact(6, 2), interleaved(6, 2);
  const Eigen::MatrixXd jitter = random_matrix(6, 2, rng, 0.05);
  for (Eigen::Index i = 0; i < 6; ++i) {
    const Eigen::RowVector2d a(3.0, 0.0), b(0.0, 3.0);
    compact.row(i) = (i < 3 ? a : b) + jitter.row(i);
    interleaved.row(i) = (i % 2 == 0 ? a : b) + jitter.row(i);
  }
  const double g_compact = clsc_backward(compact, Phi, 3).dZ.norm();
  const double g_mixed = clsc_backward(interleaved, Phi, 3).dZ.norm();
  EXPECT_LT(g_compact, g_mixed);
}

TEST(ClscBackwardTest, GradientDescentOnEmbeddingsLowersTheLoss) {
  std::mt19937_64 rng(15);
  Eigen::MatrixXd Z = random_matrix(8, 4, rng);
  const Eigen::MatrixXd Phi = random_stochastic(8, 3, rng);
  double previous = clsc_backward(Z, Phi, 3).loss;
  for (int step = 0; step < 50; ++step) {
    Z -= 1e-3 * clsc_backward(Z, Phi, 3).dZ;
    const double current = clsc_backward(Z, Phi, 3).loss;
    EXPECT_LE(current, previous) << "step " << step;
    previous = current;
  }
}

}  // namespace
}  // namespace clsc
