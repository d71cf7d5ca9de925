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

#include "clsc/encoder.hpp"
#include "test_util.hpp"

namespace clsc {
namespace {

using testing::random_matrix;

Eigen::MatrixXd rows(std::initializer_list<std::initializer_list<double>> r) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(r.size()),
                    static_cast<Eigen::Index>(r.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& row : r) {
    Eigen::Index j = 0;
    for (double x : row) m(i, j++) = x;
    ++i;
  }
  return m;
}

TEST(AverageMentionTest, Examples) {
  EXPECT_EQ(average_mention(rows({{1, 0}, {0, 1}})), Eigen::Vector2d(0.5, 0.5));
  EXPECT_EQ(average_mention(rows({{2, 4}})), Eigen::Vector2d(2, 4));
  EXPECT_EQ(average_mention(rows({{1, 1}, {3, 1}, {5, 1}})),
            Eigen::Vector2d(3, 1));
  EXPECT_THROW(average_mention(Eigen::MatrixXd(0, 2)), ValidationError);
}

TEST(AttentionPoolTest, SingleTokenIsReturnedAsIs) {
  const Eigen::MatrixXd h = rows({{0.3, -2.0, 5.0}});
  EXPECT_EQ(attention_pool(h, Eigen::Vector3d(4, -1, 7)),
            Eigen::Vector3d(0.3, -2.0, 5.0));
}

TEST(AttentionPoolTest, ZeroQueryGivesUniformWeights) {
  const Eigen::VectorXd out =
      attention_pool(rows({{1, 0}, {0, 1}}), Eigen::Vector2d::Zero());
  EXPECT_EQ(out, Eigen::Vector2d(0.5, 0.5));
}

TEST(AttentionPoolTest, SharpQueryMatchesScalarEvaluation) {
  // Scalar evaluation: alpha = (10 tanh 1, -10 tanh 1), beta = softmax.
  const double a1 = 10.0 * std::tanh(1.0);
  const double a2 = 10.0 * std::tanh(-1.0);
  const double b1 = std::exp(a1) / (std::exp(a1) + std::exp(a2));
  const double b2 = std::exp(a2) / (std::exp(a1) + std::exp(a2));
  const Eigen::VectorXd out =
      attention_pool(rows({{1, 0}, {-1, 0}}), Eigen::Vector2d(10, 0));
  EXPECT_NEAR(out(0), b1 * 1.0 + b2 * -1.0, 1e-15);
  EXPECT_EQ(out(1), 0.0);
  EXPECT_GT(out(0), 0.99999);
}

TEST(AttentionPoolTest, RejectsEmptyAndMismatchedInput) {
  EXPECT_THROW(attention_pool(Eigen::MatrixXd(0, 2), Eigen::Vector2d::Zero()),
               ValidationError);
  EXPECT_THROW(attention_pool(rows({{1, 2, 3}}), Eigen::Vector2d::Zero()),
               ValidationError);
}

TEST(AttentionPoolTest, WeightsAreADistributionAndOutputIsAConvexCombination) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::MatrixXd C = random_matrix(1 + trial % 7, 4, rng, 2.0);
    const Eigen::VectorXd w = random_matrix(4, 1, rng, 3.0);
    const AttentionOutput a = attention(C, w);
    EXPECT_NEAR(a.beta.sum(), 1.0, 1e-12);
    EXPECT_GE(a.beta.minCoeff(), 0.0);
    EXPECT_LE((a.pooled - C.transpose() * a.beta).cwiseAbs().maxCoeff(),
              1e-12);
    for (Eigen::Index k = 0; k < C.cols(); ++k) {
      EXPECT_GE(a.pooled(k), C.col(k).minCoeff() - 1e-12);
      EXPECT_LE(a.pooled(k), C.col(k).maxCoeff() + 1e-12);
    }
  }
}

std::vector<MentionSample> random_samples(int B, Eigen::Index d_w,
                                          Eigen::Index d_h,
                                          std::mt19937_64& rng) {
  const TypeHierarchy h = testing::flat_hierarchy(2);
  std::vector<MentionSample> out;
  for (int i = 0; i < B; ++i) {
    out.push_back(testing::random_sample(h, {0}, d_w, d_h, rng));
  }
  return out;
}

std::vector<const MentionSample*> pointers(
    const std::vector<MentionSample>& s) {
  std::vector<const MentionSample*> out;
  for (const auto& x : s) out.push_back(&x);
  return out;
}

TEST(EncodeTest, ZeroParametersGiveZeroEmbeddings) {
  std::mt19937_64 rng(1);
  const auto s = random_samples(4, 3, 2, rng);
  const auto enc = EncoderParams::zeros(3, 2, 2, 6, 4);
  EXPECT_EQ(encode(enc, pointers(s)).Z, Eigen::MatrixXd::Zero(4, 4));
}

TEST(EncodeTest, IdentityLayerReturnsTheConcatenation) {
  std::mt19937_64 rng(2);
  const auto s = random_samples(3, 2, 3, rng);
  EncoderParams enc = EncoderParams::zeros(2, 3, 0, 1, 5);
  enc.attn_w = Eigen::Vector3d(0.5, -1.0, 2.0);
  enc.layers[0].W = Eigen::MatrixXd::Identity(5, 5);
  const Eigen::MatrixXd Z = encode(enc, pointers(s)).Z;
  for (int i = 0; i < 3; ++i) {
    Eigen::VectorXd expected(5);
    expected << average_mention(s[i].mention),
        attention_pool(s[i].context, enc.attn_w);
    EXPECT_EQ(Z.row(i).transpose(), expected);
  }
}

// Straight-line forward pass with explicit loops, sharing no code with the
// library beyond the parameter container.
Eigen::VectorXd reference_encode(const EncoderParams& p,
                                 const MentionSample& s) {
  std::vector<double> x;
  for (Eigen::Index k = 0; k < s.mention.cols(); ++k) {
    double sum = 0.0;
    for (Eigen::Index t = 0; t < s.mention.rows(); ++t) sum += s.mention(t, k);
    x.push_back(sum / static_cast<double>(s.mention.rows()));
  }
  std::vector<double> score(static_cast<std::size_t>(s.context.rows()));
  double mx = -INFINITY;
  for (Eigen::Index t = 0; t < s.context.rows(); ++t) {
    double a = 0.0;
    for (Eigen::Index k = 0; k < s.context.cols(); ++k) {
      a += p.attn_w(k) * std::tanh(s.context(t, k));
    }
    score[static_cast<std::size_t>(t)] = a;
    mx = std::max(mx, a);
  }
  double denom = 0.0;
  for (double& a : score) denom += (a = std::exp(a - mx));
  for (Eigen::Index k = 0; k < s.context.cols(); ++k) {
    double sum = 0.0;
    for (Eigen::Index t = 0; t < s.context.rows(); ++t) {
      sum += score[static_cast<std::size_t>(t)] / denom * s.context(t, k);
    }
    x.push_back(sum);
  }
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const DenseLayer& layer = p.layers[l];
    std::vector<double> y;
    for (Eigen::Index r = 0; r < layer.W.rows(); ++r) {
      double v = layer.b(r);
      for (Eigen::Index c = 0; c < layer.W.cols(); ++c) {
        v += layer.W(r, c) * x[static_cast<std::size_t>(c)];
      }
      y.push_back(l + 1 < p.layers.size() ? std::max(v, 0.0) : v);
    }
    x = std::move(y);
  }
  return Eigen::Map<Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
}

TEST(EncodeTest, MatchesStraightLineRecomputation) {
  std::mt19937_64 rng(3);
  const auto s = random_samples(4, 3, 4, rng);
  EncoderParams enc = EncoderParams::init(3, 4, 2, 7, 5, rng);
  for (auto& layer : enc.layers) layer.b = random_matrix(layer.b.size(), 1, rng);
  const EncodedBatch out = encode(enc, pointers(s));
  ASSERT_EQ(out.tape.size(), 4u);
  for (int i = 0; i < 4; ++i) {
    const Eigen::VectorXd ref = reference_encode(enc, s[i]);
    EXPECT_LE((out.Z.row(i).transpose() - ref).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(EncodeTest, IsDeterministicAndChecksDimensions) {
  std::mt19937_64 rng(4);
  const auto s = random_samples(3, 3, 4, rng);
  const EncoderParams enc = EncoderParams::init(3, 4, 1, 5, 2, rng);
  EXPECT_EQ(encode(enc, pointers(s)).Z, encode(enc, pointers(s)).Z);
  const EncoderParams wrong = EncoderParams::init(2, 4, 1, 5, 2, rng);
  EXPECT_THROW(encode(wrong, pointers(s)), ValidationError);
}

TEST(EncodeBackwardTest, ZeroUpstreamGradientGivesZeroGradients) {
  std::mt19937_64 rng(5);
  const auto s = random_samples(3, 3, 4, rng);
  const EncoderParams enc = EncoderParams::init(3, 4, 2, 5, 2, rng);
  const EncodedBatch out = encode(enc, pointers(s));
  const EncoderGradient g = encode_backward(enc, out, Eigen::MatrixXd::Zero(3, 2));
  EXPECT_EQ(g.params.attn_w, Eigen::VectorXd::Zero(4));
  for (const auto& layer : g.params.layers) {
    EXPECT_EQ(layer.W.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(layer.b.cwiseAbs().maxCoeff(), 0.0);
  }
  EXPECT_THROW(encode_backward(enc, out, Eigen::MatrixXd::Zero(2, 2)),
               ValidationError);
}

TEST(EncodeBackwardTest, LinearLayerWithSumLossGivesOuterProductWithOnes) {
  std::mt19937_64 rng(6);
  const auto s = random_samples(4, 2, 3, rng);
  const EncoderParams enc = EncoderParams::init(2, 3, 0, 1, 3, rng);
  const EncodedBatch out = encode(enc, pointers(s));
  const EncoderGradient g =
      encode_backward(enc, out, Eigen::MatrixXd::Ones(4, 3));
  Eigen::VectorXd features = Eigen::VectorXd::Zero(5);
  for (int i = 0; i < 4; ++i) {
    Eigen::VectorXd r(5);
    r << average_mention(s[i].mention), attention_pool(s[i].context, enc.attn_w);
    features += r;
  }
  const Eigen::MatrixXd expected = Eigen::VectorXd::Ones(3) * features.transpose();
  EXPECT_LE((g.params.layers[0].W - expected).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(g.params.layers[0].b, Eigen::VectorXd::Constant(3, 4.0));
}

TEST(EncodeBackwardTest, DeadReluUnitPassesNoGradient) {
  std::mt19937_64 rng(7);
  const auto s = random_samples(3, 2, 2, rng);
  EncoderParams enc = EncoderParams::init(2, 2, 1, 3, 2, rng);
  // Hidden unit 1 has zero input weights and a negative bias: always dead.
  enc.layers[0].W.row(1).setZero();
  enc.layers[0].b(1) = -1.0;
  const EncodedBatch out = encode(enc, pointers(s));
  const EncoderGradient g =
      encode_backward(enc, out, random_matrix(3, 2, rng));
  EXPECT_EQ(g.params.layers[0].W.row(1).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(g.params.layers[0].b(1), 0.0);
  EXPECT_GT(g.params.layers[0].W.row(0).cwiseAbs().maxCoeff() +
                g.params.layers[0].W.row(2).cwiseAbs().maxCoeff(),
            0.0);
}

TEST(EncodeBackwardTest, MatchesFiniteDifferences) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    std::mt19937_64 rng(seed);
    const auto s = random_samples(4, 3, 3, rng);
    EncoderParams enc = EncoderParams::init(3, 3, 2, 5, 4, rng);
    for (auto& layer : enc.layers) {
      layer.b = random_matrix(layer.b.size(), 1, rng, 0.1);
    }
    // Loss: a fixed random linear functional of Z.
    const Eigen::MatrixXd R = random_matrix(4, 4, rng);
    ModelParams model;
    model.encoder = enc;
    model.classifier = ClassifierParams::zeros(1, 4);
    const auto loss = [&](const Eigen::VectorXd& theta) {
      ModelParams m = model;
      unflatten(theta, m);
      return encode(m.encoder, pointers(s)).Z.cwiseProduct(R).sum();
    };
    const EncodedBatch out = encode(enc, pointers(s));
    ModelParams analytic = zeros_like(model);
    analytic.encoder = encode_backward(enc, out, R).params;
    const Eigen::VectorXd numeric =
        testing::numeric_gradient(loss, flatten(model));
    EXPECT_LE(testing::relative_error(flatten(analytic), numeric), 1e-5)
        << "seed " << seed;
  }
}

}  // namespace
}  // namespace clsc
