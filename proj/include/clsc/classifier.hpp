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

#pragma once

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "clsc/encoder.hpp"
#include "clsc/error.hpp"
#include "clsc/types.hpp"

namespace clsc {

struct ClassifierParams {
  Eigen::MatrixXd W;  // K x d_z
  Eigen::VectorXd b;  // K

  static ClassifierParams zeros(Eigen::Index K, Eigen::Index d_z) {
    return {Eigen::MatrixXd::Zero(K, d_z), Eigen::VectorXd::Zero(K)};
  }

  static ClassifierParams init(Eigen::Index K, Eigen::Index d_z,
                               std::mt19937_64& rng) {
    ClassifierParams p = zeros(K, d_z);
    const double bound = 1.0 / std::sqrt(static_cast<double>(d_z));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (Eigen::Index j = 0; j < p.W.cols(); ++j)
      for (Eigen::Index i = 0; i < p.W.rows(); ++i) p.W(i, j) = u(rng);
    return p;
  }
};

inline Eigen::VectorXd classify(const ClassifierParams& p,
                                const Eigen::VectorXd& z) {
  if (z.size() != p.W.cols()) {
    fail_validation("classify: z has ", z.size(), " entries, expected ",
                    p.W.cols());
  }
  return softmax(p.W * z + p.b);
}

inline TypeId predict(const ClassifierParams& p, const Eigen::VectorXd& z) {
  Eigen::Index best = 0;
  (p.W * z + p.b).maxCoeff(&best);
  return static_cast<TypeId>(best);
}

struct SupervisionGradient {
  double loss = 0.0;
  ClassifierParams params;  // gradients
  Eigen::MatrixXd dZ;
  std::size_t clean_count = 0;
};

// Cross entropy against the one-hot terminal type, averaged over the clean
// rows only. Noisy rows get zero gradient; an all-noisy batch yields 0.
inline SupervisionGradient supervision_backward(const ClassifierParams& p,
                                                const Eigen::MatrixXd& Z,
                                                const Batch& batch) {
  if (Z.rows() != static_cast<Eigen::Index>(batch.size()) ||
      Z.cols() != p.W.cols()) {
    fail_validation("supervision_loss: Z is ", Z.rows(), "x", Z.cols(),
                    ", expected ", batch.size(), "x", p.W.cols());
  }
  SupervisionGradient out;
  out.params = ClassifierParams::zeros(p.W.rows(), p.W.cols());
  out.dZ = Eigen::MatrixXd::Zero(Z.rows(), Z.cols());
  out.clean_count = batch.clean_count();
  if (out.clean_count == 0) return out;
  const double inv = 1.0 / static_cast<double>(out.clean_count);
  for (Eigen::Index i = 0; i < Z.rows(); ++i) {
    if (!batch.clean[i]) continue;
    const auto y = static_cast<Eigen::Index>(*batch.label[i]);
    const Eigen::VectorXd z = Z.row(i).transpose();
    const Eigen::VectorXd logits = p.W * z + p.b;
    const double mx = logits.maxCoeff();
    const double lse = mx + std::log((logits.array() - mx).exp().sum());
    out.loss += (lse - logits(y)) * inv;
    Eigen::VectorXd d = (logits.array() - lse).exp().matrix();
    d(y) -= 1.0;
    d *= inv;
    out.params.W.noalias() += d * z.transpose();
    out.params.b += d;
    out.dZ.row(i) = (p.W.transpose() * d).transpose();
  }
  return out;
}

inline double supervision_loss(const ClassifierParams& p,
                               const Eigen::MatrixXd& Z, const Batch& batch) {
  return supervision_backward(p, Z, batch).loss;
}

inline double total_loss(double supervision, double clsc, double lambda_clsc,
                         double lambda_l2 = 0.0, double weight_norm_sq = 0.0) {
  return supervision + lambda_clsc * clsc + lambda_l2 * weight_norm_sq;
}

}  // namespace clsc
