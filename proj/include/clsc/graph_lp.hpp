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

// Batch similarity graph and candidate-masked label propagation.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

#include <Eigen/Dense>

#include "clsc/error.hpp"

namespace clsc {

struct GraphOptions {
  // Exclude self-transitions from H.
  bool zero_diagonal = false;
};

struct SimilarityGraph {
  Eigen::MatrixXd logits;  // z_i . z_j / sqrt(d_z)
  Eigen::MatrixXd H;       // row-stochastic transition matrix
  GraphOptions options;
};

// Row-wise softmax with max subtraction. With zero_diagonal, entry (i, i)
// is excluded from row i.
inline Eigen::MatrixXd row_softmax(const Eigen::MatrixXd& logits,
                                   bool zero_diagonal = false) {
  const Eigen::Index n = logits.rows();
  Eigen::MatrixXd out(n, logits.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < logits.cols(); ++j) {
      if (zero_diagonal && i == j) continue;
      mx = std::max(mx, logits(i, j));
    }
    double sum = 0.0;
    for (Eigen::Index j = 0; j < logits.cols(); ++j) {
      const double e =
          (zero_diagonal && i == j) ? 0.0 : std::exp(logits(i, j) - mx);
      out(i, j) = e;
      sum += e;
    }
    out.row(i) /= sum;
  }
  return out;
}

inline SimilarityGraph build_graph(const Eigen::MatrixXd& Z,
                                   GraphOptions options = {}) {
  if (Z.rows() < 2) fail_validation("build_graph: need B >= 2 rows");
  if (Z.cols() < 1) fail_validation("build_graph: need d_z >= 1");
  if (!Z.allFinite()) fail_numerical("build_graph: non-finite embeddings");
  SimilarityGraph g;
  g.options = options;
  const double scale = 1.0 / std::sqrt(static_cast<double>(Z.cols()));
  g.logits.noalias() = Z * Z.transpose();
  g.logits *= scale;
  g.H = row_softmax(g.logits, options.zero_diagonal);
  return g;
}

// dL/dZ given dL/dH, through the row softmax and the scaled Gram matrix.
inline Eigen::MatrixXd graph_backward(const SimilarityGraph& g,
                                      const Eigen::MatrixXd& Z,
                                      const Eigen::MatrixXd& dH) {
  const Eigen::VectorXd row_dot = (g.H.array() * dH.array()).rowwise().sum();
  Eigen::MatrixXd d_logits =
      (g.H.array() * (dH.colwise() - row_dot).array()).matrix();
  const double scale = 1.0 / std::sqrt(static_cast<double>(Z.cols()));
  Eigen::MatrixXd sym = d_logits + d_logits.transpose();
  Eigen::MatrixXd dZ;
  dZ.noalias() = sym * Z;
  return dZ * scale;
}

struct PropagationResult {
  Eigen::MatrixXd Phi;
  int iterations = 0;
  bool converged = false;
  double residual = 0.0;
};

// Phi_ij <- Phi_ij M_ij / sum_k Phi_ik M_ik, in place.
inline void clamp_to_mask(Eigen::MatrixXd& Phi, const Eigen::MatrixXd& M) {
  Phi.array() *= M.array();
  for (Eigen::Index i = 0; i < Phi.rows(); ++i) {
    const double s = Phi.row(i).sum();
    if (!(s > 0.0) || !std::isfinite(s)) {
      fail_numerical("label propagation: row ", i,
                     " has no probability mass on its candidate types");
    }
    Phi.row(i) /= s;
  }
}

struct PropagateOptions {
  int max_steps = 200;
  double tol = 1e-10;
  std::uint64_t seed = 0;
};

inline PropagationResult propagate(const Eigen::MatrixXd& H,
                                   const Eigen::MatrixXd& M,
                                   const PropagateOptions& opt) {
  if (H.rows() != H.cols() || M.rows() != H.rows()) {
    fail_validation("propagate: H is ", H.rows(), "x", H.cols(), ", M is ",
                    M.rows(), "x", M.cols());
  }
  if (opt.max_steps < 1) fail_validation("propagate: S_lp must be >= 1");
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    if (M.row(i).maxCoeff() <= 0.0) {
      fail_validation("propagate: mask row ", i, " has no candidate type");
    }
  }
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PropagationResult r;
  r.Phi.resize(M.rows(), M.cols());
  for (Eigen::Index i = 0; i < M.rows(); ++i)
    for (Eigen::Index k = 0; k < M.cols(); ++k) r.Phi(i, k) = 1.0 - u(rng);
  clamp_to_mask(r.Phi, M);

  Eigen::MatrixXd next(M.rows(), M.cols());
  for (int step = 1; step <= opt.max_steps; ++step) {
    next.noalias() = H * r.Phi;
    clamp_to_mask(next, M);
    r.residual = (next - r.Phi).cwiseAbs().maxCoeff();
    r.Phi.swap(next);
    r.iterations = step;
    if (r.residual < opt.tol) {
      r.converged = true;
      break;
    }
  }
  return r;
}

inline PropagationResult propagate(const SimilarityGraph& g,
                                   const Eigen::MatrixXd& M, int lp_steps,
                                   std::uint64_t seed, double tol = 1e-10) {
  return propagate(g.H, M, PropagateOptions{lp_steps, tol, seed});
}

}  // namespace clsc
