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

// Compact-clustering regularizer.
//
// Given the propagated label posterior Phi (B x K) and the transition
// matrix H of the batch graph:
//
//   T_ij   = sum_k Phi_ik Phi_jk / m_k,   m_k = sum_b Phi_bk
//   E      = Phi Phi^T
//   H^(1)  = H,   H^(s) = (H o E) H^(s-1)
//   L      = -1/(S_m B^2) sum_s sum_ij T_ij log(H^(s)_ij + eps)
//
// Phi is treated as a constant: gradients reach Z only through H.

#pragma once

#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "clsc/error.hpp"
#include "clsc/graph_lp.hpp"

namespace clsc {

inline constexpr double kLogEpsilon = 1e-12;

inline Eigen::MatrixXd target_matrix(const Eigen::MatrixXd& Phi) {
  const Eigen::VectorXd mass = Phi.colwise().sum().transpose();
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(mass.size());
  for (Eigen::Index k = 0; k < mass.size(); ++k) {
    if (mass(k) > 0.0) inv(k) = 1.0 / mass(k);
  }
  Eigen::MatrixXd T;
  T.noalias() = Phi * inv.asDiagonal() * Phi.transpose();
  return T;
}

inline Eigen::MatrixXd agreement_mask(const Eigen::MatrixXd& Phi) {
  Eigen::MatrixXd E;
  E.noalias() = Phi * Phi.transpose();
  return E;
}

inline std::vector<Eigen::MatrixXd> markov_powers(const Eigen::MatrixXd& H,
                                                  const Eigen::MatrixXd& E,
                                                  int markov_steps) {
  if (markov_steps < 1) fail_validation("markov_powers: S_m must be >= 1");
  if (E.rows() != H.rows() || E.cols() != H.cols()) {
    fail_validation("markov_powers: H and E shapes differ");
  }
  std::vector<Eigen::MatrixXd> powers;
  powers.reserve(static_cast<std::size_t>(markov_steps));
  powers.push_back(H);
  const Eigen::MatrixXd gated = H.cwiseProduct(E);
  for (int s = 2; s <= markov_steps; ++s) {
    Eigen::MatrixXd next;
    next.noalias() = gated * powers.back();
    powers.push_back(std::move(next));
  }
  return powers;
}

namespace detail {

// -sum_ij T_ij log(P_ij + eps), skipping T_ij == 0.
inline double cross_entropy_sum(const Eigen::MatrixXd& T,
                                const Eigen::MatrixXd& P) {
  double acc = 0.0;
  for (Eigen::Index j = 0; j < T.cols(); ++j) {
    for (Eigen::Index i = 0; i < T.rows(); ++i) {
      const double t = T(i, j);
      if (t == 0.0) continue;
      acc -= t * std::log(P(i, j) + kLogEpsilon);
    }
  }
  return acc;
}

}  // namespace detail

// Single-transition cross entropy between T and H.
inline double one_step_loss(const Eigen::MatrixXd& T,
                            const Eigen::MatrixXd& H) {
  if (T.rows() != H.rows() || T.cols() != H.cols()) {
    fail_validation("one_step_loss: shape mismatch");
  }
  const double B = static_cast<double>(T.rows());
  return detail::cross_entropy_sum(T, H) / (B * B);
}

inline double clsc_loss(const Eigen::MatrixXd& T,
                        std::span<const Eigen::MatrixXd> powers) {
  if (powers.empty()) fail_validation("clsc_loss: no transition matrices");
  const double B = static_cast<double>(T.rows());
  double acc = 0.0;
  for (const auto& P : powers) {
    if (P.rows() != T.rows() || P.cols() != T.cols()) {
      fail_validation("clsc_loss: shape mismatch");
    }
    acc += detail::cross_entropy_sum(T, P) / (B * B);
  }
  return acc / static_cast<double>(powers.size());
}

struct ClscTerms {
  Eigen::MatrixXd T;
  Eigen::MatrixXd E;
  std::vector<Eigen::MatrixXd> powers;
  double loss = 0.0;
};

inline ClscTerms clsc_terms(const Eigen::MatrixXd& H, const Eigen::MatrixXd& Phi,
                            int markov_steps) {
  if (Phi.rows() != H.rows()) {
    fail_validation("clsc_terms: Phi has ", Phi.rows(), " rows, H has ",
                    H.rows());
  }
  ClscTerms terms;
  terms.T = target_matrix(Phi);
  terms.E = agreement_mask(Phi);
  terms.powers = markov_powers(H, terms.E, markov_steps);
  terms.loss = clsc_loss(terms.T, terms.powers);
  return terms;
}

// dL/dH for fixed T and E, through every H^(s).
inline Eigen::MatrixXd clsc_backward_transition(const ClscTerms& terms,
                                                const Eigen::MatrixXd& H) {
  const auto S = static_cast<int>(terms.powers.size());
  const double B = static_cast<double>(H.rows());
  const double c = 1.0 / (static_cast<double>(S) * B * B);
  auto direct = [&](int s) {
    const Eigen::MatrixXd& P = terms.powers[static_cast<std::size_t>(s - 1)];
    Eigen::MatrixXd d(P.rows(), P.cols());
    for (Eigen::Index j = 0; j < P.cols(); ++j) {
      for (Eigen::Index i = 0; i < P.rows(); ++i) {
        const double t = terms.T(i, j);
        d(i, j) = t == 0.0 ? 0.0 : -c * t / (P(i, j) + kLogEpsilon);
      }
    }
    return d;
  };
  const Eigen::MatrixXd gated = H.cwiseProduct(terms.E);
  Eigen::MatrixXd d_gated = Eigen::MatrixXd::Zero(H.rows(), H.cols());
  Eigen::MatrixXd adj = direct(S);
  for (int s = S; s >= 2; --s) {
    d_gated.noalias() +=
        adj * terms.powers[static_cast<std::size_t>(s - 2)].transpose();
    Eigen::MatrixXd carried;
    carried.noalias() = gated.transpose() * adj;
    adj = carried + direct(s - 1);
  }
  return adj + d_gated.cwiseProduct(terms.E);
}

struct ClscGradient {
  double loss = 0.0;
  Eigen::MatrixXd dZ;
};

inline ClscGradient clsc_backward(const Eigen::MatrixXd& Z,
                                  const Eigen::MatrixXd& Phi, int markov_steps,
                                  GraphOptions options = {}) {
  if (Phi.rows() != Z.rows()) {
    fail_validation("clsc_backward: Z has ", Z.rows(), " rows, Phi has ",
                    Phi.rows());
  }
  const SimilarityGraph g = build_graph(Z, options);
  const ClscTerms terms = clsc_terms(g.H, Phi, markov_steps);
  ClscGradient out;
  out.loss = terms.loss;
  out.dZ = graph_backward(g, Z, clsc_backward_transition(terms, g.H));
  return out;
}

}  // namespace clsc
