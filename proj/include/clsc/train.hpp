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

// Training loop.
//
// Each step encodes a batch, builds its similarity graph, propagates the
// candidate labels over it, and minimizes
//
//   L = L_sup(clean rows) + lambda_clsc * L_clsc(all rows) + lambda_l2 |W|^2
//
// with the propagated posterior held fixed.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "clsc/classifier.hpp"
#include "clsc/clsc_loss.hpp"
#include "clsc/dataset_io.hpp"
#include "clsc/encoder.hpp"
#include "clsc/error.hpp"
#include "clsc/graph_lp.hpp"
#include "clsc/metrics.hpp"
#include "clsc/model.hpp"
#include "clsc/types.hpp"

namespace clsc {

struct TrainConfig {
  double lr = 0.0006;
  std::size_t batch_size = 64;
  int lp_steps = 200;
  int markov_steps = 8;
  double lambda_clsc = 2.0;
  double lambda_l2 = 0.0;
  int epochs = 30;
  std::uint64_t seed = 1;
  // Encoder shape.
  std::size_t hidden_layers = 2;
  Eigen::Index hidden_width = 64;
  Eigen::Index d_z = 16;
  // Graph and propagation.
  bool zero_diagonal = false;
  double lp_tol = 1e-10;

  void validate() const {
    if (!(lr > 0.0) || !std::isfinite(lr)) fail_validation("lr must be > 0");
    if (batch_size < 2) fail_validation("batch size must be >= 2");
    if (lp_steps < 1) fail_validation("S_lp must be >= 1");
    if (markov_steps < 1) fail_validation("S_m must be >= 1");
    if (!(lambda_clsc >= 0.0)) fail_validation("lambda_clsc must be >= 0");
    if (!(lambda_l2 >= 0.0)) fail_validation("lambda_l2 must be >= 0");
    if (epochs < 0) fail_validation("epochs must be >= 0");
    if (hidden_width < 1 || d_z < 1) {
      fail_validation("hidden width and d_z must be >= 1");
    }
  }
};

inline ModelParams init_model(const TypeHierarchy& h, Eigen::Index d_w,
                              Eigen::Index d_h, const TrainConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  ModelParams p;
  p.encoder = EncoderParams::init(d_w, d_h, cfg.hidden_layers,
                                  cfg.hidden_width, cfg.d_z, rng);
  p.classifier = ClassifierParams::init(static_cast<Eigen::Index>(h.size()),
                                        cfg.d_z, rng);
  return p;
}

struct ObjectiveTerms {
  double supervision = 0.0;
  double clsc = 0.0;
  double l2 = 0.0;
  double total = 0.0;
};

struct HeadGradient {
  ObjectiveTerms terms;       // l2 left at zero
  ClassifierParams classifier;
  Eigen::MatrixXd dZ;         // total gradient w.r.t. the embeddings
};

// Supervision and compact-clustering terms as a function of the embeddings
// Z, for a fixed propagated posterior. Phi may be empty when lambda_clsc
// is 0.
inline HeadGradient head_objective(const ClassifierParams& classifier,
                                   const Eigen::MatrixXd& Z,
                                   const Batch& batch,
                                   const Eigen::MatrixXd& Phi,
                                   const TrainConfig& cfg) {
  HeadGradient out;
  SupervisionGradient sup = supervision_backward(classifier, Z, batch);
  out.terms.supervision = sup.loss;
  out.classifier = std::move(sup.params);
  out.dZ = std::move(sup.dZ);
  if (cfg.lambda_clsc > 0.0) {
    const ClscGradient reg = clsc_backward(Z, Phi, cfg.markov_steps,
                                           GraphOptions{cfg.zero_diagonal});
    out.terms.clsc = reg.loss;
    out.dZ += cfg.lambda_clsc * reg.dZ;
  }
  out.terms.total = total_loss(out.terms.supervision, out.terms.clsc,
                               cfg.lambda_clsc);
  return out;
}

struct ObjectiveGradient {
  ObjectiveTerms terms;
  ModelParams grad;
  Eigen::MatrixXd dZ;
};

// Value and gradient of the full objective on one batch, given the
// batch's encoding under `params`.
inline ObjectiveGradient objective(const ModelParams& params,
                                   const Batch& batch,
                                   const EncodedBatch& enc,
                                   const Eigen::MatrixXd& Phi,
                                   const TrainConfig& cfg) {
  HeadGradient head = head_objective(params.classifier, enc.Z, batch, Phi, cfg);
  ObjectiveGradient out;
  out.terms = head.terms;
  out.terms.l2 = cfg.lambda_l2 > 0.0 ? weight_norm_sq(params) : 0.0;
  out.terms.total = total_loss(out.terms.supervision, out.terms.clsc,
                               cfg.lambda_clsc, cfg.lambda_l2, out.terms.l2);
  out.grad.encoder = encode_backward(params.encoder, enc, head.dZ).params;
  out.grad.classifier = std::move(head.classifier);
  out.dZ = std::move(head.dZ);
  add_weight_decay(params, out.grad, cfg.lambda_l2);
  return out;
}

inline ObjectiveGradient objective(const ModelParams& params, Batch& batch,
                                   const Eigen::MatrixXd& Phi,
                                   const TrainConfig& cfg) {
  const EncodedBatch enc = encode(params.encoder, batch);
  return objective(params, batch, enc, Phi, cfg);
}

// Label posterior for the current embeddings of a batch.
inline PropagationResult batch_posterior(const Batch& batch,
                                         const TrainConfig& cfg,
                                         std::uint64_t seed) {
  const SimilarityGraph g =
      build_graph(batch.Z, GraphOptions{cfg.zero_diagonal});
  return propagate(g.H, batch.mask,
                   PropagateOptions{cfg.lp_steps, cfg.lp_tol, seed});
}

struct StepResult {
  ObjectiveTerms terms;
  int lp_iterations = 0;
};

inline StepResult train_step(ModelParams& params, AdamState& adam,
                             Batch& batch, const TrainConfig& cfg,
                             std::uint64_t lp_seed) {
  StepResult r;
  const EncodedBatch enc = encode(params.encoder, batch);
  Eigen::MatrixXd Phi;
  if (cfg.lambda_clsc > 0.0) {
    PropagationResult lp = batch_posterior(batch, cfg, lp_seed);
    r.lp_iterations = lp.iterations;
    Phi = std::move(lp.Phi);
  }
  const ObjectiveGradient g = objective(params, batch, enc, Phi, cfg);
  r.terms = g.terms;
  if (!std::isfinite(r.terms.total)) {
    fail_numerical("non-finite loss (sup=", r.terms.supervision,
                   ", clsc=", r.terms.clsc, ")");
  }
  adam_step(adam, params, g.grad, cfg.lr);
  return r;
}

inline Eigen::MatrixXd embed(const EncoderParams& enc,
                             std::span<const MentionSample* const> samples) {
  Eigen::MatrixXd Z(static_cast<Eigen::Index>(samples.size()),
                    enc.output_dim());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    Z.row(static_cast<Eigen::Index>(i)) =
        encode_sample(enc, *samples[i]).transpose();
  }
  return Z;
}

inline std::vector<TypeId> predict_all(
    const ModelParams& params, std::span<const MentionSample* const> samples) {
  std::vector<TypeId> out;
  out.reserve(samples.size());
  for (const MentionSample* s : samples) {
    out.push_back(
        predict(params.classifier, encode_sample(params.encoder, *s)));
  }
  return out;
}

// Scores predictions against each sample's gold (or, without a gold, the
// union of its candidate paths).
inline EvalResult evaluate_model(
    const TypeHierarchy& h, const ModelParams& params,
    std::span<const MentionSample* const> samples) {
  std::vector<TypeSet> P, G;
  for (const MentionSample* s : samples) {
    P.push_back(expand_path(
        h, predict(params.classifier, encode_sample(params.encoder, *s))));
    G.push_back(s->gold ? expand_path(h, *s->gold) : s->candidates);
  }
  return evaluate_sets(P, G);
}

struct EpochRecord {
  int epoch = 0;
  double supervision = 0.0;  // mean over steps
  double clsc = 0.0;
  double total = 0.0;
  std::optional<EvalResult> dev;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  ModelParams final_model;
  ModelParams best_model;  // best dev strict accuracy, else final
  int best_epoch = 0;
  std::size_t steps = 0;
};

// Seeds for the per-step propagation initialization.
inline std::uint64_t step_seed(std::uint64_t seed, std::size_t step) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(step), 0x6c70u};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

inline TrainReport train(std::span<const MentionSample* const> train_set,
                         std::span<const MentionSample* const> dev_set,
                         const TypeHierarchy& h, Eigen::Index d_w,
                         Eigen::Index d_h, const TrainConfig& cfg) {
  cfg.validate();
  if (train_set.empty()) fail_validation("training set is empty");
  ModelParams params = init_model(h, d_w, d_h, cfg);
  AdamState adam = AdamState::for_model(params);
  std::mt19937_64 shuffle_rng(cfg.seed ^ 0x5bd1e995ULL);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainReport report;
  report.best_model = params;
  double best_dev = -1.0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    EpochRecord rec;
    rec.epoch = epoch;
    std::size_t n_steps = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      if (end - start < 2) break;
      std::vector<const MentionSample*> members;
      for (std::size_t i = start; i < end; ++i) {
        members.push_back(train_set[order[i]]);
      }
      Batch batch = build_batch(h, members, cfg.d_z);
      const StepResult step = train_step(params, adam, batch, cfg,
                                         step_seed(cfg.seed, report.steps));
      ++report.steps;
      ++n_steps;
      rec.supervision += step.terms.supervision;
      rec.clsc += step.terms.clsc;
      rec.total += step.terms.total;
    }
    if (n_steps > 0) {
      rec.supervision /= static_cast<double>(n_steps);
      rec.clsc /= static_cast<double>(n_steps);
      rec.total /= static_cast<double>(n_steps);
    }
    if (!dev_set.empty()) {
      rec.dev = evaluate_model(h, params, dev_set);
      if (rec.dev->strict_acc > best_dev) {
        best_dev = rec.dev->strict_acc;
        report.best_model = params;
        report.best_epoch = epoch;
      }
    }
    report.epochs.push_back(rec);
  }
  report.final_model = params;
  if (dev_set.empty()) {
    report.best_model = params;
    report.best_epoch = cfg.epochs;
  }
  return report;
}

inline TrainReport train(const Dataset& ds, const TrainConfig& cfg) {
  const auto train_set = ds.split(Split::kTrain);
  const auto dev_set = ds.split(Split::kDev);
  return train(train_set, dev_set, ds.hierarchy, ds.d_w, ds.d_h, cfg);
}

}  // namespace clsc
