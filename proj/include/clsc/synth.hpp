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

// Synthetic distantly-supervised typing data.
//
// Every terminal type owns a context center and several "entities" (modes)
// whose mention centers scatter around a type-level mention center. A
// mention draws its tokens around its entity's mention center; a fraction
// of its context tokens carry the type's context signature, the rest are
// filler.
//
// Noise is entity-level, as with a knowledge base that lists several type
// paths for one entity: each entity has a fixed distractor type, and each
// mention of it receives the distractor's path with a per-entity
// probability. A share of the noise mass (noise_concentration) sits on
// one ambiguous entity per type; the rest is spread over the others. The
// per-mention noise probability averages to noise_rate, so the number of
// noisy training mentions is Binomial(n_samples, noise_rate).
//
// Dev and test mentions are always clean.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "clsc/dataset_io.hpp"
#include "clsc/error.hpp"
#include "clsc/types.hpp"

namespace clsc {

struct SynthConfig {
  std::size_t n_types = 4;    // terminal types
  std::size_t n_parents = 2;  // top-level types (depth >= 2)
  std::size_t depth = 2;      // length of a terminal type path
  std::size_t n_samples = 2000;
  std::size_t n_dev = 400;
  std::size_t n_test = 2000;
  double noise_rate = 0.3;
  double noise_concentration = 1.0;
  double second_distractor_rate = 0.2;
  std::size_t modes_per_type = 4;
  double type_separation = 1.0;  // scale of type centers
  double mode_spread = 2.0;      // entity center offset from its type
  double cluster_spread = 2.5;   // token noise around an entity
  double context_signal = 0.3;   // share of informative context tokens
  std::size_t mention_tokens = 3;  // max tokens per mention
  std::size_t context_tokens = 6;
  Eigen::Index d_w = 8;
  Eigen::Index d_h = 8;
  std::uint64_t seed = 1;

  void validate() const {
    if (n_types < 2) fail_validation("synth: n_types must be >= 2");
    if (depth < 1) fail_validation("synth: depth must be >= 1");
    if (depth >= 2 && n_parents < 1) {
      fail_validation("synth: n_parents must be >= 1");
    }
    if (!(noise_rate >= 0.0 && noise_rate <= 1.0)) {
      fail_validation("synth: noise_rate must lie in [0, 1]");
    }
    if (!(noise_concentration >= 0.0 && noise_concentration <= 1.0)) {
      fail_validation("synth: noise_concentration must lie in [0, 1]");
    }
    if (!(second_distractor_rate >= 0.0 && second_distractor_rate <= 1.0)) {
      fail_validation("synth: second_distractor_rate must lie in [0, 1]");
    }
    if (!(context_signal >= 0.0 && context_signal <= 1.0)) {
      fail_validation("synth: context_signal must lie in [0, 1]");
    }
    if (modes_per_type < 1 || mention_tokens < 1 || context_tokens < 1) {
      fail_validation("synth: modes and token counts must be >= 1");
    }
    if (d_w < 1 || d_h < 1) fail_validation("synth: d_w, d_h must be >= 1");
    if (n_samples < 2) fail_validation("synth: n_samples must be >= 2");
  }
};

// Terminal types are returned in `leaves`, in creation order.
inline TypeHierarchy synth_hierarchy(const SynthConfig& cfg,
                                     std::vector<TypeId>* leaves = nullptr) {
  std::vector<std::string> paths;
  std::vector<std::string> level;  // inner nodes of the current level
  if (cfg.depth >= 2) {
    for (std::size_t i = 0; i < cfg.n_parents; ++i) {
      level.push_back("/p" + std::to_string(i));
    }
    paths.insert(paths.end(), level.begin(), level.end());
    for (std::size_t d = 2; d < cfg.depth; ++d) {
      std::vector<std::string> next;
      for (std::size_t i = 0; i < 2 * level.size(); ++i) {
        next.push_back(level[i / 2] + "/g" + std::to_string(i));
      }
      paths.insert(paths.end(), next.begin(), next.end());
      level = std::move(next);
    }
    if (cfg.n_types < level.size()) {
      fail_validation("synth: n_types (", cfg.n_types,
                      ") is smaller than the number of inner nodes (",
                      level.size(), ")");
    }
  }
  std::vector<std::string> leaf_paths;
  for (std::size_t j = 0; j < cfg.n_types; ++j) {
    const std::string prefix = level.empty() ? "" : level[j % level.size()];
    leaf_paths.push_back(prefix + "/t" + std::to_string(j));
  }
  const std::size_t first_leaf = paths.size();
  paths.insert(paths.end(), leaf_paths.begin(), leaf_paths.end());
  if (leaves) {
    leaves->clear();
    for (std::size_t j = 0; j < cfg.n_types; ++j) {
      leaves->push_back(first_leaf + j);
    }
  }
  return TypeHierarchy::from_paths(paths);
}

inline Dataset generate(const SynthConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto gaussian = [&](Eigen::Index n, double scale) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = scale * normal(rng);
    return v;
  };
  auto pick = [&](std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  };

  Dataset ds;
  std::vector<TypeId> leaves;
  ds.hierarchy = synth_hierarchy(cfg, &leaves);
  ds.d_w = cfg.d_w;
  ds.d_h = cfg.d_h;
  const std::size_t K = leaves.size();
  const std::size_t n_modes = cfg.modes_per_type;

  // Type and entity geometry.
  std::vector<Eigen::VectorXd> mention_center(K), context_center(K);
  for (std::size_t k = 0; k < K; ++k) {
    mention_center[k] = gaussian(cfg.d_w, cfg.type_separation);
    context_center[k] = gaussian(cfg.d_h, cfg.type_separation);
  }
  struct Entity {
    Eigen::VectorXd center;
    std::size_t distractor;
    double noise_prob;
  };
  // Noise probabilities: the ambiguous entity (mode 0) takes
  // noise_concentration of the per-type noise mass, capped at 1.
  const double mass = cfg.noise_rate * static_cast<double>(n_modes);
  const double hi = n_modes == 1
                        ? cfg.noise_rate
                        : std::min(1.0, std::max(cfg.noise_rate,
                                                 mass * cfg.noise_concentration));
  const double lo =
      n_modes == 1 ? cfg.noise_rate
                   : std::clamp((mass - hi) / static_cast<double>(n_modes - 1),
                                0.0, 1.0);
  std::vector<std::vector<Entity>> entities(K);
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t m = 0; m < n_modes; ++m) {
      Entity e;
      e.center = mention_center[k] + gaussian(cfg.d_w, cfg.mode_spread);
      e.distractor = (k + 1 + pick(K - 1)) % K;
      e.noise_prob = m == 0 ? hi : lo;
      entities[k].push_back(std::move(e));
    }
  }

  auto draw = [&](std::size_t k, const Entity& e, MentionSample& s) {
    const std::size_t n_mention = 1 + pick(cfg.mention_tokens);
    s.mention.resize(static_cast<Eigen::Index>(n_mention), cfg.d_w);
    for (std::size_t t = 0; t < n_mention; ++t) {
      s.mention.row(static_cast<Eigen::Index>(t)) =
          (e.center + gaussian(cfg.d_w, cfg.cluster_spread)).transpose();
    }
    s.context.resize(static_cast<Eigen::Index>(cfg.context_tokens), cfg.d_h);
    for (std::size_t t = 0; t < cfg.context_tokens; ++t) {
      Eigen::VectorXd v = unit(rng) < cfg.context_signal
                              ? Eigen::VectorXd(context_center[k] +
                                                gaussian(cfg.d_h,
                                                         cfg.cluster_spread))
                              : gaussian(cfg.d_h, cfg.type_separation);
      s.context.row(static_cast<Eigen::Index>(t)) = v.transpose();
    }
  };

  auto emit = [&](Split split, std::size_t count, const char* prefix) {
    for (std::size_t i = 0; i < count; ++i) {
      MentionSample s;
      s.id = prefix + std::to_string(i);
      s.split = split;
      const std::size_t k = pick(K);
      const Entity& e = entities[k][pick(n_modes)];
      draw(k, e, s);
      s.gold = leaves[k];
      s.candidates = ds.hierarchy.path_of(leaves[k]);
      if (split == Split::kTrain && unit(rng) < e.noise_prob) {
        s.candidates.merge(ds.hierarchy.path_of(leaves[e.distractor]));
        if (K > 2 && unit(rng) < cfg.second_distractor_rate) {
          std::size_t extra = pick(K);
          while (extra == k || extra == e.distractor) extra = pick(K);
          s.candidates.merge(ds.hierarchy.path_of(leaves[extra]));
        }
      }
      ds.samples.push_back(std::move(s));
    }
  };
  emit(Split::kTrain, cfg.n_samples, "train-");
  emit(Split::kDev, cfg.n_dev, "dev-");
  emit(Split::kTest, cfg.n_test, "test-");
  return ds;
}

}  // namespace clsc
