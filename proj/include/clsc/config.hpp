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

// Run configuration: a flat JSON object whose keys are the fields of
// TrainConfig and SynthConfig. Missing keys keep the desk-scale defaults;
// unknown keys are rejected.

#pragma once

#include <fstream>
#include <functional>
#include <map>
#include <string>

#include <json.hpp>

#include "clsc/error.hpp"
#include "clsc/synth.hpp"
#include "clsc/train.hpp"

namespace clsc {

struct RunConfig {
  TrainConfig train;
  SynthConfig synth;
};

// Defaults for desk-scale runs: the published propagation settings (S_lp,
// S_m) with a smaller batch, encoder and corpus. With B = 64 instead of
// 512 the regularizer weight is raised to 8 so that it still competes with
// the supervision term over 30 epochs.
inline RunConfig desk_profile() {
  RunConfig c;
  c.train.lambda_clsc = 8.0;
  return c;
}

namespace detail {

template <typename T>
void read_field(const nlohmann::json& j, const std::string& key, T& out) {
  try {
    out = j.get<T>();
  } catch (const nlohmann::json::exception&) {
    fail_validation("config key '", key, "' has the wrong type");
  }
}

template <typename F>
void for_each_config_field(RunConfig& c, F&& f) {
  TrainConfig& t = c.train;
  SynthConfig& s = c.synth;
  f("lr", t.lr);
  f("batch_size", t.batch_size);
  f("S_lp", t.lp_steps);
  f("S_m", t.markov_steps);
  f("lambda_clsc", t.lambda_clsc);
  f("lambda_l2", t.lambda_l2);
  f("epochs", t.epochs);
  f("seed", t.seed);
  f("hidden_layers", t.hidden_layers);
  f("hidden_width", t.hidden_width);
  f("d_z", t.d_z);
  f("zero_diagonal", t.zero_diagonal);
  f("lp_tol", t.lp_tol);
  f("n_types", s.n_types);
  f("n_parents", s.n_parents);
  f("depth", s.depth);
  f("n_samples", s.n_samples);
  f("n_dev", s.n_dev);
  f("n_test", s.n_test);
  f("noise_rate", s.noise_rate);
  f("noise_concentration", s.noise_concentration);
  f("second_distractor_rate", s.second_distractor_rate);
  f("modes_per_type", s.modes_per_type);
  f("type_separation", s.type_separation);
  f("mode_spread", s.mode_spread);
  f("cluster_spread", s.cluster_spread);
  f("context_signal", s.context_signal);
  f("mention_tokens", s.mention_tokens);
  f("context_tokens", s.context_tokens);
  f("d_w", s.d_w);
  f("d_h", s.d_h);
}

}  // namespace detail

inline RunConfig parse_config(const nlohmann::json& j,
                              RunConfig base = desk_profile()) {
  if (!j.is_object()) fail_validation("config must be a JSON object");
  std::map<std::string, bool> seen;
  for (auto it = j.begin(); it != j.end(); ++it) seen[it.key()] = false;
  detail::for_each_config_field(base, [&](const char* key, auto& field) {
    auto it = j.find(key);
    if (it == j.end()) return;
    detail::read_field(*it, key, field);
    seen[key] = true;
  });
  for (const auto& [key, used] : seen) {
    if (!used) fail_validation("unknown config key '", key, "'");
  }
  base.train.validate();
  base.synth.validate();
  return base;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail_validation("cannot open config '", path, "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    fail_validation("config '", path, "': ", e.what());
  }
  return parse_config(j);
}

inline nlohmann::json config_to_json(const RunConfig& c) {
  nlohmann::json j = nlohmann::json::object();
  RunConfig copy = c;
  detail::for_each_config_field(copy, [&](const char* key, auto& field) {
    j[key] = field;
  });
  return j;
}

}  // namespace clsc
