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

// Strict accuracy and loose macro / micro F1 over type paths.
//
// Each prediction and gold is expanded to its full path (the type plus all
// ancestors) and the two sets are compared.

#pragma once

#include <algorithm>
#include <iterator>
#include <span>
#include <vector>

#include "clsc/error.hpp"
#include "clsc/types.hpp"

namespace clsc {

struct EvalResult {
  double strict_acc = 0.0;
  double macro_f1 = 0.0;
  double micro_f1 = 0.0;
  std::size_t n_mentions = 0;
};

inline TypeSet expand_path(const TypeHierarchy& h, TypeId t) {
  return h.path_of(t);
}

inline double f1(double precision, double recall) {
  const double d = precision + recall;
  return d > 0.0 ? 2.0 * precision * recall / d : 0.0;
}

// Golds given as type sets; a gold with several paths is scored as the
// union of those paths.
inline EvalResult evaluate_sets(std::span<const TypeSet> predicted,
                                std::span<const TypeSet> gold) {
  if (predicted.size() != gold.size()) {
    fail_validation("evaluate: ", predicted.size(), " predictions vs ",
                    gold.size(), " golds");
  }
  if (predicted.empty()) fail_validation("evaluate: no mentions");
  EvalResult r;
  r.n_mentions = predicted.size();
  double strict = 0.0, macro_p = 0.0, macro_r = 0.0;
  double inter_sum = 0.0, pred_sum = 0.0, gold_sum = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const TypeSet& P = predicted[i];
    const TypeSet& G = gold[i];
    std::vector<TypeId> common;
    std::set_intersection(P.begin(), P.end(), G.begin(), G.end(),
                          std::back_inserter(common));
    const double inter = static_cast<double>(common.size());
    if (P == G) strict += 1.0;
    if (!P.empty()) macro_p += inter / static_cast<double>(P.size());
    if (!G.empty()) macro_r += inter / static_cast<double>(G.size());
    inter_sum += inter;
    pred_sum += static_cast<double>(P.size());
    gold_sum += static_cast<double>(G.size());
  }
  const double n = static_cast<double>(r.n_mentions);
  r.strict_acc = strict / n;
  r.macro_f1 = f1(macro_p / n, macro_r / n);
  r.micro_f1 = f1(pred_sum > 0.0 ? inter_sum / pred_sum : 0.0,
                  gold_sum > 0.0 ? inter_sum / gold_sum : 0.0);
  return r;
}

inline EvalResult evaluate(const TypeHierarchy& h,
                           std::span<const TypeId> predictions,
                           std::span<const TypeId> golds) {
  if (predictions.size() != golds.size()) {
    fail_validation("evaluate: ", predictions.size(), " predictions vs ",
                    golds.size(), " golds");
  }
  std::vector<TypeSet> P, G;
  P.reserve(predictions.size());
  G.reserve(golds.size());
  for (TypeId t : predictions) P.push_back(expand_path(h, t));
  for (TypeId t : golds) G.push_back(expand_path(h, t));
  return evaluate_sets(P, G);
}

}  // namespace clsc
