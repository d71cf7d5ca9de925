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

// Type hierarchy, mention records and batch assembly.
//
// A mention carries the full (ancestor-closed) candidate set it received
// from distant supervision. Its target set is the set of leaves of the
// candidate paths; a mention is clean when that set has exactly one
// element and noisy otherwise.

#pragma once

#include <cstddef>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "clsc/error.hpp"

namespace clsc {

using TypeId = std::size_t;
using TypeSet = std::set<TypeId>;

class TypeHierarchy {
 public:
  TypeHierarchy() = default;

  // Builds a hierarchy from slash-delimited paths ("/person/artist").
  // Every proper prefix of a path must itself be listed. Index order
  // follows the input order.
  static TypeHierarchy from_paths(std::span<const std::string> paths) {
    TypeHierarchy h;
    h.names_.reserve(paths.size());
    for (std::size_t i = 0; i < paths.size(); ++i) {
      const std::string& p = paths[i];
      check_path_syntax(p, i + 1);
      if (!h.index_.emplace(p, i).second) {
        fail_validation("line ", i + 1, ": duplicate type path '", p, "'");
      }
      h.names_.push_back(p);
    }
    h.parent_.assign(paths.size(), std::nullopt);
    h.children_.assign(paths.size(), {});
    for (std::size_t i = 0; i < paths.size(); ++i) {
      const std::string& p = h.names_[i];
      const std::size_t cut = p.rfind('/');
      if (cut == 0) continue;
      auto it = h.index_.find(p.substr(0, cut));
      if (it == h.index_.end()) {
        fail_validation("line ", i + 1, ": parent of '", p,
                        "' is not listed in the hierarchy");
      }
      h.parent_[i] = it->second;
      h.children_[it->second].push_back(i);
    }
    return h;
  }

  // Hierarchy file: one type path per line. Blank lines are skipped.
  static TypeHierarchy parse(std::istream& in) {
    std::vector<std::string> paths;
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      paths.push_back(line);
    }
    return from_paths(paths);
  }

  static TypeHierarchy load(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail_validation("cannot open hierarchy file '", path, "'");
    return parse(in);
  }

  void write(std::ostream& out) const {
    for (const auto& n : names_) out << n << '\n';
  }

  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

  const std::string& name(TypeId t) const {
    check_index(t);
    return names_[t];
  }

  std::optional<TypeId> parent(TypeId t) const {
    check_index(t);
    return parent_[t];
  }

  const std::vector<TypeId>& children(TypeId t) const {
    check_index(t);
    return children_[t];
  }

  std::optional<TypeId> find(std::string_view path) const {
    auto it = index_.find(std::string(path));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  TypeId index_of(std::string_view path) const {
    auto t = find(path);
    if (!t) fail_validation("unknown type path '", path, "'");
    return *t;
  }

  // {t} plus every ancestor of t.
  TypeSet path_of(TypeId t) const {
    check_index(t);
    TypeSet out;
    for (std::optional<TypeId> cur = t; cur; cur = parent_[*cur]) {
      out.insert(*cur);
    }
    return out;
  }

  std::size_t depth(TypeId t) const { return path_of(t).size(); }

  void check_index(TypeId t) const {
    if (t >= names_.size()) {
      fail_validation("type index ", t, " out of range (K = ", names_.size(),
                      ")");
    }
  }

 private:
  static void check_path_syntax(const std::string& p, std::size_t line) {
    if (p.size() < 2 || p.front() != '/' || p.back() == '/' ||
        p.find("//") != std::string::npos) {
      fail_validation("line ", line, ": malformed type path '", p, "'");
    }
  }

  std::vector<std::string> names_;
  std::vector<std::optional<TypeId>> parent_;
  std::vector<std::vector<TypeId>> children_;
  std::unordered_map<std::string, TypeId> index_;
};

enum class Split { kTrain, kDev, kTest };

inline std::string_view split_name(Split s) {
  switch (s) {
    case Split::kTrain:
      return "train";
    case Split::kDev:
      return "dev";
    case Split::kTest:
      return "test";
  }
  return "train";
}

inline Split parse_split(std::string_view s) {
  if (s == "train") return Split::kTrain;
  if (s == "dev") return Split::kDev;
  if (s == "test") return Split::kTest;
  fail_validation("unknown split '", s, "'");
}

// One mention. Token vectors are stored row-wise: mention is
// (tokens x d_w), context is (tokens x d_h).
struct MentionSample {
  std::string id;
  Eigen::MatrixXd mention;
  Eigen::MatrixXd context;
  TypeSet candidates;
  std::optional<TypeId> gold;
  Split split = Split::kTrain;
};

// Validates an ancestor-closed candidate set and returns its leaves.
inline TypeSet terminal_types(const TypeHierarchy& h,
                              const TypeSet& candidates) {
  if (candidates.empty()) fail_validation("candidate set is empty");
  for (TypeId t : candidates) {
    h.check_index(t);
    auto p = h.parent(t);
    if (p && !candidates.contains(*p)) {
      fail_validation("candidate set is not ancestor-closed: '", h.name(t),
                      "' present without parent '", h.name(*p), "'");
    }
  }
  TypeSet leaves = candidates;
  for (TypeId t : candidates) {
    if (auto p = h.parent(t)) leaves.erase(*p);
  }
  return leaves;
}

// Adds all ancestors of every member.
inline TypeSet ancestor_closure(const TypeHierarchy& h, const TypeSet& types) {
  TypeSet out;
  for (TypeId t : types) out.merge(h.path_of(t));
  return out;
}

inline bool is_clean(const TypeHierarchy& h, const MentionSample& s) {
  return terminal_types(h, s.candidates).size() == 1;
}

inline void validate_sample(const TypeHierarchy& h, const MentionSample& s) {
  if (s.mention.rows() == 0 || s.mention.cols() == 0) {
    fail_validation("sample '", s.id, "': empty mention token list");
  }
  if (s.context.rows() == 0 || s.context.cols() == 0) {
    fail_validation("sample '", s.id, "': empty context token list");
  }
  const TypeSet leaves = terminal_types(h, s.candidates);
  if (s.gold) {
    h.check_index(*s.gold);
    if (!leaves.contains(*s.gold)) {
      fail_validation("sample '", s.id, "': gold '", h.name(*s.gold),
                      "' is not a terminal candidate type");
    }
  }
}

struct Batch {
  std::vector<const MentionSample*> samples;
  Eigen::MatrixXd Z;     // B x d_z, filled by the encoder
  Eigen::MatrixXd mask;  // B x K indicator of terminal candidate types
  std::vector<bool> clean;
  // Single terminal type of each clean row; unset for noisy rows.
  std::vector<std::optional<TypeId>> label;

  std::size_t size() const { return samples.size(); }

  std::size_t clean_count() const {
    std::size_t n = 0;
    for (bool c : clean) n += c ? 1 : 0;
    return n;
  }
};

inline Batch build_batch(const TypeHierarchy& h,
                         std::span<const MentionSample* const> samples,
                         Eigen::Index d_z = 0) {
  if (samples.size() < 2) {
    fail_validation("batch needs at least 2 samples, got ", samples.size());
  }
  const auto B = static_cast<Eigen::Index>(samples.size());
  const auto K = static_cast<Eigen::Index>(h.size());
  Batch batch;
  batch.samples.assign(samples.begin(), samples.end());
  batch.Z = Eigen::MatrixXd::Zero(B, d_z);
  batch.mask = Eigen::MatrixXd::Zero(B, K);
  batch.clean.resize(samples.size());
  batch.label.resize(samples.size());
  for (Eigen::Index i = 0; i < B; ++i) {
    const TypeSet leaves = terminal_types(h, samples[i]->candidates);
    for (TypeId t : leaves) batch.mask(i, static_cast<Eigen::Index>(t)) = 1.0;
    batch.clean[i] = leaves.size() == 1;
    if (batch.clean[i]) batch.label[i] = *leaves.begin();
  }
  return batch;
}

inline Batch build_batch(const TypeHierarchy& h,
                         std::span<const MentionSample> samples,
                         Eigen::Index d_z = 0) {
  std::vector<const MentionSample*> ptrs;
  ptrs.reserve(samples.size());
  for (const auto& s : samples) ptrs.push_back(&s);
  return build_batch(h, std::span<const MentionSample* const>(ptrs), d_z);
}

}  // namespace clsc
