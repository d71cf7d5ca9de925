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

// Experiment drivers: clean-data sweep, Markov-chain ablation, 2-D
// projection of the learned embeddings, and result-record formatting.

#pragma once

#include <algorithm>
#include <charconv>
#include <concepts>
#include <cmath>
#include <cstdint>
#include <functional>
#include <ostream>
#include <random>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "clsc/dataset_io.hpp"
#include "clsc/error.hpp"
#include "clsc/metrics.hpp"
#include "clsc/train.hpp"
#include "clsc/types.hpp"

namespace clsc {

// One result record: ordered key/value pairs, written as
// key=value fields separated by tabs, one record per line.
class ResultRow {
 public:
  ResultRow& add(std::string key, std::string value) {
    fields_.emplace_back(std::move(key), std::move(value));
    return *this;
  }
  ResultRow& add(std::string key, const char* value) {
    return add(std::move(key), std::string(value));
  }
  ResultRow& add(std::string key, double value) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return add(std::move(key), std::string(buf, end));
  }
  ResultRow& add(std::string key, std::integral auto value) {
    return add(std::move(key), std::to_string(value));
  }

  const std::vector<std::pair<std::string, std::string>>& fields() const {
    return fields_;
  }

  std::string str() const {
    std::string out;
    for (std::size_t i = 0; i < fields_.size(); ++i) {
      if (i) out += '\t';
      out += fields_[i].first;
      out += '=';
      out += fields_[i].second;
    }
    return out;
  }

 private:
  std::vector<std::pair<std::string, std::string>> fields_;
};

inline std::ostream& operator<<(std::ostream& os, const ResultRow& row) {
  return os << row.str();
}

inline ResultRow& add_metrics(ResultRow& row, const EvalResult& r) {
  return row.add("strict_acc", r.strict_acc)
      .add("macro_f1", r.macro_f1)
      .add("micro_f1", r.micro_f1)
      .add("n_mentions", r.n_mentions);
}

using SampleList = std::vector<const MentionSample*>;

struct CellOutcome {
  EvalResult test;
  TrainReport report;
};

// Trains on `train_set`, selects the best dev snapshot and scores it on
// `test_set`.
inline CellOutcome run_cell(const Dataset& ds, const SampleList& train_set,
                            const TrainConfig& cfg) {
  const SampleList dev = ds.split(Split::kDev);
  const SampleList test = ds.split(Split::kTest);
  if (test.empty()) fail_validation("dataset has no test split");
  CellOutcome out;
  out.report = train(train_set, dev, ds.hierarchy, ds.d_w, ds.d_h, cfg);
  out.test = evaluate_model(ds.hierarchy, out.report.best_model, test);
  return out;
}

inline void partition_train(const Dataset& ds, SampleList& clean,
                            SampleList& noisy) {
  for (const MentionSample* s : ds.split(Split::kTrain)) {
    (is_clean(ds.hierarchy, *s) ? clean : noisy).push_back(s);
  }
}

struct SweepCell {
  double fraction = 1.0;
  std::string method;  // "clsc" or "baseline"
  std::size_t seed_index = 0;
  std::uint64_t seed = 0;
  std::size_t n_clean = 0;
  std::size_t n_noisy = 0;
  EvalResult test;

  ResultRow row() const {
    ResultRow r;
    r.add("experiment", "sweep")
        .add("fraction", fraction)
        .add("method", method)
        .add("seed", seed)
        .add("n_clean", n_clean)
        .add("n_noisy", n_noisy);
    add_metrics(r, test);
    return r;
  }
};

// Seeded subsample of round(fraction * |clean|) clean mentions. The draw
// depends only on (seed, fraction), so paired cells see the same subset.
inline SampleList subsample_clean(const SampleList& clean, double fraction,
                                  std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    fail_validation("clean fraction ", fraction, " outside (0, 1]");
  }
  SampleList shuffled = clean;
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(std::lround(fraction * 1e6))};
  std::mt19937_64 rng(seq);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const auto keep = static_cast<std::size_t>(
      std::lround(fraction * static_cast<double>(clean.size())));
  shuffled.resize(std::min(keep, shuffled.size()));
  return shuffled;
}

using CellCallback = std::function<void(const ResultRow&)>;

// For each fraction f and seed: keep f of the clean training mentions plus
// every noisy one, then train the regularized model and the lambda_clsc = 0
// baseline on the same subset with the same seed.
inline std::vector<SweepCell> noise_sweep(const Dataset& ds,
                                          const TrainConfig& cfg,
                                          std::span<const double> fractions,
                                          std::size_t n_seeds,
                                          const CellCallback& on_cell = {}) {
  if (cfg.lambda_clsc <= 0.0) {
    fail_validation("noise sweep needs lambda_clsc > 0");
  }
  if (n_seeds < 1) fail_validation("noise sweep needs at least one seed");
  SampleList clean, noisy;
  partition_train(ds, clean, noisy);
  std::vector<SweepCell> cells;
  for (double f : fractions) {
    for (std::size_t s = 0; s < n_seeds; ++s) {
      const std::uint64_t seed = cfg.seed + s;
      const SampleList kept = subsample_clean(clean, f, seed);
      const std::set<const MentionSample*> keep(kept.begin(), kept.end());
      // Dataset order is preserved, so f = 1 reproduces a plain run.
      SampleList subset;
      for (const MentionSample* s : ds.split(Split::kTrain)) {
        if (keep.contains(s) || !is_clean(ds.hierarchy, *s)) {
          subset.push_back(s);
        }
      }
      const std::size_t n_clean = kept.size();
      if (subset.size() < 2) {
        fail_validation("fraction ", f, " leaves fewer than 2 samples");
      }
      for (const char* method : {"clsc", "baseline"}) {
        TrainConfig c = cfg;
        c.seed = seed;
        if (std::string(method) == "baseline") c.lambda_clsc = 0.0;
        SweepCell cell;
        cell.fraction = f;
        cell.method = method;
        cell.seed_index = s;
        cell.seed = seed;
        cell.n_clean = n_clean;
        cell.n_noisy = noisy.size();
        cell.test = run_cell(ds, subset, c).test;
        if (on_cell) on_cell(cell.row());
        cells.push_back(std::move(cell));
      }
    }
  }
  return cells;
}

struct Summary {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation
};

inline Summary summarize(std::span<const double> xs) {
  Summary s;
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

struct AblationCell {
  bool with_noisy = false;
  int markov_steps = 1;
  std::vector<double> strict_acc;  // one per seed
  Summary summary;

  std::string name() const {
    return std::string(with_noisy ? "c+n" : "c") +
           (markov_steps == 1 ? "/1-step" : "/markov");
  }

  ResultRow row() const {
    ResultRow r;
    r.add("experiment", "ablation")
        .add("cell", name())
        .add("data", with_noisy ? "clean+noisy" : "clean")
        .add("S_m", markov_steps)
        .add("n_seeds", strict_acc.size())
        .add("strict_acc_mean", summary.mean)
        .add("strict_acc_std", summary.stddev);
    return r;
  }
};

// Four cells: {clean only, clean + noisy} x {S_m = 1, S_m = cfg.markov_steps}.
inline std::vector<AblationCell> ablation(const Dataset& ds,
                                          const TrainConfig& cfg,
                                          std::size_t n_seeds = 5,
                                          const CellCallback& on_seed = {}) {
  if (cfg.lambda_clsc <= 0.0) fail_validation("ablation needs lambda_clsc > 0");
  if (n_seeds < 1) fail_validation("ablation needs at least one seed");
  SampleList clean, noisy;
  partition_train(ds, clean, noisy);
  SampleList mixed = clean;
  mixed.insert(mixed.end(), noisy.begin(), noisy.end());
  std::vector<AblationCell> cells;
  for (bool with_noisy : {false, true}) {
    for (int steps : {1, cfg.markov_steps}) {
      AblationCell cell;
      cell.with_noisy = with_noisy;
      cell.markov_steps = steps;
      for (std::size_t s = 0; s < n_seeds; ++s) {
        TrainConfig c = cfg;
        c.seed = cfg.seed + s;
        c.markov_steps = steps;
        const EvalResult r = run_cell(ds, with_noisy ? mixed : clean, c).test;
        cell.strict_acc.push_back(r.strict_acc);
        if (on_seed) {
          ResultRow row;
          row.add("experiment", "ablation")
              .add("cell", cell.name())
              .add("seed", c.seed);
          add_metrics(row, r);
          on_seed(row);
        }
      }
      cell.summary = summarize(cell.strict_acc);
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

// Top-2 principal component coordinates of the rows of Z. Component signs
// are fixed so that the largest-magnitude loading is positive.
inline Eigen::MatrixXd pca_project(const Eigen::MatrixXd& Z,
                                   Eigen::Index n_components = 2) {
  if (Z.rows() < 2) fail_validation("projection needs at least 2 samples");
  const Eigen::RowVectorXd mean = Z.colwise().mean();
  const Eigen::MatrixXd centered = Z.rowwise() - mean;
  const Eigen::MatrixXd cov =
      centered.transpose() * centered / static_cast<double>(Z.rows() - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const Eigen::Index d = Z.cols();
  Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(d, n_components);
  for (Eigen::Index c = 0; c < std::min(n_components, d); ++c) {
    Eigen::VectorXd v = eig.eigenvectors().col(d - 1 - c);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    basis.col(c) = v;
  }
  return centered * basis;
}

struct Projection {
  std::vector<std::string> ids;
  std::vector<std::string> gold;
  Eigen::MatrixXd coords;  // N x 2
};

inline Projection project(const ModelParams& model, const Dataset& ds,
                          const SampleList& samples) {
  if (samples.size() < 2) fail_validation("projection needs >= 2 samples");
  if (model.encoder.d_w != ds.d_w || model.encoder.d_h() != ds.d_h) {
    fail_validation("checkpoint expects token widths (", model.encoder.d_w,
                    ", ", model.encoder.d_h(), "), dataset has (", ds.d_w,
                    ", ", ds.d_h, ")");
  }
  Projection p;
  p.coords = pca_project(embed(model.encoder, samples));
  for (const MentionSample* s : samples) {
    p.ids.push_back(s->id);
    p.gold.push_back(s->gold ? ds.hierarchy.name(*s->gold) : "");
  }
  return p;
}

// Tab-separated: header "id x y gold", then one row per mention.
inline void write_projection(std::ostream& out, const Projection& p) {
  out << "id\tx\ty\tgold\n";
  char buf[64];
  for (std::size_t i = 0; i < p.ids.size(); ++i) {
    out << p.ids[i];
    for (Eigen::Index c = 0; c < 2; ++c) {
      auto [end, ec] = std::to_chars(
          buf, buf + sizeof(buf), p.coords(static_cast<Eigen::Index>(i), c));
      out << '\t' << std::string_view(buf, static_cast<std::size_t>(end - buf));
    }
    out << '\t' << p.gold[i] << '\n';
  }
}

// Mean intra-class over mean inter-class Euclidean distance between rows.
inline double compactness_ratio(const Eigen::MatrixXd& Z,
                                std::span<const TypeId> labels) {
  if (static_cast<Eigen::Index>(labels.size()) != Z.rows()) {
    fail_validation("compactness_ratio: label count mismatch");
  }
  double intra = 0.0, inter = 0.0;
  std::size_t n_intra = 0, n_inter = 0;
  for (Eigen::Index i = 0; i < Z.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < Z.rows(); ++j) {
      const double d = (Z.row(i) - Z.row(j)).norm();
      if (labels[static_cast<std::size_t>(i)] ==
          labels[static_cast<std::size_t>(j)]) {
        intra += d;
        ++n_intra;
      } else {
        inter += d;
        ++n_inter;
      }
    }
  }
  if (n_intra == 0 || n_inter == 0) {
    fail_validation("compactness_ratio: need two classes with >= 2 members");
  }
  return (intra / static_cast<double>(n_intra)) /
         (inter / static_cast<double>(n_inter));
}

}  // namespace clsc
