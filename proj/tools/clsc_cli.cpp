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

// Command-line driver. Every subcommand reads an optional flat JSON config
// (--config), an optional seed override (--seed) and writes tab-separated
// key=value result records to stdout or --out.
//
// Exit codes: 0 success, 1 invalid input or usage, 2 numerical failure.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "clsc/clsc.hpp"

namespace {

using clsc::ResultRow;

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "flat JSON run configuration");
  cmd->add_option("--seed", o.seed, "seed override");
  cmd->add_option("--out", o.out, "output file (default: stdout)");
}

clsc::RunConfig load_run_config(const CommonOptions& o) {
  clsc::RunConfig c =
      o.config.empty() ? clsc::desk_profile() : clsc::load_config(o.config);
  if (o.seed) {
    c.train.seed = *o.seed;
    c.synth.seed = *o.seed;
  }
  return c;
}

// Output sink: --out if given, else stdout.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) clsc::fail_validation("cannot write '", path, "'");
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }
  void flush() { stream().flush(); }

 private:
  std::unique_ptr<std::ofstream> file_;
};

clsc::Dataset dataset_or_generate(const std::string& path,
                                  const clsc::RunConfig& c) {
  return path.empty() ? clsc::generate(c.synth) : clsc::load_dataset(path);
}

int run_generate(const CommonOptions& o) {
  const clsc::RunConfig c = load_run_config(o);
  const clsc::Dataset ds = clsc::generate(c.synth);
  Output out(o.out);
  clsc::write_dataset(out.stream(), ds);
  out.flush();
  ResultRow r;
  r.add("command", "generate")
      .add("seed", c.synth.seed)
      .add("n_train", ds.split(clsc::Split::kTrain).size())
      .add("n_dev", ds.split(clsc::Split::kDev).size())
      .add("n_test", ds.split(clsc::Split::kTest).size())
      .add("clean_fraction", clsc::clean_fraction(ds));
  // The dataset occupies stdout when no --out is given.
  (o.out.empty() ? std::cerr : std::cout) << r << '\n';
  return 0;
}

int run_train(const CommonOptions& o, const std::string& data,
              const std::string& model) {
  const clsc::RunConfig c = load_run_config(o);
  const clsc::Dataset ds = clsc::load_dataset(data);
  const clsc::TrainReport report = clsc::train(ds, c.train);
  if (!model.empty()) clsc::save_checkpoint(model, report.best_model);
  Output out(o.out);
  for (const clsc::EpochRecord& e : report.epochs) {
    ResultRow r;
    r.add("command", "train")
        .add("epoch", e.epoch)
        .add("supervision", e.supervision)
        .add("clsc", e.clsc)
        .add("total", e.total);
    if (e.dev) {
      r.add("dev_strict_acc", e.dev->strict_acc)
          .add("dev_macro_f1", e.dev->macro_f1)
          .add("dev_micro_f1", e.dev->micro_f1);
    }
    out.stream() << r << '\n';
  }
  ResultRow r;
  r.add("command", "train")
      .add("seed", c.train.seed)
      .add("steps", report.steps)
      .add("best_epoch", report.best_epoch);
  const auto test = ds.split(clsc::Split::kTest);
  if (!test.empty()) {
    clsc::add_metrics(r, clsc::evaluate_model(ds.hierarchy, report.best_model,
                                              test));
  }
  out.stream() << r << '\n';
  return 0;
}

int run_eval(const CommonOptions& o, const std::string& data,
             const std::string& model, const std::string& split) {
  load_run_config(o);  // validates --config even though eval ignores it
  const clsc::Dataset ds = clsc::load_dataset(data);
  const clsc::ModelParams params = clsc::load_checkpoint(model);
  const clsc::Split s = clsc::parse_split(split);
  const auto samples = ds.split(s);
  if (samples.empty()) clsc::fail_validation("split '", split, "' is empty");
  if (params.encoder.d_w != ds.d_w || params.encoder.d_h() != ds.d_h ||
      params.classifier.W.rows() !=
          static_cast<Eigen::Index>(ds.hierarchy.size())) {
    clsc::fail_validation("model does not match the dataset dimensions");
  }
  ResultRow r;
  r.add("command", "eval").add("split", split);
  clsc::add_metrics(r, clsc::evaluate_model(ds.hierarchy, params, samples));
  Output out(o.out);
  out.stream() << r << '\n';
  return 0;
}

Eigen::MatrixXd json_matrix(const nlohmann::json& j, const char* name) {
  if (!j.contains(name) || !j[name].is_array() || j[name].empty()) {
    clsc::fail_validation("propagate: '", name,
                          "' must be a non-empty list of rows");
  }
  const nlohmann::json& rows = j[name];
  const std::size_t width = rows[0].is_array() ? rows[0].size() : 0;
  if (width == 0) clsc::fail_validation("propagate: '", name, "' row 0 is empty");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(width));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].is_array() || rows[i].size() != width) {
      clsc::fail_validation("propagate: '", name, "' row ", i,
                            " does not have ", width, " entries");
    }
    for (std::size_t k = 0; k < width; ++k) {
      if (!rows[i][k].is_number()) {
        clsc::fail_validation("propagate: '", name, "' row ", i,
                              " holds a non-number");
      }
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          rows[i][k].get<double>();
    }
  }
  if (!m.allFinite()) {
    clsc::fail_validation("propagate: '", name, "' holds non-finite values");
  }
  return m;
}

int run_propagate(const CommonOptions& o, const std::string& input) {
  const clsc::RunConfig c = load_run_config(o);
  std::ifstream in(input);
  if (!in) clsc::fail_validation("cannot open '", input, "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    clsc::fail_validation("'", input, "': ", e.what());
  }
  const Eigen::MatrixXd Z = json_matrix(j, "Z");
  const Eigen::MatrixXd M = json_matrix(j, "M");
  if (M.rows() != Z.rows()) {
    clsc::fail_validation("propagate: Z has ", Z.rows(), " rows, M has ",
                          M.rows());
  }
  if ((M.array() != 0.0 && M.array() != 1.0).any()) {
    clsc::fail_validation("propagate: M must be a 0/1 mask");
  }
  const clsc::SimilarityGraph g =
      clsc::build_graph(Z, clsc::GraphOptions{c.train.zero_diagonal});
  const clsc::PropagationResult lp = clsc::propagate(
      g.H, M, clsc::PropagateOptions{c.train.lp_steps, c.train.lp_tol,
                                     c.train.seed});
  Output out(o.out);
  for (Eigen::Index i = 0; i < lp.Phi.rows(); ++i) {
    ResultRow r;
    r.add("command", "propagate").add("row", static_cast<std::size_t>(i));
    for (Eigen::Index k = 0; k < lp.Phi.cols(); ++k) {
      r.add("phi" + std::to_string(k), lp.Phi(i, k));
    }
    out.stream() << r << '\n';
  }
  ResultRow r;
  r.add("command", "propagate")
      .add("iterations", lp.iterations)
      .add("converged", lp.converged ? "true" : "false")
      .add("residual", lp.residual);
  out.stream() << r << '\n';
  return 0;
}

int run_sweep(const CommonOptions& o, const std::string& data,
              const std::vector<double>& fractions, std::size_t n_seeds) {
  const clsc::RunConfig c = load_run_config(o);
  const clsc::Dataset ds = dataset_or_generate(data, c);
  Output out(o.out);
  const auto cells = clsc::noise_sweep(
      ds, c.train, fractions, n_seeds,
      [&out](const ResultRow& r) { out.stream() << r << '\n' << std::flush; });
  for (double f : fractions) {
    std::vector<double> gaps;
    for (const clsc::SweepCell& a : cells) {
      if (a.fraction != f || a.method != "clsc") continue;
      for (const clsc::SweepCell& b : cells) {
        if (b.fraction == f && b.method == "baseline" &&
            b.seed_index == a.seed_index) {
          gaps.push_back(a.test.strict_acc - b.test.strict_acc);
        }
      }
    }
    const clsc::Summary s = clsc::summarize(gaps);
    ResultRow r;
    r.add("experiment", "sweep_summary")
        .add("fraction", f)
        .add("n_seeds", gaps.size())
        .add("gap_mean", s.mean)
        .add("gap_std", s.stddev);
    out.stream() << r << '\n';
  }
  return 0;
}

int run_ablate(const CommonOptions& o, const std::string& data,
               std::size_t n_seeds) {
  const clsc::RunConfig c = load_run_config(o);
  const clsc::Dataset ds = dataset_or_generate(data, c);
  Output out(o.out);
  const auto cells = clsc::ablation(
      ds, c.train, n_seeds,
      [&out](const ResultRow& r) { out.stream() << r << '\n' << std::flush; });
  for (const clsc::AblationCell& cell : cells) out.stream() << cell.row() << '\n';
  return 0;
}

int run_project(const CommonOptions& o, const std::string& data,
                const std::string& model, const std::string& split) {
  load_run_config(o);
  const clsc::Dataset ds = clsc::load_dataset(data);
  const clsc::ModelParams params = clsc::load_checkpoint(model);
  const auto samples = ds.split(clsc::parse_split(split));
  const clsc::Projection p = clsc::project(params, ds, samples);
  Output out(o.out);
  clsc::write_projection(out.stream(), p);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compact latent space clustering for noisy candidate labels"};
  app.require_subcommand(1);

  CommonOptions common;
  std::string data, model, input, split = "test";
  std::vector<double> fractions = {0.25, 0.10, 0.05};
  std::size_t n_seeds = 5;

  auto* gen = app.add_subcommand("generate", "write a synthetic dataset");
  add_common(gen, common);

  auto* tr = app.add_subcommand("train", "train a model on a dataset");
  add_common(tr, common);
  tr->add_option("--data", data, "dataset file")->required();
  tr->add_option("--model", model, "checkpoint to write (best dev epoch)");

  auto* ev = app.add_subcommand("eval", "score a checkpoint on a split");
  add_common(ev, common);
  ev->add_option("--data", data, "dataset file")->required();
  ev->add_option("--model", model, "checkpoint file")->required();
  ev->add_option("--split", split, "train, dev or test");

  auto* pr = app.add_subcommand(
      "propagate", "label propagation on a JSON file {\"Z\": ..., \"M\": ...}");
  add_common(pr, common);
  pr->add_option("--input", input, "embeddings and masks")->required();

  auto* sw = app.add_subcommand(
      "sweep", "regularized vs baseline while removing clean mentions");
  add_common(sw, common);
  sw->add_option("--data", data, "dataset file (default: generate)");
  sw->add_option("--fractions", fractions, "kept clean fractions")
      ->delimiter(',');
  sw->add_option("--seeds", n_seeds, "paired seeds per cell");

  auto* ab = app.add_subcommand(
      "ablate", "{clean, clean+noisy} x {one-step, multi-step} cells");
  add_common(ab, common);
  ab->add_option("--data", data, "dataset file (default: generate)");
  ab->add_option("--seeds", n_seeds, "seeds per cell");

  auto* pj = app.add_subcommand("project", "2-D PCA projection of embeddings");
  add_common(pj, common);
  pj->add_option("--data", data, "dataset file")->required();
  pj->add_option("--model", model, "checkpoint file")->required();
  pj->add_option("--split", split, "train, dev or test");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) return run_generate(common);
    if (tr->parsed()) return run_train(common, data, model);
    if (ev->parsed()) return run_eval(common, data, model, split);
    if (pr->parsed()) return run_propagate(common, input);
    if (sw->parsed()) return run_sweep(common, data, fractions, n_seeds);
    if (ab->parsed()) return run_ablate(common, data, n_seeds);
    if (pj->parsed()) return run_project(common, data, model, split);
  } catch (const clsc::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 2;
  } catch (const clsc::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
