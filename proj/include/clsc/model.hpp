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

// Full parameter set, flat tensor views, Adam and checkpoint files.
//
// Checkpoint format (text, one token stream):
//
//   clsc-checkpoint 1
//   d_w <int>
//   tensor <name> <rows> <cols>
//   <rows*cols values, column-major, shortest round-trip decimal>
//   ...
//   end
//
// Tensor names: encoder.attn_w, encoder.layer<l>.W, encoder.layer<l>.b,
// classifier.W, classifier.b. Vectors are stored as <n> x 1.

#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <Eigen/Dense>

#include "clsc/classifier.hpp"
#include "clsc/encoder.hpp"
#include "clsc/error.hpp"

namespace clsc {

struct ModelParams {
  EncoderParams encoder;
  ClassifierParams classifier;
};

inline ModelParams zeros_like(const ModelParams& p) {
  ModelParams z;
  z.encoder = EncoderParams::zeros(p.encoder.d_w, p.encoder.d_h(),
                                   p.encoder.hidden_layers(),
                                   p.encoder.layers.front().W.rows(),
                                   p.encoder.output_dim());
  z.classifier = ClassifierParams::zeros(p.classifier.W.rows(),
                                         p.classifier.W.cols());
  return z;
}

// Non-owning view of one parameter tensor.
struct TensorSlot {
  std::string name;
  double* data;
  Eigen::Index rows;
  Eigen::Index cols;
  bool is_weight;  // subject to L2; biases are not

  Eigen::Map<Eigen::VectorXd> values() const {
    return Eigen::Map<Eigen::VectorXd>(data, rows * cols);
  }
};

inline std::vector<TensorSlot> tensor_slots(ModelParams& p) {
  std::vector<TensorSlot> out;
  auto add = [&out](std::string name, auto& m, bool weight) {
    out.push_back({std::move(name), m.data(), m.rows(), m.cols(), weight});
  };
  add("encoder.attn_w", p.encoder.attn_w, true);
  for (std::size_t l = 0; l < p.encoder.layers.size(); ++l) {
    const std::string base = "encoder.layer" + std::to_string(l);
    add(base + ".W", p.encoder.layers[l].W, true);
    add(base + ".b", p.encoder.layers[l].b, false);
  }
  add("classifier.W", p.classifier.W, true);
  add("classifier.b", p.classifier.b, false);
  return out;
}

inline std::vector<TensorSlot> tensor_slots(const ModelParams& p) {
  return tensor_slots(const_cast<ModelParams&>(p));
}

inline Eigen::Index parameter_count(const ModelParams& p) {
  Eigen::Index n = 0;
  for (const auto& t : tensor_slots(p)) n += t.rows * t.cols;
  return n;
}

inline double weight_norm_sq(const ModelParams& p) {
  double acc = 0.0;
  for (const auto& t : tensor_slots(p)) {
    if (t.is_weight) acc += t.values().squaredNorm();
  }
  return acc;
}

// grads += 2 * lambda * weights
inline void add_weight_decay(const ModelParams& p, ModelParams& grads,
                             double lambda) {
  if (lambda == 0.0) return;
  auto ps = tensor_slots(p);
  auto gs = tensor_slots(grads);
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (ps[i].is_weight) gs[i].values() += 2.0 * lambda * ps[i].values();
  }
}

inline Eigen::VectorXd flatten(const ModelParams& p) {
  Eigen::VectorXd out(parameter_count(p));
  Eigen::Index at = 0;
  for (const auto& t : tensor_slots(p)) {
    const Eigen::Index n = t.rows * t.cols;
    out.segment(at, n) = t.values();
    at += n;
  }
  return out;
}

inline void unflatten(const Eigen::VectorXd& v, ModelParams& p) {
  if (v.size() != parameter_count(p)) {
    fail_validation("unflatten: size ", v.size(), " != ", parameter_count(p));
  }
  Eigen::Index at = 0;
  for (auto& t : tensor_slots(p)) {
    const Eigen::Index n = t.rows * t.cols;
    t.values() = v.segment(at, n);
    at += n;
  }
}

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  ModelParams m;
  ModelParams v;
  long step = 0;

  static AdamState for_model(const ModelParams& p) {
    return {zeros_like(p), zeros_like(p), 0};
  }
};

inline void adam_step(AdamState& state, ModelParams& params,
                      const ModelParams& grads, double lr,
                      const AdamOptions& opt = {}) {
  auto ps = tensor_slots(params);
  auto gs = tensor_slots(grads);
  auto ms = tensor_slots(state.m);
  auto vs = tensor_slots(state.v);
  if (gs.size() != ps.size() || ms.size() != ps.size()) {
    fail_validation("adam_step: parameter layout mismatch");
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (gs[i].rows * gs[i].cols != ps[i].rows * ps[i].cols) {
      fail_validation("adam_step: shape mismatch in ", ps[i].name);
    }
    auto p = ps[i].values();
    auto g = gs[i].values();
    auto m = ms[i].values();
    auto v = vs[i].values();
    m = opt.beta1 * m + (1.0 - opt.beta1) * g;
    v = opt.beta2 * v + (1.0 - opt.beta2) * g.cwiseProduct(g);
    p.array() -= lr * (m.array() / c1) /
                 ((v.array() / c2).sqrt() + opt.epsilon);
  }
}

inline void write_checkpoint(std::ostream& out, const ModelParams& p) {
  out << "clsc-checkpoint 1\n";
  out << "d_w " << p.encoder.d_w << '\n';
  char buf[64];
  for (const auto& t : tensor_slots(p)) {
    out << "tensor " << t.name << ' ' << t.rows << ' ' << t.cols << '\n';
    const auto v = t.values();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v(i));
      out.write(buf, end - buf);
      out.put(i + 1 == v.size() ? '\n' : ' ');
    }
  }
  out << "end\n";
}

inline ModelParams read_checkpoint(std::istream& in) {
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != "clsc-checkpoint") {
    fail_validation("not a checkpoint file");
  }
  if (version != 1) fail_validation("unsupported checkpoint version ", version);
  std::string key;
  Eigen::Index d_w = 0;
  if (!(in >> key >> d_w) || key != "d_w") {
    fail_validation("checkpoint: missing d_w");
  }
  std::map<std::string, Eigen::MatrixXd> tensors;
  while (in >> key && key != "end") {
    if (key != "tensor") fail_validation("checkpoint: unexpected '", key, "'");
    std::string name;
    Eigen::Index rows = 0, cols = 0;
    if (!(in >> name >> rows >> cols) || rows < 0 || cols < 0) {
      fail_validation("checkpoint: bad tensor header");
    }
    Eigen::MatrixXd m(rows, cols);
    std::string tok;
    for (Eigen::Index i = 0; i < rows * cols; ++i) {
      if (!(in >> tok)) fail_validation("checkpoint: truncated ", name);
      double x = 0.0;
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), x);
      if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        fail_validation("checkpoint: bad value '", tok, "' in ", name);
      }
      m.data()[i] = x;
    }
    tensors[name] = std::move(m);
  }
  if (key != "end") fail_validation("checkpoint: missing end marker");

  auto take = [&tensors](const std::string& name) {
    auto it = tensors.find(name);
    if (it == tensors.end()) fail_validation("checkpoint: missing ", name);
    Eigen::MatrixXd m = std::move(it->second);
    tensors.erase(it);
    return m;
  };
  auto take_vector = [&take](const std::string& name) {
    Eigen::MatrixXd m = take(name);
    if (m.cols() != 1) {
      fail_validation("checkpoint: ", name, " must have one column, has ",
                      m.cols());
    }
    return Eigen::VectorXd(m.col(0));
  };
  ModelParams p;
  p.encoder.d_w = d_w;
  p.encoder.attn_w = take_vector("encoder.attn_w");
  for (std::size_t l = 0;; ++l) {
    const std::string base = "encoder.layer" + std::to_string(l);
    if (!tensors.contains(base + ".W")) break;
    DenseLayer layer;
    layer.W = take(base + ".W");
    layer.b = take_vector(base + ".b");
    p.encoder.layers.push_back(std::move(layer));
  }
  p.classifier.W = take("classifier.W");
  p.classifier.b = take_vector("classifier.b");
  if (!tensors.empty()) {
    fail_validation("checkpoint: unknown tensor ", tensors.begin()->first);
  }
  p.encoder.validate();
  if (p.classifier.W.cols() != p.encoder.output_dim() ||
      p.classifier.b.size() != p.classifier.W.rows()) {
    fail_validation("checkpoint: classifier shape does not match encoder");
  }
  return p;
}

inline void save_checkpoint(const std::string& path, const ModelParams& p) {
  std::ofstream out(path);
  if (!out) fail_validation("cannot write checkpoint '", path, "'");
  write_checkpoint(out, p);
}

inline ModelParams load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail_validation("cannot open checkpoint '", path, "'");
  return read_checkpoint(in);
}

}  // namespace clsc
