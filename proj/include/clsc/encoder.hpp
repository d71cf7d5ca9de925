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

// Mention feature extractor.
//
//   r_a = mean of the mention token vectors
//   r_c = sum_j beta_j h_j,  beta = softmax_j(w . tanh(h_j))
//   z   = q([r_a; r_c])
//
// q is a stack of ReLU layers followed by a linear output layer. Forward
// and backward run one sample at a time so that a sample whose output
// gradient is zero contributes exactly zero to every accumulator.

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "clsc/error.hpp"
#include "clsc/types.hpp"

namespace clsc {

struct DenseLayer {
  Eigen::MatrixXd W;  // out x in
  Eigen::VectorXd b;  // out
};

struct EncoderParams {
  Eigen::VectorXd attn_w;
  std::vector<DenseLayer> layers;  // hidden ReLU layers, then linear output
  Eigen::Index d_w = 0;

  Eigen::Index d_h() const { return attn_w.size(); }
  Eigen::Index input_dim() const { return d_w + d_h(); }
  Eigen::Index output_dim() const {
    return layers.empty() ? 0 : layers.back().W.rows();
  }
  std::size_t hidden_layers() const {
    return layers.empty() ? 0 : layers.size() - 1;
  }

  static EncoderParams zeros(Eigen::Index d_w, Eigen::Index d_h,
                             std::size_t n_hidden, Eigen::Index hidden,
                             Eigen::Index d_z) {
    EncoderParams p;
    p.d_w = d_w;
    p.attn_w = Eigen::VectorXd::Zero(d_h);
    Eigen::Index in = d_w + d_h;
    for (std::size_t l = 0; l <= n_hidden; ++l) {
      const Eigen::Index out = l == n_hidden ? d_z : hidden;
      p.layers.push_back(
          {Eigen::MatrixXd::Zero(out, in), Eigen::VectorXd::Zero(out)});
      in = out;
    }
    return p;
  }

  // Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero.
  static EncoderParams init(Eigen::Index d_w, Eigen::Index d_h,
                            std::size_t n_hidden, Eigen::Index hidden,
                            Eigen::Index d_z, std::mt19937_64& rng) {
    EncoderParams p = zeros(d_w, d_h, n_hidden, hidden, d_z);
    auto fill = [&rng](auto& m, double fan_in) {
      const double bound = 1.0 / std::sqrt(fan_in);
      std::uniform_real_distribution<double> u(-bound, bound);
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = u(rng);
    };
    fill(p.attn_w, static_cast<double>(d_h));
    for (auto& layer : p.layers) {
      fill(layer.W, static_cast<double>(layer.W.cols()));
    }
    return p;
  }

  void validate() const {
    if (layers.empty()) fail_validation("encoder has no output layer");
    Eigen::Index in = input_dim();
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const auto& layer = layers[l];
      if (layer.W.cols() != in || layer.b.size() != layer.W.rows()) {
        fail_validation("encoder layer ", l, " has inconsistent shape");
      }
      if (!layer.W.allFinite() || !layer.b.allFinite()) {
        fail_validation("encoder layer ", l, " has non-finite parameters");
      }
      in = layer.W.rows();
    }
    if (!attn_w.allFinite()) fail_validation("non-finite attention vector");
  }
};

inline Eigen::VectorXd average_mention(const Eigen::MatrixXd& tokens) {
  if (tokens.rows() == 0) fail_validation("average_mention: no tokens");
  return tokens.colwise().mean().transpose();
}

inline Eigen::VectorXd softmax(const Eigen::VectorXd& x) {
  const double mx = x.maxCoeff();
  Eigen::VectorXd e = (x.array() - mx).exp().matrix();
  return e / e.sum();
}

struct AttentionOutput {
  Eigen::VectorXd pooled;
  Eigen::VectorXd beta;
};

inline AttentionOutput attention(const Eigen::MatrixXd& context,
                                 const Eigen::VectorXd& attn_w) {
  if (context.rows() == 0) fail_validation("attention_pool: no tokens");
  if (context.cols() != attn_w.size()) {
    fail_validation("attention_pool: token width ", context.cols(),
                    " != attention width ", attn_w.size());
  }
  const Eigen::VectorXd scores = context.array().tanh().matrix() * attn_w;
  AttentionOutput out;
  out.beta = softmax(scores);
  out.pooled = context.transpose() * out.beta;
  return out;
}

inline Eigen::VectorXd attention_pool(const Eigen::MatrixXd& context,
                                      const Eigen::VectorXd& attn_w) {
  return attention(context, attn_w).pooled;
}

// Intermediates of one sample's forward pass.
struct SampleTape {
  Eigen::MatrixXd context;
  Eigen::MatrixXd tanh_context;
  Eigen::VectorXd beta;
  std::vector<Eigen::VectorXd> inputs;  // input of each layer
  std::vector<Eigen::VectorXd> pre;     // pre-activation of each hidden layer
};

struct EncodedBatch {
  Eigen::MatrixXd Z;  // B x d_z
  std::vector<SampleTape> tape;
};

inline Eigen::VectorXd encode_sample(const EncoderParams& params,
                                     const MentionSample& s,
                                     SampleTape* tape = nullptr) {
  if (s.mention.cols() != params.d_w || s.context.cols() != params.d_h()) {
    fail_validation("sample '", s.id, "' has token widths (",
                    s.mention.cols(), ", ", s.context.cols(),
                    "), encoder expects (", params.d_w, ", ", params.d_h(),
                    ")");
  }
  const AttentionOutput att = attention(s.context, params.attn_w);
  Eigen::VectorXd a(params.input_dim());
  a << average_mention(s.mention), att.pooled;
  if (tape) {
    tape->context = s.context;
    tape->tanh_context = s.context.array().tanh().matrix();
    tape->beta = att.beta;
    tape->inputs.clear();
    tape->pre.clear();
  }
  const std::size_t last = params.layers.size() - 1;
  for (std::size_t l = 0; l < last; ++l) {
    const auto& layer = params.layers[l];
    Eigen::VectorXd pre = layer.W * a + layer.b;
    if (tape) {
      tape->inputs.push_back(a);
      tape->pre.push_back(pre);
    }
    a = pre.cwiseMax(0.0);
  }
  if (tape) tape->inputs.push_back(a);
  return params.layers[last].W * a + params.layers[last].b;
}

inline EncodedBatch encode(const EncoderParams& params,
                           std::span<const MentionSample* const> samples) {
  if (params.layers.empty()) fail_validation("encoder has no output layer");
  EncodedBatch out;
  const auto B = static_cast<Eigen::Index>(samples.size());
  out.Z.resize(B, params.output_dim());
  out.tape.resize(samples.size());
  for (Eigen::Index i = 0; i < B; ++i) {
    out.Z.row(i) = encode_sample(params, *samples[i], &out.tape[i]).transpose();
  }
  if (!out.Z.allFinite()) fail_numerical("encoder produced non-finite output");
  return out;
}

// Fills batch.Z and returns the tape.
inline EncodedBatch encode(const EncoderParams& params, Batch& batch) {
  EncodedBatch out = encode(params, batch.samples);
  batch.Z = out.Z;
  return out;
}

struct EncoderGradient {
  EncoderParams params;    // same layout as the encoder, holding gradients
  Eigen::MatrixXd inputs;  // dL/d[r_a; r_c], B x (d_w + d_h)
};

inline EncoderGradient encode_backward(const EncoderParams& params,
                                       const EncodedBatch& encoded,
                                       const Eigen::MatrixXd& dZ) {
  const auto B = static_cast<Eigen::Index>(encoded.tape.size());
  if (dZ.rows() != B || dZ.cols() != params.output_dim()) {
    fail_validation("encode_backward: gradient is ", dZ.rows(), "x",
                    dZ.cols(), ", expected ", B, "x", params.output_dim());
  }
  EncoderGradient grad;
  grad.params = EncoderParams::zeros(params.d_w, params.d_h(),
                                     params.hidden_layers(),
                                     params.layers.front().W.rows(),
                                     params.output_dim());
  grad.inputs = Eigen::MatrixXd::Zero(B, params.input_dim());
  const std::size_t L = params.layers.size();
  for (Eigen::Index i = 0; i < B; ++i) {
    const SampleTape& t = encoded.tape[i];
    if (t.inputs.size() != L) fail_validation("encode_backward: stale tape");
    Eigen::VectorXd g = dZ.row(i).transpose();
    for (std::size_t l = L; l-- > 0;) {
      grad.params.layers[l].W.noalias() += g * t.inputs[l].transpose();
      grad.params.layers[l].b += g;
      Eigen::VectorXd ga = params.layers[l].W.transpose() * g;
      if (l > 0) {
        g = (t.pre[l - 1].array() > 0.0).select(ga.array(), 0.0).matrix();
      } else {
        g = std::move(ga);
      }
    }
    grad.inputs.row(i) = g.transpose();
    // r_c = C^T beta, beta = softmax(tanh(C) w)
    const Eigen::VectorXd d_pooled = g.tail(params.d_h());
    const Eigen::VectorXd d_beta = t.context * d_pooled;
    const double mean = t.beta.dot(d_beta);
    const Eigen::VectorXd d_scores =
        (t.beta.array() * (d_beta.array() - mean)).matrix();
    grad.params.attn_w.noalias() += t.tanh_context.transpose() * d_scores;
  }
  return grad;
}

}  // namespace clsc
