// Copyright (c) 2026 The accentflow Authors
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

#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "accentflow/autograd.hpp"

namespace af {
namespace nn {

using ag::Var;

// Forward-pass context: training enables dropout, which draws from rng.
struct Mode {
  bool training = false;
  Rng* rng = nullptr;
};

inline Mode eval_mode() { return Mode{false, nullptr}; }
inline Mode train_mode(Rng& rng) { return Mode{true, &rng}; }

using NamedParams = std::vector<std::pair<std::string, Var>>;

struct Module {
  virtual ~Module() = default;
  virtual void params(const std::string& prefix, NamedParams& out) const = 0;

  NamedParams named_params(const std::string& prefix = "") const {
    NamedParams out;
    params(prefix, out);
    return out;
  }
};

inline Tensor kaiming_uniform(std::vector<int> shape, int fan_in, Rng& rng) {
  const real bound = std::sqrt(1.0 / fan_in);
  return Tensor::uniform(std::move(shape), rng, -bound, bound);
}

struct Linear : Module {
  Var w, b;  // y = x * w + b, x is (T, in)
  Linear(int in, int out, Rng& rng)
      : w(ag::leaf(kaiming_uniform({in, out}, in, rng))),
        b(ag::leaf(kaiming_uniform({out}, in, rng))) {}

  Var forward(const Var& x) const { return ag::add_rowvec(ag::matmul(x, w), b); }

  void zero_init() {
    w->value.fill(0.0);
    b->value.fill(0.0);
  }

  void params(const std::string& p, NamedParams& out) const override {
    out.push_back({p + ".weight", w});
    out.push_back({p + ".bias", b});
  }
};

struct Conv1d : Module {
  Var w, b;
  int stride, pad, dilation, groups;
  Conv1d(int cin, int cout, int kernel, Rng& rng, int stride_ = 1, int pad_ = 0,
         int dilation_ = 1, int groups_ = 1)
      : w(ag::leaf(kaiming_uniform({cout, cin / groups_, kernel},
                                   (cin / groups_) * kernel, rng))),
        b(ag::leaf(kaiming_uniform({cout}, (cin / groups_) * kernel, rng))),
        stride(stride_),
        pad(pad_),
        dilation(dilation_),
        groups(groups_) {}

  Var forward(const Var& x) const {
    return ag::conv1d(x, w, b, stride, pad, dilation, groups);
  }

  void params(const std::string& p, NamedParams& out) const override {
    out.push_back({p + ".weight", w});
    out.push_back({p + ".bias", b});
  }
};

struct ConvTranspose1d : Module {
  Var w, b;  // w: [Cin, Cout, K]
  int stride, pad, output_padding;
  ConvTranspose1d(int cin, int cout, int kernel, int stride_, int pad_,
                  int output_padding_, Rng& rng)
      : w(ag::leaf(kaiming_uniform({cin, cout, kernel}, cin * kernel, rng))),
        b(ag::leaf(kaiming_uniform({cout}, cin * kernel, rng))),
        stride(stride_),
        pad(pad_),
        output_padding(output_padding_) {}

  Var forward(const Var& x) const {
    return ag::conv_transpose1d(x, w, b, stride, pad, output_padding);
  }

  void params(const std::string& p, NamedParams& out) const override {
    out.push_back({p + ".weight", w});
    out.push_back({p + ".bias", b});
  }
};

struct LayerNorm : Module {
  Var gain, bias;
  explicit LayerNorm(int dim)
      : gain(ag::leaf(Tensor::full({dim}, 1.0))),
        bias(ag::leaf(Tensor::zeros({dim}))) {}

  Var forward(const Var& x) const { return ag::layer_norm(x, gain, bias); }

  void params(const std::string& p, NamedParams& out) const override {
    out.push_back({p + ".gain", gain});
    out.push_back({p + ".bias", bias});
  }
};

struct Embedding : Module {
  Var table;  // [V, H]
  Embedding(int vocab, int dim, Rng& rng)
      : table(ag::leaf(
            Tensor::normal({vocab, dim}, rng, 0.0, 1.0 / std::sqrt(dim)))) {}

  Var forward(const std::vector<int>& ids) const {
    return ag::embedding(table, ids);
  }

  void params(const std::string& p, NamedParams& out) const override {
    out.push_back({p + ".table", table});
  }
};

inline Tensor sinusoidal_positions(int T, int H) {
  Tensor pe({T, H});
  for (int t = 0; t < T; ++t)
    for (int i = 0; i < H; ++i) {
      const double angle =
          t / std::pow(10000.0, 2.0 * (i / 2) / static_cast<double>(H));
      pe.at(t, i) = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  return pe;
}

struct MultiHeadAttention : Module {
  int heads, head_dim;
  Linear wq, wk, wv, wo;
  MultiHeadAttention(int dim, int heads_, Rng& rng)
      : heads(heads_),
        head_dim(dim / heads_),
        wq(dim, dim, rng),
        wk(dim, dim, rng),
        wv(dim, dim, rng),
        wo(dim, dim, rng) {
    AF_CHECK(dim % heads_ == 0, "attention: dim must divide by heads");
  }

  Var forward(const Var& x) const {
    const Var q = wq.forward(x), k = wk.forward(x), v = wv.forward(x);
    const real scale = 1.0 / std::sqrt(static_cast<real>(head_dim));
    Var ctx;
    for (int h = 0; h < heads; ++h) {
      const Var qh = ag::slice_cols(q, h * head_dim, head_dim);
      const Var kh = ag::slice_cols(k, h * head_dim, head_dim);
      const Var vh = ag::slice_cols(v, h * head_dim, head_dim);
      const Var att = ag::softmax_rows(
          ag::mul_scalar(ag::matmul(qh, ag::transpose2d(kh)), scale));
      const Var ch = ag::matmul(att, vh);
      ctx = h == 0 ? ch : ag::concat_cols(ctx, ch);
    }
    return wo.forward(ctx);
  }

  void params(const std::string& p, NamedParams& out) const override {
    wq.params(p + ".wq", out);
    wk.params(p + ".wk", out);
    wv.params(p + ".wv", out);
    wo.params(p + ".wo", out);
  }
};

// Feed-forward Transformer block: self-attention plus a convolutional
// feed-forward, both with residual connections and post-layer-norm.
struct FftBlock : Module {
  MultiHeadAttention attn;
  LayerNorm ln1, ln2;
  Conv1d ff1, ff2;
  real p_dropout;

  FftBlock(int dim, int heads, int ffn_dim, int kernel, real p_dropout_, Rng& rng)
      : attn(dim, heads, rng),
        ln1(dim),
        ln2(dim),
        ff1(dim, ffn_dim, kernel, rng, 1, kernel / 2),
        ff2(ffn_dim, dim, kernel, rng, 1, kernel / 2),
        p_dropout(p_dropout_) {}

  Var forward(const Var& x, const Mode& mode) const {
    Var a = ag::dropout(attn.forward(x), p_dropout, mode.training, *pick(mode));
    Var y = ln1.forward(ag::add(x, a));
    Var f = ag::conv_to_seq(
        ff2.forward(ag::relu(ff1.forward(ag::seq_to_conv(y)))));
    f = ag::dropout(f, p_dropout, mode.training, *pick(mode));
    return ln2.forward(ag::add(y, f));
  }

  void params(const std::string& p, NamedParams& out) const override {
    attn.params(p + ".attn", out);
    ln1.params(p + ".ln1", out);
    ln2.params(p + ".ln2", out);
    ff1.params(p + ".ff1", out);
    ff2.params(p + ".ff2", out);
  }

 private:
  static Rng* pick(const Mode& m) {
    static Rng dummy(0);
    return m.training ? m.rng : &dummy;
  }
};

// The recurring "multiple layers of Conv1d, ReLU, LayerNorm, Dropout" stack.
struct ConvReluNormStack : Module {
  std::vector<std::unique_ptr<Conv1d>> convs;
  std::vector<std::unique_ptr<LayerNorm>> norms;
  real p_dropout;

  ConvReluNormStack(int cin, int hidden, int layers, int kernel, real p_dropout_,
                    Rng& rng)
      : p_dropout(p_dropout_) {
    AF_CHECK(layers >= 1, "conv stack needs at least one layer");
    for (int i = 0; i < layers; ++i) {
      convs.push_back(std::make_unique<Conv1d>(i == 0 ? cin : hidden, hidden,
                                               kernel, rng, 1, kernel / 2));
      norms.push_back(std::make_unique<LayerNorm>(hidden));
    }
  }

  // x: (T, Cin) -> (T, hidden)
  Var forward(const Var& x, const Mode& mode) const {
    Var h = x;
    for (size_t i = 0; i < convs.size(); ++i) {
      h = ag::conv_to_seq(convs[i]->forward(ag::seq_to_conv(h)));
      h = ag::relu(h);
      h = norms[i]->forward(h);
      if (mode.training)
        h = ag::dropout(h, p_dropout, true, *mode.rng);
    }
    return h;
  }

  void params(const std::string& p, NamedParams& out) const override {
    for (size_t i = 0; i < convs.size(); ++i) {
      convs[i]->params(p + ".conv" + std::to_string(i), out);
      norms[i]->params(p + ".ln" + std::to_string(i), out);
    }
  }
};

}  // namespace nn
}  // namespace af
