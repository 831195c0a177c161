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

#include <memory>
#include <string>
#include <vector>

#include "accentflow/dsp.hpp"
#include "accentflow/frontend.hpp"
#include "accentflow/nn.hpp"

namespace af {

enum class AblationMode { kFull, kNoBnEncoder, kNoBnDecoder, kNoBnBoth };

inline std::string to_string(AblationMode m) {
  switch (m) {
    case AblationMode::kFull: return "full";
    case AblationMode::kNoBnEncoder: return "no_bn_encoder";
    case AblationMode::kNoBnDecoder: return "no_bn_decoder";
    case AblationMode::kNoBnBoth: return "no_bn_both";
  }
  return "full";
}

inline AblationMode ablation_from_string(const std::string& s) {
  if (s == "full") return AblationMode::kFull;
  if (s == "no_bn_encoder") return AblationMode::kNoBnEncoder;
  if (s == "no_bn_decoder") return AblationMode::kNoBnDecoder;
  if (s == "no_bn_both") return AblationMode::kNoBnBoth;
  throw Error("unknown ablation mode: " + s);
}

struct ModelConfig {
  int hidden = 192;       // H
  int latent = 192;       // C
  int speaker_dim = 256;  // S
  int num_speakers = 8;
  int vocab_size = 64;

  int text_blocks = 4;
  int prior_blocks = 4;
  int attn_heads = 2;
  int ffn_mult = 4;
  int ffn_kernel = 3;

  int enc_layers = 4;  // BN/posterior/BN-decoder/duration conv stacks
  int enc_kernel = 5;
  real p_dropout = 0.1;

  int flow_layers = 4;
  int flow_hidden = 192;
  int flow_kernel = 5;
  bool flow_volume_preserving = true;

  int decoder_channels = 512;
  std::vector<int> upsample_factors = {5, 5, 4, 2};
  std::vector<int> upsample_kernels = {10, 10, 8, 4};
  std::vector<int> resblock_kernels = {3, 7, 11};
  std::vector<int> resblock_dilations = {1, 3, 5};

  std::vector<int> mpd_periods = {2, 3, 5, 7, 11};
  std::vector<int> mpd_channels = {32, 128, 512, 1024};
  int msd_scales = 3;
  std::vector<int> msd_channels = {16, 64, 256, 256};

  AblationMode ablation = AblationMode::kFull;

  bool operator==(const ModelConfig&) const = default;

  // z_ac channel count; the no_bn_both prior lives in BN space
  int acoustic_channels() const {
    return ablation == AblationMode::kNoBnBoth ? kBnDim : latent;
  }

  bool has_bn_encoder() const {
    return ablation == AblationMode::kFull ||
           ablation == AblationMode::kNoBnDecoder;
  }
  bool has_bn_decoder() const {
    return ablation == AblationMode::kFull ||
           ablation == AblationMode::kNoBnEncoder;
  }

  void validate() const {
    AF_CHECK(hidden >= 2 && latent >= 2 && speaker_dim >= 1, "dims too small");
    AF_CHECK(hidden % attn_heads == 0, "hidden must divide by attn_heads");
    AF_CHECK(acoustic_channels() % 2 == 0,
             "acoustic channels must be even for coupling splits");
    AF_CHECK(num_speakers >= 1 && vocab_size >= 2, "registry sizes invalid");
    AF_CHECK(upsample_factors.size() == upsample_kernels.size(),
             "upsample factor/kernel lists differ");
    int prod = 1;
    for (int f : upsample_factors) prod *= f;
    AF_CHECK(prod == kHop, "upsample factors must multiply to the hop size");
    AF_CHECK(decoder_channels >> upsample_factors.size() >= 1,
             "decoder_channels too small for the upsample stages");
    for (int k : resblock_kernels) AF_CHECK(k % 2 == 1, "resblock kernels odd");
    AF_CHECK(msd_channels.size() == 4, "msd_channels must list 4 widths");
    AF_CHECK(!mpd_channels.empty() && !mpd_periods.empty(), "mpd config empty");
  }

  static ModelConfig toy(int vocab, int speakers,
                         AblationMode mode = AblationMode::kFull) {
    ModelConfig c;
    c.hidden = 32;
    c.latent = 32;
    c.speaker_dim = 16;
    c.num_speakers = speakers;
    c.vocab_size = vocab;
    c.text_blocks = 2;
    c.prior_blocks = 2;
    c.ffn_mult = 2;
    c.enc_layers = 2;
    c.flow_hidden = 32;
    c.decoder_channels = 32;
    c.resblock_kernels = {3};
    c.resblock_dilations = {1, 3};
    c.mpd_channels = {4, 8, 16, 16};
    c.msd_channels = {4, 8, 16, 16};
    c.ablation = mode;
    return c;
  }
};

// Per-frame diagonal Gaussian over a latent channel dimension.
struct GaussianVar {
  ag::Var mean;
  ag::Var log_var;

  int frames() const { return mean->value.dim(0); }
  int channels() const { return mean->value.dim(1); }
};

enum class LatentKind { kPronunciation, kAcoustic };

struct LatentVar {
  ag::Var values;
  LatentKind kind;
};

// z = mean + exp(0.5 log_var) * eps * noise_scale
inline LatentVar reparam_sample(const GaussianVar& g, real noise_scale, Rng& rng,
                                LatentKind kind) {
  AF_CHECK(noise_scale >= 0.0, "reparam_sample: negative noise_scale");
  Tensor eps = Tensor::normal(g.mean->value.shape, rng);
  for (real& v : eps.data) v *= noise_scale;
  ag::Var z = ag::add(
      g.mean,
      ag::mul(ag::exp_(ag::mul_scalar(g.log_var, 0.5)), ag::constant(eps)));
  return LatentVar{z, kind};
}

// Repeats row i of the phoneme-level sequence durations[i] times.
inline ag::Var length_regulate(const ag::Var& h, const std::vector<int>& durations) {
  AF_CHECK(h->value.rank() == 2, "length_regulate: rank 2 input expected");
  AF_CHECK(static_cast<int>(durations.size()) == h->value.dim(0),
           "length_regulate: durations length != phoneme count");
  std::vector<int> idx;
  for (size_t i = 0; i < durations.size(); ++i) {
    AF_CHECK(durations[i] > 0, "length_regulate: nonpositive duration");
    for (int r = 0; r < durations[i]; ++r) idx.push_back(static_cast<int>(i));
  }
  return ag::gather_rows(h, idx);
}

namespace model_detail {

inline GaussianVar split_gaussian(const ag::Var& x) {
  const int C2 = x->value.dim(1);
  return GaussianVar{ag::slice_cols(x, 0, C2 / 2),
                     ag::slice_cols(x, C2 / 2, C2 / 2)};
}

// swap channel halves; its own inverse
inline ag::Var flip_halves(const ag::Var& x) {
  const int C = x->value.dim(1);
  return ag::concat_cols(ag::slice_cols(x, C / 2, C / 2),
                         ag::slice_cols(x, 0, C / 2));
}

}  // namespace model_detail

// Residual affine coupling conditioned on a speaker vector; mean-only when
// volume_preserving (log-determinant identically zero).
struct CouplingLayer : nn::Module {
  int half, out_mult;
  bool volume_preserving;
  nn::Conv1d conv_in, conv_mid, conv_out;
  nn::Linear spk_proj;

  CouplingLayer(int channels, int hidden, int kernel, int speaker_dim,
                bool volume_preserving_, Rng& rng)
      : half(channels / 2),
        out_mult(volume_preserving_ ? 1 : 2),
        volume_preserving(volume_preserving_),
        conv_in(half, hidden, kernel, rng, 1, kernel / 2),
        conv_mid(hidden, hidden, kernel, rng, 1, kernel / 2),
        conv_out(hidden, half * out_mult, 1, rng),
        spk_proj(speaker_dim, hidden, rng) {
    AF_CHECK(channels % 2 == 0, "coupling: channel count must be even");
    // near-identity at init, but off zero so gradients reach the inner convs
    // on the very first step
    for (real& v : conv_out.w->value.data) v *= 0.05;
    for (real& v : conv_out.b->value.data) v *= 0.05;
  }

  // exact identity transform (zeroed output projection)
  void make_identity() {
    conv_out.w->value.fill(0.0);
    conv_out.b->value.fill(0.0);
  }

  // shared stats net; h0 is the untouched half
  std::pair<ag::Var, ag::Var> stats(const ag::Var& h0,
                                    const ag::Var& spk_vec) const {
    ag::Var h = ag::conv_to_seq(conv_in.forward(ag::seq_to_conv(h0)));
    h = ag::add_rowvec(h, spk_proj.forward(spk_vec));
    h = ag::relu(h);
    h = ag::relu(ag::conv_to_seq(conv_mid.forward(ag::seq_to_conv(h))));
    ag::Var out = ag::conv_to_seq(conv_out.forward(ag::seq_to_conv(h)));
    ag::Var m = ag::slice_cols(out, 0, half);
    ag::Var logs = volume_preserving
                       ? ag::constant(Tensor::zeros({out->value.dim(0), half}))
                       : ag::slice_cols(out, half, half);
    return {m, logs};
  }

  // returns transformed sequence and total log|det|
  std::pair<ag::Var, ag::Var> forward(const ag::Var& x,
                                      const ag::Var& spk_vec) const {
    const int C = x->value.dim(1);
    AF_CHECK(C == 2 * half, "coupling: channel mismatch");
    ag::Var h0 = ag::slice_cols(x, 0, half);
    ag::Var h1 = ag::slice_cols(x, half, half);
    auto [m, logs] = stats(h0, spk_vec);
    ag::Var y1 = ag::add(ag::mul(h1, ag::exp_(logs)), m);
    ag::Var logdet = volume_preserving ? ag::constant(Tensor::scalar(0.0))
                                       : ag::sum_all(logs);
    return {ag::concat_cols(h0, y1), logdet};
  }

  ag::Var inverse(const ag::Var& y, const ag::Var& spk_vec) const {
    ag::Var h0 = ag::slice_cols(y, 0, half);
    ag::Var y1 = ag::slice_cols(y, half, half);
    auto [m, logs] = stats(h0, spk_vec);
    ag::Var x1 = ag::mul(ag::sub(y1, m), ag::exp_(ag::neg(logs)));
    return ag::concat_cols(h0, x1);
  }

  void params(const std::string& p, nn::NamedParams& out) const override {
    conv_in.params(p + ".conv_in", out);
    conv_mid.params(p + ".conv_mid", out);
    conv_out.params(p + ".conv_out", out);
    spk_proj.params(p + ".spk", out);
  }
};

// HiFi-GAN style residual block (two convs per dilation, additive skip).
struct ResBlock : nn::Module {
  std::vector<std::unique_ptr<nn::Conv1d>> convs1, convs2;

  ResBlock(int channels, int kernel, const std::vector<int>& dilations, Rng& rng) {
    for (int d : dilations) {
      convs1.push_back(std::make_unique<nn::Conv1d>(channels, channels, kernel,
                                                    rng, 1, (kernel - 1) * d / 2,
                                                    d));
      convs2.push_back(std::make_unique<nn::Conv1d>(channels, channels, kernel,
                                                    rng, 1, (kernel - 1) / 2));
    }
  }

  ag::Var forward(const ag::Var& x) const {
    ag::Var h = x;
    for (size_t i = 0; i < convs1.size(); ++i) {
      ag::Var t = convs1[i]->forward(ag::leaky_relu(h, 0.1));
      t = convs2[i]->forward(ag::leaky_relu(t, 0.1));
      h = ag::add(h, t);
    }
    return h;
  }

  void params(const std::string& p, nn::NamedParams& out) const override {
    for (size_t i = 0; i < convs1.size(); ++i) {
      convs1[i]->params(p + ".c1_" + std::to_string(i), out);
      convs2[i]->params(p + ".c2_" + std::to_string(i), out);
    }
  }
};

// Waveform decoder: conv_pre, transposed-conv upsampling to the hop size,
// multi-kernel residual stacks, tanh output.
struct WaveDecoder : nn::Module {
  nn::Conv1d conv_pre;
  std::vector<std::unique_ptr<nn::ConvTranspose1d>> ups;
  std::vector<std::unique_ptr<ResBlock>> blocks;  // stages x kernels
  nn::Conv1d conv_post;
  int num_kernels;

  WaveDecoder(const ModelConfig& cfg, Rng& rng)
      : conv_pre(cfg.acoustic_channels(), cfg.decoder_channels, 7, rng, 1, 3),
        conv_post(stage_channels(cfg, static_cast<int>(cfg.upsample_factors.size())),
                  1, 7, rng, 1, 3),
        num_kernels(static_cast<int>(cfg.resblock_kernels.size())) {
    for (size_t i = 0; i < cfg.upsample_factors.size(); ++i) {
      const int u = cfg.upsample_factors[i];
      const int K = cfg.upsample_kernels[i];
      const int pad = (K - u + 1) / 2;
      const int opad = (K - u) % 2 == 0 ? 0 : 1;
      ups.push_back(std::make_unique<nn::ConvTranspose1d>(
          stage_channels(cfg, static_cast<int>(i)),
          stage_channels(cfg, static_cast<int>(i) + 1), K, u, pad, opad, rng));
      for (int k : cfg.resblock_kernels)
        blocks.push_back(std::make_unique<ResBlock>(
            stage_channels(cfg, static_cast<int>(i) + 1), k,
            cfg.resblock_dilations, rng));
    }
  }

  static int stage_channels(const ModelConfig& cfg, int stage) {
    return std::max(1, cfg.decoder_channels >> stage);
  }

  // z: (L, C_ac) -> waveform (L * hop), bounded by tanh
  ag::Var forward(const ag::Var& z) const {
    ag::Var h = conv_pre.forward(ag::seq_to_conv(z));
    for (size_t i = 0; i < ups.size(); ++i) {
      h = ups[i]->forward(ag::leaky_relu(h, 0.1));
      ag::Var acc;
      for (int k = 0; k < num_kernels; ++k) {
        ag::Var r = blocks[i * num_kernels + static_cast<size_t>(k)]->forward(h);
        acc = k == 0 ? r : ag::add(acc, r);
      }
      h = ag::mul_scalar(acc, 1.0 / num_kernels);
    }
    h = ag::tanh_(conv_post.forward(ag::leaky_relu(h, 0.1)));
    return ag::reshape(h, {h->value.dim(2)});
  }

  void params(const std::string& p, nn::NamedParams& out) const override {
    conv_pre.params(p + ".pre", out);
    for (size_t i = 0; i < ups.size(); ++i) {
      ups[i]->params(p + ".up" + std::to_string(i), out);
      for (int k = 0; k < num_kernels; ++k)
        blocks[i * num_kernels + static_cast<size_t>(k)]->params(
            p + ".mrf" + std::to_string(i) + "_" + std::to_string(k), out);
    }
    conv_post.params(p + ".post", out);
  }
};

struct DiscOutput {
  ag::Var scores;                 // final score map
  std::vector<ag::Var> features;  // intermediate activations
};

namespace model_detail {

// (L) waveform -> (p, 1, ceil(L/p)) columns, zero padded at the tail
inline ag::Var period_fold(const ag::Var& x, int p) {
  AF_CHECK(x->value.rank() == 1, "period_fold: rank 1 expected");
  const int L = x->value.dim(0);
  const int Tp = (L + p - 1) / p;
  Tensor out({p, 1, Tp});
  for (int j = 0; j < p; ++j)
    for (int t = 0; t < Tp; ++t) {
      const int src = t * p + j;
      out.at(j, 0, t) = src < L ? x->value.data[static_cast<size_t>(src)] : 0.0;
    }
  return ag::make_node(std::move(out), {x}, [x, p, L, Tp](ag::Node& n) {
    for (int j = 0; j < p; ++j)
      for (int t = 0; t < Tp; ++t) {
        const int src = t * p + j;
        if (src < L) x->grad.data[static_cast<size_t>(src)] += n.grad.at(j, 0, t);
      }
  });
}

}  // namespace model_detail

struct PeriodDiscriminator : nn::Module {
  int period;
  std::vector<std::unique_ptr<nn::Conv1d>> convs;
  nn::Conv1d conv_post;

  PeriodDiscriminator(int period_, const std::vector<int>& channels, Rng& rng)
      : period(period_), conv_post(channels.back(), 1, 3, rng, 1, 1) {
    int prev = 1;
    for (int ch : channels) {
      convs.push_back(std::make_unique<nn::Conv1d>(prev, ch, 5, rng, 3, 2));
      prev = ch;
    }
  }

  DiscOutput forward(const ag::Var& wav) const {
    ag::Var h = model_detail::period_fold(wav, period);
    DiscOutput out;
    for (const auto& c : convs) {
      h = ag::leaky_relu(c->forward(h), 0.1);
      out.features.push_back(h);
    }
    out.scores = conv_post.forward(h);
    out.features.push_back(out.scores);
    return out;
  }

  void params(const std::string& p, nn::NamedParams& out) const override {
    for (size_t i = 0; i < convs.size(); ++i)
      convs[i]->params(p + ".conv" + std::to_string(i), out);
    conv_post.params(p + ".post", out);
  }
};

struct ScaleDiscriminator : nn::Module {
  std::vector<std::unique_ptr<nn::Conv1d>> convs;
  nn::Conv1d conv_post;

  ScaleDiscriminator(const std::vector<int>& ch, Rng& rng)
      : conv_post(ch[3], 1, 3, rng, 1, 1) {
    convs.push_back(std::make_unique<nn::Conv1d>(1, ch[0], 15, rng, 1, 7));
    convs.push_back(std::make_unique<nn::Conv1d>(ch[0], ch[1], 41, rng, 4, 20));
    convs.push_back(std::make_unique<nn::Conv1d>(ch[1], ch[2], 41, rng, 4, 20));
    convs.push_back(std::make_unique<nn::Conv1d>(ch[2], ch[3], 5, rng, 1, 2));
  }

  DiscOutput forward(const ag::Var& wav3) const {
    ag::Var h = wav3;
    DiscOutput out;
    for (const auto& c : convs) {
      h = ag::leaky_relu(c->forward(h), 0.1);
      out.features.push_back(h);
    }
    out.scores = conv_post.forward(h);
    out.features.push_back(out.scores);
    return out;
  }

  void params(const std::string& p, nn::NamedParams& out) const override {
    for (size_t i = 0; i < convs.size(); ++i)
      convs[i]->params(p + ".conv" + std::to_string(i), out);
    conv_post.params(p + ".post", out);
  }
};

// All trainable components plus the ablation-mode wiring between them.
class AccentModel {
 public:
  ModelConfig cfg;

  AccentModel(const ModelConfig& config, Rng& rng) : cfg(config) {
    cfg.validate();
    phoneme_emb_ = std::make_unique<nn::Embedding>(cfg.vocab_size, cfg.hidden, rng);
    for (int i = 0; i < cfg.text_blocks; ++i)
      text_blocks_.push_back(make_block(rng));
    for (int i = 0; i < cfg.prior_blocks; ++i)
      prior_blocks_.push_back(make_block(rng));
    prior_head_ = std::make_unique<nn::Linear>(cfg.hidden, prior_head_width(), rng);

    if (cfg.has_bn_encoder()) {
      bn_enc_stack_ = std::make_unique<nn::ConvReluNormStack>(
          kBnDim, cfg.hidden, cfg.enc_layers, cfg.enc_kernel, cfg.p_dropout, rng);
      bn_enc_head_ = std::make_unique<nn::Linear>(cfg.hidden, 2 * cfg.latent, rng);
    }
    if (cfg.has_bn_decoder()) {
      const int in_dim =
          cfg.ablation == AblationMode::kNoBnEncoder ? kBnDim : cfg.latent;
      bn_dec_in_ = std::make_unique<nn::Linear>(in_dim, cfg.hidden, rng);
      bn_dec_spk_ = std::make_unique<nn::Linear>(cfg.speaker_dim, cfg.hidden, rng);
      bn_dec_stack_ = std::make_unique<nn::ConvReluNormStack>(
          cfg.hidden, cfg.hidden, cfg.enc_layers, cfg.enc_kernel, cfg.p_dropout,
          rng);
      bn_dec_head_ =
          std::make_unique<nn::Linear>(cfg.hidden, 2 * cfg.acoustic_channels(), rng);
    }

    post_stack_ = std::make_unique<nn::ConvReluNormStack>(
        kNumMels, cfg.hidden, cfg.enc_layers, cfg.enc_kernel, cfg.p_dropout, rng);
    post_head_ = std::make_unique<nn::Conv1d>(
        cfg.hidden, 2 * cfg.acoustic_channels(), 1, rng);

    dur_stack_ = std::make_unique<nn::ConvReluNormStack>(
        cfg.hidden, cfg.hidden, cfg.enc_layers, cfg.enc_kernel, cfg.p_dropout, rng);
    dur_head_ = std::make_unique<nn::Linear>(cfg.hidden, 1, rng);

    speaker_emb_ =
        std::make_unique<nn::Embedding>(cfg.num_speakers, cfg.speaker_dim, rng);
    for (int i = 0; i < cfg.flow_layers; ++i)
      flow_.push_back(std::make_unique<CouplingLayer>(
          cfg.acoustic_channels(), cfg.flow_hidden, cfg.flow_kernel,
          cfg.speaker_dim, cfg.flow_volume_preserving, rng));

    decoder_ = std::make_unique<WaveDecoder>(cfg, rng);
    for (int p : cfg.mpd_periods)
      mpd_.push_back(std::make_unique<PeriodDiscriminator>(p, cfg.mpd_channels, rng));
    for (int i = 0; i < cfg.msd_scales; ++i)
      msd_.push_back(std::make_unique<ScaleDiscriminator>(cfg.msd_channels, rng));
  }

  // ---- text side ----

  // phoneme ids -> (P, H)
  ag::Var text_encode(const std::vector<int>& ids,
                      const nn::Mode& mode = nn::eval_mode()) const {
    AF_CHECK(!ids.empty(), "text_encode: empty phoneme sequence");
    ag::Var h = phoneme_emb_->forward(ids);
    h = ag::add(h, ag::constant(nn::sinusoidal_positions(
                        static_cast<int>(ids.size()), cfg.hidden)));
    for (const auto& b : text_blocks_) h = b->forward(h, mode);
    return h;
  }

  // frame-level hidden -> frame-level hidden after the post-LR blocks
  ag::Var prior_hidden(const ag::Var& h_text,
                       const nn::Mode& mode = nn::eval_mode()) const {
    ag::Var h = ag::add(h_text, ag::constant(nn::sinusoidal_positions(
                                    h_text->value.dim(0), cfg.hidden)));
    for (const auto& b : prior_blocks_) h = b->forward(h, mode);
    return h;
  }

  // p(z_pr | c) for the full and no_bn_decoder wirings
  GaussianVar pronunciation_prior(const ag::Var& h_text,
                                  const nn::Mode& mode = nn::eval_mode()) const {
    AF_CHECK(cfg.ablation == AblationMode::kFull ||
                 cfg.ablation == AblationMode::kNoBnDecoder,
             "pronunciation_prior: disabled in mode " + to_string(cfg.ablation));
    return model_detail::split_gaussian(
        prior_head_->forward(prior_hidden(h_text, mode)));
  }

  // BN regression for the no_bn_encoder wiring
  ag::Var predict_bn(const ag::Var& h_text,
                     const nn::Mode& mode = nn::eval_mode()) const {
    AF_CHECK(cfg.ablation == AblationMode::kNoBnEncoder,
             "predict_bn: only available in no_bn_encoder mode");
    return prior_head_->forward(prior_hidden(h_text, mode));
  }

  // BN distribution prediction for the no_bn_both wiring
  GaussianVar predict_bn_distribution(const ag::Var& h_text,
                                      const nn::Mode& mode = nn::eval_mode()) const {
    AF_CHECK(cfg.ablation == AblationMode::kNoBnBoth,
             "predict_bn_distribution: only available in no_bn_both mode");
    return model_detail::split_gaussian(
        prior_head_->forward(prior_hidden(h_text, mode)));
  }

  nn::Linear& prior_head() { return *prior_head_; }

  // ---- BN constraint module ----

  // q(z_pr | BN); bn: (T, 512)
  GaussianVar bn_encode(const ag::Var& bn,
                        const nn::Mode& mode = nn::eval_mode()) const {
    AF_CHECK(cfg.has_bn_encoder(),
             "bn_encode: disabled in mode " + to_string(cfg.ablation));
    AF_CHECK(bn->value.rank() == 2 && bn->value.dim(1) == kBnDim,
             "bn_encode: expected (T, 512) input");
    return model_detail::split_gaussian(
        bn_enc_head_->forward(bn_enc_stack_->forward(bn, mode)));
  }

  // ---- prior encoder ----

  // p(z_ac | z_pr, spk) from the sampled pronunciation latent
  GaussianVar bn_decode(const LatentVar& z_pr, int speaker,
                        const nn::Mode& mode = nn::eval_mode()) const {
    AF_CHECK(z_pr.kind == LatentKind::kPronunciation,
             "bn_decode: latent kind must be pronunciation");
    AF_CHECK(cfg.ablation == AblationMode::kFull,
             "bn_decode: disabled in mode " + to_string(cfg.ablation));
    return bn_decode_impl(z_pr.values, speaker, mode);
  }

  // no_bn_encoder wiring: the BN decoder consumes BN features directly
  GaussianVar bn_decode_from_bn(const ag::Var& bn, int speaker,
                                const nn::Mode& mode = nn::eval_mode()) const {
    AF_CHECK(cfg.ablation == AblationMode::kNoBnEncoder,
             "bn_decode_from_bn: only available in no_bn_encoder mode");
    return bn_decode_impl(bn, speaker, mode);
  }

  ag::Var speaker_vector(int speaker) const {
    AF_CHECK(speaker >= 0 && speaker < cfg.num_speakers,
             "speaker index out of range");
    return speaker_emb_->forward({speaker});
  }

  std::pair<ag::Var, ag::Var> flow_forward(const LatentVar& z_ac,
                                           int speaker) const {
    AF_CHECK(z_ac.kind == LatentKind::kAcoustic,
             "flow_forward: latent kind must be acoustic");
    ag::Var spk = speaker_vector(speaker);
    ag::Var h = z_ac.values;
    ag::Var logdet = ag::constant(Tensor::scalar(0.0));
    for (const auto& layer : flow_) {
      h = model_detail::flip_halves(h);
      auto [y, ld] = layer->forward(h, spk);
      h = y;
      logdet = ag::add(logdet, ld);
    }
    return {h, logdet};
  }

  LatentVar flow_inverse(const ag::Var& u, int speaker) const {
    ag::Var spk = speaker_vector(speaker);
    ag::Var h = u;
    for (auto it = flow_.rbegin(); it != flow_.rend(); ++it) {
      h = (*it)->inverse(h, spk);
      h = model_detail::flip_halves(h);
    }
    return LatentVar{h, LatentKind::kAcoustic};
  }

  // ---- posterior encoder ----

  GaussianVar posterior_encode(const ag::Var& mel,
                               const nn::Mode& mode = nn::eval_mode()) const {
    AF_CHECK(mel->value.rank() == 2 && mel->value.dim(1) == kNumMels,
             "posterior_encode: expected (T, 80) input");
    ag::Var h = post_stack_->forward(mel, mode);
    ag::Var g = ag::conv_to_seq(post_head_->forward(ag::seq_to_conv(h)));
    return model_detail::split_gaussian(g);
  }

  // ---- decoder / duration / discriminators ----

  ag::Var decode_waveform(const LatentVar& z) const {
    AF_CHECK(z.kind == LatentKind::kAcoustic,
             "decode_waveform: latent kind must be acoustic");
    AF_CHECK(z.values->value.dim(0) >= 1, "decode_waveform: empty latent slice");
    return decoder_->forward(z.values);
  }

  // (P, H) -> P nonnegative frame predictions
  ag::Var duration_predict(const ag::Var& h,
                           const nn::Mode& mode = nn::eval_mode()) const {
    AF_CHECK(h->value.dim(0) >= 1, "duration_predict: empty input");
    ag::Var d = dur_head_->forward(dur_stack_->forward(h, mode));
    return ag::softplus(ag::reshape(d, {d->value.dim(0)}));
  }

  static std::vector<int> round_durations(const Tensor& d_hat) {
    std::vector<int> out;
    out.reserve(d_hat.data.size());
    for (real v : d_hat.data)
      out.push_back(std::max(1, static_cast<int>(std::lround(v))));
    return out;
  }

  std::vector<DiscOutput> discriminate(const ag::Var& wav) const {
    AF_CHECK(wav->value.rank() == 1, "discriminate: rank 1 waveform expected");
    std::vector<DiscOutput> outs;
    for (const auto& d : mpd_) outs.push_back(d->forward(wav));
    ag::Var h = ag::reshape(wav, {1, 1, wav->value.dim(0)});
    for (const auto& d : msd_) {
      outs.push_back(d->forward(h));
      h = ag::avg_pool1d(h, 4, 2, 2);
    }
    return outs;
  }

  // ---- parameter groups ----

  nn::NamedParams generator_params() const {
    nn::NamedParams out;
    phoneme_emb_->params("text.emb", out);
    for (size_t i = 0; i < text_blocks_.size(); ++i)
      text_blocks_[i]->params("text.block" + std::to_string(i), out);
    for (size_t i = 0; i < prior_blocks_.size(); ++i)
      prior_blocks_[i]->params("prior.block" + std::to_string(i), out);
    prior_head_->params("prior.head", out);
    if (bn_enc_stack_) {
      bn_enc_stack_->params("bn_enc.stack", out);
      bn_enc_head_->params("bn_enc.head", out);
    }
    if (bn_dec_in_) {
      bn_dec_in_->params("bn_dec.in", out);
      bn_dec_spk_->params("bn_dec.spk", out);
      bn_dec_stack_->params("bn_dec.stack", out);
      bn_dec_head_->params("bn_dec.head", out);
    }
    post_stack_->params("post.stack", out);
    post_head_->params("post.head", out);
    dur_stack_->params("dur.stack", out);
    dur_head_->params("dur.head", out);
    speaker_emb_->params("spk.emb", out);
    for (size_t i = 0; i < flow_.size(); ++i)
      flow_[i]->params("flow.layer" + std::to_string(i), out);
    decoder_->params("decoder", out);
    return out;
  }

  nn::NamedParams discriminator_params() const {
    nn::NamedParams out;
    for (size_t i = 0; i < mpd_.size(); ++i)
      mpd_[i]->params("mpd" + std::to_string(i), out);
    for (size_t i = 0; i < msd_.size(); ++i)
      msd_[i]->params("msd" + std::to_string(i), out);
    return out;
  }

  nn::NamedParams all_params() const {
    nn::NamedParams out = generator_params();
    nn::NamedParams d = discriminator_params();
    out.insert(out.end(), d.begin(), d.end());
    return out;
  }

 private:
  std::unique_ptr<nn::FftBlock> make_block(Rng& rng) const {
    return std::make_unique<nn::FftBlock>(cfg.hidden, cfg.attn_heads,
                                          cfg.hidden * cfg.ffn_mult,
                                          cfg.ffn_kernel, cfg.p_dropout, rng);
  }

  int prior_head_width() const {
    switch (cfg.ablation) {
      case AblationMode::kFull:
      case AblationMode::kNoBnDecoder:
        return 2 * cfg.latent;
      case AblationMode::kNoBnEncoder:
        return kBnDim;
      case AblationMode::kNoBnBoth:
        return 2 * kBnDim;
    }
    return 2 * cfg.latent;
  }

  GaussianVar bn_decode_impl(const ag::Var& input, int speaker,
                             const nn::Mode& mode) const {
    ag::Var h = bn_dec_in_->forward(input);
    h = ag::add_rowvec(h, bn_dec_spk_->forward(speaker_vector(speaker)));
    h = bn_dec_stack_->forward(h, mode);
    return model_detail::split_gaussian(bn_dec_head_->forward(h));
  }

  std::unique_ptr<nn::Embedding> phoneme_emb_;
  std::vector<std::unique_ptr<nn::FftBlock>> text_blocks_;
  std::vector<std::unique_ptr<nn::FftBlock>> prior_blocks_;
  std::unique_ptr<nn::Linear> prior_head_;
  std::unique_ptr<nn::ConvReluNormStack> bn_enc_stack_;
  std::unique_ptr<nn::Linear> bn_enc_head_;
  std::unique_ptr<nn::Linear> bn_dec_in_, bn_dec_spk_;
  std::unique_ptr<nn::ConvReluNormStack> bn_dec_stack_;
  std::unique_ptr<nn::Linear> bn_dec_head_;
  std::unique_ptr<nn::ConvReluNormStack> post_stack_;
  std::unique_ptr<nn::Conv1d> post_head_;
  std::unique_ptr<nn::ConvReluNormStack> dur_stack_;
  std::unique_ptr<nn::Linear> dur_head_;
  std::unique_ptr<nn::Embedding> speaker_emb_;
  std::vector<std::unique_ptr<CouplingLayer>> flow_;
  std::unique_ptr<WaveDecoder> decoder_;
  std::vector<std::unique_ptr<PeriodDiscriminator>> mpd_;
  std::vector<std::unique_ptr<ScaleDiscriminator>> msd_;
};

}  // namespace af
