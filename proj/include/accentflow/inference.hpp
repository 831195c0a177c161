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

#include "accentflow/checkpoint.hpp"
#include "accentflow/model.hpp"

namespace af {

struct SynthOptions {
  real noise_pr = 0.667;
  real noise_ac = 0.667;
  uint64_t seed = 0;
};

struct SynthesisResult {
  Waveform wav;
  std::vector<int> durations;      // frames actually used per phoneme
  std::vector<real> raw_durations; // predictor output before rounding
  int unknown_chars = 0;
};

// Text-to-wave accent transfer: accented phonemes -> pronunciation prior ->
// sampled latent -> acoustic prior (target speaker) -> inverse flow ->
// waveform. Stateless per call given the loaded checkpoint snapshot.
class Synthesizer {
 public:
  explicit Synthesizer(const std::string& checkpoint_path) {
    CheckpointData data = load_checkpoint_file(checkpoint_path);
    registry_ = registry_from_json(data.metadata.at("frontend"), &speakers_);
    Rng init_rng(0);
    model_ = std::make_unique<AccentModel>(data.config, init_rng);
    apply_checkpoint(data, *model_);
  }

  const AccentRegistry& registry() const { return registry_; }
  const std::vector<std::string>& speakers() const { return speakers_; }
  const AccentModel& model() const { return *model_; }

  int speaker_id(const std::string& name) const {
    for (size_t i = 0; i < speakers_.size(); ++i)
      if (speakers_[i] == name) return static_cast<int>(i);
    throw Error("unregistered speaker: " + name);
  }

  SynthesisResult synthesize(const std::string& text,
                             const std::string& accent_name,
                             const std::string& speaker_name,
                             const SynthOptions& opts = {}) const {
    const G2pResult g2p = registry_.g2p(text, accent_name);
    SynthesisResult res =
        synthesize_from_ids(g2p.seq.ids, speaker_id(speaker_name), opts);
    res.unknown_chars = g2p.unknown_count;
    return res;
  }

  // predicted-duration path
  SynthesisResult synthesize_from_ids(const std::vector<int>& ids, int speaker,
                                      const SynthOptions& opts = {}) const {
    AF_CHECK(!ids.empty(), "synthesize: empty phoneme sequence");
    ag::Var h_p = model_->text_encode(ids);
    ag::Var d_hat = model_->duration_predict(h_p);
    SynthesisResult res;
    res.raw_durations = d_hat->value.data;
    res.durations = AccentModel::round_durations(d_hat->value);
    res.wav = run_acoustic_path(h_p, res.durations, speaker, opts);
    return res;
  }

  // ground-truth-duration path (copy-synthesis debugging)
  SynthesisResult synthesize_with_durations(const std::vector<int>& ids,
                                            const std::vector<int>& durations,
                                            int speaker,
                                            const SynthOptions& opts = {}) const {
    AF_CHECK(!ids.empty(), "synthesize: empty phoneme sequence");
    AF_CHECK(ids.size() == durations.size(),
             "synthesize: duration list length mismatch");
    ag::Var h_p = model_->text_encode(ids);
    SynthesisResult res;
    res.durations = durations;
    res.wav = run_acoustic_path(h_p, durations, speaker, opts);
    return res;
  }

  SynthesisResult synthesize_phoneme_file(const std::string& path,
                                          const std::string& accent_name,
                                          const std::string& speaker_name,
                                          const SynthOptions& opts = {}) const {
    const PhonemeSequence seq = load_alignment(path, registry_, accent_name);
    return synthesize_with_durations(seq.ids, seq.durations,
                                     speaker_id(speaker_name), opts);
  }

 private:
  Waveform run_acoustic_path(const ag::Var& h_p, const std::vector<int>& durations,
                             int speaker, const SynthOptions& opts) const {
    ag::Var h_text = length_regulate(h_p, durations);
    Rng rng(opts.seed ^ 0xa5a5a5a5ULL);
    LatentVar u{nullptr, LatentKind::kAcoustic};
    switch (model_->cfg.ablation) {
      case AblationMode::kFull: {
        GaussianVar p_pr = model_->pronunciation_prior(h_text);
        LatentVar z_pr =
            reparam_sample(p_pr, opts.noise_pr, rng, LatentKind::kPronunciation);
        GaussianVar prior = model_->bn_decode(z_pr, speaker);
        u = reparam_sample(prior, opts.noise_ac, rng, LatentKind::kAcoustic);
        break;
      }
      case AblationMode::kNoBnDecoder: {
        // the pronunciation distribution doubles as the acoustic prior
        GaussianVar p_pr = model_->pronunciation_prior(h_text);
        u = reparam_sample(p_pr, opts.noise_pr, rng, LatentKind::kAcoustic);
        break;
      }
      case AblationMode::kNoBnEncoder: {
        ag::Var bn_hat = model_->predict_bn(h_text);
        GaussianVar prior = model_->bn_decode_from_bn(bn_hat, speaker);
        u = reparam_sample(prior, opts.noise_ac, rng, LatentKind::kAcoustic);
        break;
      }
      case AblationMode::kNoBnBoth: {
        GaussianVar dist = model_->predict_bn_distribution(h_text);
        u = reparam_sample(dist, opts.noise_ac, rng, LatentKind::kAcoustic);
        break;
      }
    }
    LatentVar z_ac = model_->flow_inverse(u.values, speaker);
    ag::Var wav = model_->decode_waveform(z_ac);
    Waveform out;
    out.samples = wav->value.data;
    return out;
  }

  AccentRegistry registry_;
  std::vector<std::string> speakers_;
  std::unique_ptr<AccentModel> model_;
};

}  // namespace af
