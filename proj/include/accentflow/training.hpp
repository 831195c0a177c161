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

#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "accentflow/checkpoint.hpp"
#include "accentflow/losses.hpp"
#include "accentflow/optim.hpp"

namespace af {

struct AccentSpec {
  std::string name;
  std::string inventory_path;  // one phoneme symbol per line, pad first
  std::string g2p_path;        // CHAR<TAB>SYMBOL rules
};

struct TrainConfig {
  int64_t steps = 400000;
  int batch = 24;
  real lr = 2e-4;
  real beta1 = 0.8;
  real beta2 = 0.99;
  real adam_eps = 1e-9;
  real lr_decay = 0.999875;
  real grad_clip = 0.0;
  int slice_frames = 32;
  real alpha = 45.0;
  real lambda_dur = 1.0;
  uint64_t seed = 1234;
  AblationMode ablation = AblationMode::kFull;
  bool toy = false;
  int64_t log_every = 1;
  int64_t ckpt_every = 0;  // 0: final checkpoint only
  uint64_t pseudo_bn_seed = 1337;

  ModelConfig model;
  std::vector<AccentSpec> accents;
  std::vector<std::string> speakers;

  // CPU-scale preset: small widths everywhere, tiny batch
  void apply_toy_preset() {
    toy = true;
    const ModelConfig t = ModelConfig::toy(model.vocab_size, model.num_speakers);
    model.hidden = t.hidden;
    model.latent = t.latent;
    model.speaker_dim = t.speaker_dim;
    model.text_blocks = t.text_blocks;
    model.prior_blocks = t.prior_blocks;
    model.ffn_mult = t.ffn_mult;
    model.enc_layers = t.enc_layers;
    model.flow_hidden = t.flow_hidden;
    model.decoder_channels = t.decoder_channels;
    model.resblock_kernels = t.resblock_kernels;
    model.resblock_dilations = t.resblock_dilations;
    model.mpd_channels = t.mpd_channels;
    model.msd_channels = t.msd_channels;
    batch = 2;
  }

  AdamConfig adam() const {
    AdamConfig a;
    a.lr = lr;
    a.beta1 = beta1;
    a.beta2 = beta2;
    a.eps = adam_eps;
    a.lr_decay = lr_decay;
    a.grad_clip = grad_clip;
    return a;
  }
};

inline TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  c.steps = j.value("steps", c.steps);
  c.batch = j.value("batch", c.batch);
  c.lr = j.value("lr", c.lr);
  c.beta1 = j.value("adam_beta1", c.beta1);
  c.beta2 = j.value("adam_beta2", c.beta2);
  c.adam_eps = j.value("adam_eps", c.adam_eps);
  c.lr_decay = j.value("lr_decay", c.lr_decay);
  c.grad_clip = j.value("grad_clip", c.grad_clip);
  c.slice_frames = j.value("slice_frames", c.slice_frames);
  c.alpha = j.value("alpha", c.alpha);
  c.lambda_dur = j.value("lambda_dur", c.lambda_dur);
  c.seed = j.value("seed", c.seed);
  c.log_every = j.value("log_every", c.log_every);
  c.ckpt_every = j.value("ckpt_every", c.ckpt_every);
  c.pseudo_bn_seed = j.value("pseudo_bn_seed", c.pseudo_bn_seed);
  if (j.contains("ablation"))
    c.ablation = ablation_from_string(j.at("ablation"));
  if (j.contains("model")) {
    json m = model_config_to_json(c.model);
    m.update(j.at("model"));
    c.model = model_config_from_json(m);
  }
  if (j.contains("data")) {
    const json& d = j.at("data");
    for (const auto& a : d.value("accents", json::array()))
      c.accents.push_back(AccentSpec{a.at("name"), a.at("inventory"),
                                     a.value("g2p", std::string())});
    c.speakers = d.value("speakers", std::vector<std::string>());
  }
  if (j.value("toy", false)) c.apply_toy_preset();
  return c;
}

inline TrainConfig load_train_config(const std::string& path) {
  return train_config_from_json(json::parse(read_text_file(path)));
}

// Inventory file: one symbol per line, pad symbol first, '#' comments.
inline std::vector<std::string> load_inventory_file(const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::vector<std::string> symbols;
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    symbols.push_back(t);
  }
  return symbols;
}

inline AccentRegistry build_registry(const TrainConfig& cfg) {
  AccentRegistry reg;
  for (const auto& a : cfg.accents) {
    reg.register_inventory(a.name, load_inventory_file(a.inventory_path));
    if (!a.g2p_path.empty()) reg.load_g2p_rules(a.name, a.g2p_path);
  }
  reg.freeze();
  return reg;
}

inline int speaker_index(const std::vector<std::string>& speakers,
                         const std::string& name) {
  for (size_t i = 0; i < speakers.size(); ++i)
    if (speakers[i] == name) return static_cast<int>(i);
  throw Error("unregistered speaker: " + name);
}

struct UtteranceRecord {
  std::string utt_id;
  int speaker = 0;
  AccentId accent;
  std::string wav_path, dur_path, bn_path;
  bool pseudo_bn = false;

  PhonemeSequence phonemes;  // durations reconciled against the mel length
  Waveform wav;              // exactly T * hop samples
  MelSpectrogram mel;        // T frames
  BnFeature bn;              // interpolated to T frames

  int frames() const { return mel.num_frames(); }
};

// Alignment and STFT padding routinely disagree by a frame or two; the
// longer side is trimmed to the shorter. Larger gaps are data errors.
inline void reconcile_lengths(UtteranceRecord& rec) {
  const int T_mel = rec.mel.num_frames();
  int sum_d = rec.phonemes.total_frames();
  int diff = sum_d - T_mel;
  AF_CHECK(std::abs(diff) <= 2,
           "utterance " + rec.utt_id + ": duration sum " + std::to_string(sum_d) +
               " vs mel frames " + std::to_string(T_mel) + " differ by more than 2");
  if (diff > 0) {
    for (int i = static_cast<int>(rec.phonemes.durations.size()) - 1;
         i >= 0 && diff > 0; --i) {
      const int take = std::min(diff, rec.phonemes.durations[static_cast<size_t>(i)] - 1);
      rec.phonemes.durations[static_cast<size_t>(i)] -= take;
      diff -= take;
    }
    AF_CHECK(diff == 0, "utterance " + rec.utt_id + ": cannot trim durations");
  }
  const int T = rec.phonemes.total_frames();
  if (T < T_mel) {
    Tensor trimmed({T, kNumMels});
    std::copy(rec.mel.frames.data.begin(),
              rec.mel.frames.data.begin() + static_cast<int64_t>(T) * kNumMels,
              trimmed.data.begin());
    rec.mel.frames = std::move(trimmed);
  }
  rec.wav.samples.resize(static_cast<size_t>(T) * kHop, 0.0);
}

// Manifest line: utt_id|speaker|accent|wav_path|dur_path|bn_path_or_PSEUDO
inline std::vector<UtteranceRecord> load_manifest(
    const std::string& path, const AccentRegistry& registry,
    const std::vector<std::string>& speakers, uint64_t pseudo_bn_seed) {
  std::istringstream in(read_text_file(path));
  std::vector<UtteranceRecord> records;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto fields = split(t, '|');
    AF_CHECK(fields.size() == 6,
             path + ":" + std::to_string(lineno) + ": expected 6 fields");
    UtteranceRecord rec;
    rec.utt_id = trim(fields[0]);
    rec.speaker = speaker_index(speakers, trim(fields[1]));
    rec.accent = registry.inventory(trim(fields[2])).accent;
    rec.wav_path = trim(fields[3]);
    rec.dur_path = trim(fields[4]);
    rec.bn_path = trim(fields[5]);
    rec.pseudo_bn = rec.bn_path == "PSEUDO";

    AF_CHECK(file_exists(rec.wav_path),
             "utterance " + rec.utt_id + ": missing wav " + rec.wav_path);
    AF_CHECK(file_exists(rec.dur_path),
             "utterance " + rec.utt_id + ": missing alignment " + rec.dur_path);
    if (!rec.pseudo_bn)
      AF_CHECK(file_exists(rec.bn_path + ".bn"),
               "utterance " + rec.utt_id + ": missing bn " + rec.bn_path + ".bn");

    rec.wav = load_wav(rec.wav_path);
    rec.mel = mel_extract(rec.wav);
    rec.phonemes = load_alignment(rec.dur_path, registry, rec.accent.name);
    reconcile_lengths(rec);
    const BnFeature raw = rec.pseudo_bn ? pseudo_bn(rec.mel, pseudo_bn_seed)
                                        : load_bn(rec.bn_path);
    rec.bn = interpolate_bn(raw, rec.frames());
    records.push_back(std::move(rec));
  }
  return records;
}

// Padded batch: ids/durations to the longest phoneme sequence, mel/BN to the
// longest frame count, plus per-item lengths (the masks).
struct Batch {
  std::vector<int> record_idx;
  std::vector<std::vector<int>> ids;  // B x P_max
  Tensor durations;                   // B x P_max
  Tensor mel;                         // B x T_max x 80
  Tensor bn;                          // B x T_max x 512
  std::vector<int> speakers;
  std::vector<int> p_len, t_len;
  const std::vector<UtteranceRecord>* source = nullptr;

  int size() const { return static_cast<int>(record_idx.size()); }

  std::vector<char> frame_mask(int b) const {
    std::vector<char> m(static_cast<size_t>(mel.dim(1)), 0);
    for (int t = 0; t < t_len[static_cast<size_t>(b)]; ++t)
      m[static_cast<size_t>(t)] = 1;
    return m;
  }
};

inline Batch make_batch(const std::vector<UtteranceRecord>& records,
                        const TrainConfig& cfg, Rng& rng) {
  AF_CHECK(!records.empty(), "make_batch: no records");
  Batch b;
  b.source = &records;
  for (int i = 0; i < cfg.batch; ++i)
    b.record_idx.push_back(static_cast<int>(
        rng.uniform_int(0, static_cast<int64_t>(records.size()) - 1)));
  int max_P = 1, max_T = 1;
  for (int idx : b.record_idx) {
    const auto& rec = records[static_cast<size_t>(idx)];
    max_P = std::max(max_P, static_cast<int>(rec.phonemes.ids.size()));
    max_T = std::max(max_T, rec.frames());
  }
  b.durations = Tensor::zeros({cfg.batch, max_P});
  b.mel = Tensor::zeros({cfg.batch, max_T, kNumMels});
  b.bn = Tensor::zeros({cfg.batch, max_T, kBnDim});
  for (int i = 0; i < cfg.batch; ++i) {
    const auto& rec = records[static_cast<size_t>(b.record_idx[static_cast<size_t>(i)])];
    const int P = static_cast<int>(rec.phonemes.ids.size());
    const int T = rec.frames();
    std::vector<int> row(static_cast<size_t>(max_P), 0);
    for (int p = 0; p < P; ++p) {
      row[static_cast<size_t>(p)] = rec.phonemes.ids[static_cast<size_t>(p)];
      b.durations.at(i, p) = rec.phonemes.durations[static_cast<size_t>(p)];
    }
    b.ids.push_back(std::move(row));
    for (int t = 0; t < T; ++t) {
      for (int m = 0; m < kNumMels; ++m) b.mel.at(i, t, m) = rec.mel.frames.at(t, m);
      for (int c = 0; c < kBnDim; ++c) b.bn.at(i, t, c) = rec.bn.frames.at(t, c);
    }
    b.speakers.push_back(rec.speaker);
    b.p_len.push_back(P);
    b.t_len.push_back(T);
  }
  return b;
}

// Random slice of the latent sequence with its time-aligned audio segment.
struct LatentSlice {
  int start = 0;
  int length = 0;
};

inline LatentSlice slice_latents(int T, int slice_frames, Rng& rng) {
  const int L = std::min(slice_frames, T);
  const int s = T == L ? 0 : static_cast<int>(rng.uniform_int(0, T - L));
  return LatentSlice{s, L};
}

inline Tensor audio_segment(const Waveform& wav, const LatentSlice& slice) {
  Tensor seg({slice.length * kHop});
  for (int i = 0; i < slice.length * kHop; ++i) {
    const size_t src = static_cast<size_t>(slice.start) * kHop + static_cast<size_t>(i);
    seg.data[static_cast<size_t>(i)] = src < wav.samples.size() ? wav.samples[src] : 0.0;
  }
  return seg;
}

struct GradSnapshot {
  std::vector<std::pair<std::string, real>> gen;   // after the generator step
  std::vector<std::pair<std::string, real>> disc;  // after the discriminator step
};

namespace train_detail {

inline std::vector<ag::Var> score_list(const std::vector<DiscOutput>& outs) {
  std::vector<ag::Var> s;
  for (const auto& o : outs) s.push_back(o.scores);
  return s;
}

inline ag::Var batch_mean(const std::vector<ag::Var>& terms) {
  return ag::mul_scalar(ag::add_many(terms), 1.0 / static_cast<real>(terms.size()));
}

inline void snapshot(const Adam& opt, std::vector<std::pair<std::string, real>>& out) {
  for (const auto& [name, p] : opt.params())
    out.push_back({name, p->grad_ready ? p->grad.abs_max() : 0.0});
}

}  // namespace train_detail

// One alternating optimization step: discriminator first, then generator,
// both on the same slice decode. Wiring follows the ablation mode.
inline LossReport train_step(const Batch& batch, AccentModel& model, Adam& opt_g,
                             Adam& opt_d, const TrainConfig& cfg, Rng& rng,
                             GradSnapshot* snap = nullptr) {
  const int B = batch.size();
  AF_CHECK(B >= 1, "train_step: empty batch");
  const nn::Mode mode = nn::train_mode(rng);
  const AblationMode ab = model.cfg.ablation;

  struct ItemGraph {
    ag::Var recon, kl_ac, dur, y_hat;
    ag::Var kl_pr, mse_bn;  // null unless the mode defines them
    Tensor y_seg;
  };
  std::vector<ItemGraph> items;

  for (int b = 0; b < B; ++b) {
    const UtteranceRecord& rec =
        (*batch.source)[static_cast<size_t>(batch.record_idx[static_cast<size_t>(b)])];
    const int T = batch.t_len[static_cast<size_t>(b)];
    const int P = batch.p_len[static_cast<size_t>(b)];
    const int spk = batch.speakers[static_cast<size_t>(b)];

    Tensor mel_t({T, kNumMels});
    for (int t = 0; t < T; ++t)
      for (int m = 0; m < kNumMels; ++m) mel_t.at(t, m) = batch.mel.at(b, t, m);
    Tensor bn_t({T, kBnDim});
    for (int t = 0; t < T; ++t)
      for (int c = 0; c < kBnDim; ++c) bn_t.at(t, c) = batch.bn.at(b, t, c);

    // posterior path
    GaussianVar q_ac = model.posterior_encode(ag::constant(mel_t), mode);
    LatentVar z_ac = reparam_sample(q_ac, 1.0, rng, LatentKind::kAcoustic);

    // text path with ground-truth durations
    std::vector<int> ids(batch.ids[static_cast<size_t>(b)].begin(),
                         batch.ids[static_cast<size_t>(b)].begin() + P);
    std::vector<int> durs(static_cast<size_t>(P));
    for (int p = 0; p < P; ++p)
      durs[static_cast<size_t>(p)] = static_cast<int>(batch.durations.at(b, p));
    ag::Var h_p = model.text_encode(ids, mode);
    ag::Var h_text = length_regulate(h_p, durs);

    ItemGraph item;
    ag::Var bn_const = ag::constant(bn_t);
    GaussianVar prior_ac;
    switch (ab) {
      case AblationMode::kFull: {
        GaussianVar p_pr = model.pronunciation_prior(h_text, mode);
        GaussianVar q_pr = model.bn_encode(bn_const, mode);
        LatentVar z_pr = reparam_sample(q_pr, 1.0, rng, LatentKind::kPronunciation);
        prior_ac = model.bn_decode(z_pr, spk, mode);
        item.kl_pr = kl_gauss(q_pr, p_pr);
        break;
      }
      case AblationMode::kNoBnEncoder: {
        ag::Var bn_hat = model.predict_bn(h_text, mode);
        item.mse_bn = mse_loss(bn_hat, bn_const);
        prior_ac = model.bn_decode_from_bn(bn_const, spk, mode);
        break;
      }
      case AblationMode::kNoBnDecoder: {
        GaussianVar p_pr = model.pronunciation_prior(h_text, mode);
        GaussianVar q_pr = model.bn_encode(bn_const, mode);
        item.kl_pr = kl_gauss(q_pr, p_pr);
        prior_ac = q_pr;  // the z_pr distribution doubles as the z_ac prior
        break;
      }
      case AblationMode::kNoBnBoth: {
        GaussianVar bn_dist = model.predict_bn_distribution(h_text, mode);
        LatentVar bn_sample =
            reparam_sample(bn_dist, 1.0, rng, LatentKind::kPronunciation);
        item.mse_bn = mse_loss(bn_sample.values, bn_const);
        prior_ac = bn_dist;
        break;
      }
    }

    auto [fz, logdet] = model.flow_forward(z_ac, spk);
    item.kl_ac = kl_ac_with_flow(z_ac.values, q_ac, fz, prior_ac,
                                 ag::mul_scalar(logdet, 1.0 / T));

    const LatentSlice slice = slice_latents(T, cfg.slice_frames, rng);
    LatentVar z_slice{ag::slice_rows(z_ac.values, slice.start, slice.length),
                      LatentKind::kAcoustic};
    item.y_hat = model.decode_waveform(z_slice);
    item.y_seg = audio_segment(rec.wav, slice);
    item.recon = recon_loss(item.y_hat, ag::constant(item.y_seg));

    ag::Var d_hat = model.duration_predict(h_p, mode);
    Tensor dur_ref({P});
    for (int p = 0; p < P; ++p) dur_ref.data[static_cast<size_t>(p)] = durs[static_cast<size_t>(p)];
    item.dur = duration_loss(d_hat, ag::constant(dur_ref));
    items.push_back(std::move(item));
  }

  // discriminator step (generated audio detached)
  std::vector<ag::Var> d_terms;
  for (const auto& item : items) {
    const auto real_outs = model.discriminate(ag::constant(item.y_seg));
    const auto fake_outs = model.discriminate(ag::detach(item.y_hat));
    d_terms.push_back(adv_d(train_detail::score_list(real_outs),
                            train_detail::score_list(fake_outs)));
  }
  ag::Var loss_d = train_detail::batch_mean(d_terms);
  opt_d.zero_grad();
  ag::backward(loss_d);
  if (snap) train_detail::snapshot(opt_d, snap->disc);
  opt_d.step();

  // generator step against the updated discriminator
  std::vector<ag::Var> g_adv_terms, g_fm_terms, recon_terms, klac_terms,
      dur_terms, prior_terms;
  for (const auto& item : items) {
    const auto real_outs = model.discriminate(ag::constant(item.y_seg));
    const auto fake_outs = model.discriminate(item.y_hat);
    g_adv_terms.push_back(adv_g(train_detail::score_list(fake_outs)));
    g_fm_terms.push_back(feature_matching(real_outs, fake_outs));
    recon_terms.push_back(item.recon);
    klac_terms.push_back(item.kl_ac);
    dur_terms.push_back(item.dur);
    if (item.kl_pr) prior_terms.push_back(item.kl_pr);
    if (item.mse_bn) prior_terms.push_back(item.mse_bn);
  }
  ag::Var g_adv = train_detail::batch_mean(g_adv_terms);
  ag::Var g_fm = train_detail::batch_mean(g_fm_terms);
  ag::Var g_recon = train_detail::batch_mean(recon_terms);
  ag::Var g_klac = train_detail::batch_mean(klac_terms);
  ag::Var g_dur = train_detail::batch_mean(dur_terms);
  std::vector<ag::Var> total_terms = {g_adv, g_fm,
                                      ag::mul_scalar(g_recon, cfg.alpha), g_klac,
                                      ag::mul_scalar(g_dur, cfg.lambda_dur)};
  ag::Var g_prior;
  if (!prior_terms.empty()) {
    g_prior = train_detail::batch_mean(prior_terms);
    total_terms.push_back(g_prior);
  }
  ag::Var loss_g = ag::add_many(total_terms);
  opt_g.zero_grad();
  opt_d.zero_grad();  // adv_g/fm leak gradients into discriminator params
  ag::backward(loss_g);
  if (snap) train_detail::snapshot(opt_g, snap->gen);
  opt_g.step();

  LossParts parts;
  parts.recon = ag::scalar_value(g_recon);
  parts.kl_ac = ag::scalar_value(g_klac);
  parts.adv_g = ag::scalar_value(g_adv);
  parts.adv_d = ag::scalar_value(loss_d);
  parts.fm = ag::scalar_value(g_fm);
  parts.dur = ag::scalar_value(g_dur);
  if (ab == AblationMode::kFull || ab == AblationMode::kNoBnDecoder)
    parts.kl_pr = ag::scalar_value(g_prior);
  if (ab == AblationMode::kNoBnEncoder || ab == AblationMode::kNoBnBoth)
    parts.mse_bn = ag::scalar_value(g_prior);
  return compose(parts, cfg.alpha, cfg.lambda_dur);
}

// Owns the registry, records, model and optimizers for one training run.
class Trainer {
 public:
  Trainer(TrainConfig cfg, const std::string& manifest_path)
      : cfg_(std::move(cfg)),
        registry_(build_registry(cfg_)),
        init_rng_(cfg_.seed),
        data_rng_(cfg_.seed + 1),
        step_rng_(cfg_.seed + 2) {
    AF_CHECK(cfg_.batch >= 1, "batch must be >= 1");
    AF_CHECK(cfg_.slice_frames >= 1, "slice_frames must be >= 1");
    cfg_.model.vocab_size = registry_.vocab_size();
    cfg_.model.num_speakers = static_cast<int>(cfg_.speakers.size());
    cfg_.model.ablation = cfg_.ablation;
    records_ = load_manifest(manifest_path, registry_, cfg_.speakers,
                             cfg_.pseudo_bn_seed);
    AF_CHECK(!records_.empty(), "manifest has no records: " + manifest_path);
    model_ = std::make_unique<AccentModel>(cfg_.model, init_rng_);
    opt_g_ = std::make_unique<Adam>(model_->generator_params(), cfg_.adam());
    opt_d_ = std::make_unique<Adam>(model_->discriminator_params(), cfg_.adam());
  }

  LossReport step(GradSnapshot* snap = nullptr) {
    Batch batch = make_batch(records_, cfg_, data_rng_);
    LossReport report = train_step(batch, *model_, *opt_g_, *opt_d_, cfg_,
                                   step_rng_, snap);
    report.step = ++step_count_;
    return report;
  }

  // Runs to cfg_.steps, streaming JSON-line loss reports to <out>/train.log
  // and checkpointing into <out>.
  std::vector<LossReport> run(const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    std::ofstream log(out_dir + "/train.log", std::ios::app);
    AF_CHECK(log.good(), "cannot open train log in " + out_dir);
    std::vector<LossReport> history;
    while (step_count_ < cfg_.steps) {
      LossReport r = step();
      if (r.step % cfg_.log_every == 0) log << r.to_json_line() << "\n";
      if (cfg_.ckpt_every > 0 && r.step % cfg_.ckpt_every == 0)
        save(out_dir + "/step_" + std::to_string(r.step) + ".ckpt");
      history.push_back(std::move(r));
    }
    log.flush();
    save(out_dir + "/final.ckpt");
    return history;
  }

  void save(const std::string& path) {
    save_checkpoint(path, *model_, opt_g_.get(), opt_d_.get(), step_count_,
                    frontend_to_json(registry_, cfg_.speakers));
  }

  void resume_from(const std::string& path) {
    const CheckpointData data = load_checkpoint_file(path);
    apply_checkpoint(data, *model_, opt_g_.get(), opt_d_.get());
    step_count_ = data.step;
  }

  AccentModel& model() { return *model_; }
  const AccentRegistry& registry() const { return registry_; }
  const std::vector<UtteranceRecord>& records() const { return records_; }
  const TrainConfig& config() const { return cfg_; }
  int64_t step_count() const { return step_count_; }

 private:
  TrainConfig cfg_;
  AccentRegistry registry_;
  Rng init_rng_, data_rng_, step_rng_;
  std::vector<UtteranceRecord> records_;
  std::unique_ptr<AccentModel> model_;
  std::unique_ptr<Adam> opt_g_, opt_d_;
  int64_t step_count_ = 0;
};

}  // namespace af
