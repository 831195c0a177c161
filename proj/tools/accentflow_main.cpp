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

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "accentflow/eval.hpp"
#include "accentflow/inference.hpp"
#include "accentflow/training.hpp"

namespace {

int run_train(const std::string& config_path, const std::string& manifest,
              const std::string& out_dir, const std::string& ablation, bool toy,
              int64_t steps, int batch, double lr, int64_t seed,
              int slice_frames, double alpha, double lambda_dur,
              int64_t log_every, int64_t ckpt_every) {
  af::TrainConfig cfg = af::load_train_config(config_path);
  if (!ablation.empty()) cfg.ablation = af::ablation_from_string(ablation);
  if (toy) cfg.apply_toy_preset();
  if (steps >= 0) cfg.steps = steps;
  if (batch >= 1) cfg.batch = batch;
  if (lr > 0) cfg.lr = lr;
  if (seed >= 0) cfg.seed = static_cast<uint64_t>(seed);
  if (slice_frames >= 1) cfg.slice_frames = slice_frames;
  if (alpha >= 0) cfg.alpha = alpha;
  if (lambda_dur >= 0) cfg.lambda_dur = lambda_dur;
  if (log_every >= 1) cfg.log_every = log_every;
  if (ckpt_every >= 0) cfg.ckpt_every = ckpt_every;

  af::Trainer trainer(cfg, manifest);
  std::cout << "training " << af::to_string(cfg.ablation) << " model for "
            << cfg.steps << " steps (batch " << cfg.batch << ", "
            << trainer.records().size() << " utterances)" << std::endl;
  const auto history = trainer.run(out_dir);
  if (!history.empty())
    std::cout << "final: " << history.back().to_json_line() << std::endl;
  std::cout << "checkpoint: " << out_dir << "/final.ckpt" << std::endl;
  return 0;
}

int run_synth(const std::string& checkpoint, const std::string& accent,
              const std::string& speaker, const std::string& text,
              const std::string& phonemes, const std::string& out_path,
              double noise_pr, double noise_ac, int64_t seed) {
  af::Synthesizer synth(checkpoint);
  af::SynthOptions opts;
  opts.noise_pr = noise_pr;
  opts.noise_ac = noise_ac;
  opts.seed = static_cast<uint64_t>(seed);
  af::SynthesisResult res;
  if (!phonemes.empty())
    res = synth.synthesize_phoneme_file(phonemes, accent, speaker, opts);
  else
    res = synth.synthesize(text, accent, speaker, opts);
  af::save_wav(out_path, res.wav);
  int frames = 0;
  for (int d : res.durations) frames += d;
  std::cout << "wrote " << out_path << " (" << res.wav.samples.size()
            << " samples, " << frames << " frames";
  if (res.unknown_chars > 0)
    std::cout << ", " << res.unknown_chars << " unknown chars -> pad";
  std::cout << ")" << std::endl;
  return 0;
}

int run_eval(const std::string& checkpoint, const std::string& manifest,
             const std::string& out_csv, const std::string& embedder,
             std::string per_utt_csv, double noise_pr, double noise_ac,
             int64_t seed) {
  af::Synthesizer synth(checkpoint);
  af::SynthOptions opts;
  opts.noise_pr = noise_pr;
  opts.noise_ac = noise_ac;
  opts.seed = static_cast<uint64_t>(seed);
  const af::EvalReport report =
      af::evaluate_manifest(manifest, synth, embedder, opts);
  af::write_file_atomic(out_csv, report.to_csv());
  if (per_utt_csv.empty()) per_utt_csv = out_csv + ".per_utt.csv";
  af::write_file_atomic(per_utt_csv, report.to_per_utt_csv());
  std::cout << report.to_csv();
  std::cout << "wrote " << out_csv << " and " << per_utt_csv << std::endl;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hierarchical CVAE accent-transfer TTS"};
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "train a model from a manifest");
  std::string config_path, manifest, out_dir, ablation;
  bool toy = false;
  int64_t steps = -1, seed = -1, log_every = -1, ckpt_every = -1;
  int batch = 0, slice_frames = 0;
  double lr = 0, alpha = -1, lambda_dur = -1;
  train->add_option("--config", config_path, "training config (json)")
      ->required()
      ->check(CLI::ExistingFile);
  train->add_option("--data", manifest, "utterance manifest")
      ->required()
      ->check(CLI::ExistingFile);
  train->add_option("--out", out_dir, "output directory")->required();
  train->add_option("--ablation", ablation,
                    "full|no_bn_encoder|no_bn_decoder|no_bn_both");
  train->add_flag("--toy", toy, "apply the CPU-scale toy preset");
  train->add_option("--steps", steps, "override step count");
  train->add_option("--batch", batch, "override batch size");
  train->add_option("--lr", lr, "override learning rate");
  train->add_option("--seed", seed, "override rng seed");
  train->add_option("--slice-frames", slice_frames, "override decoder slice");
  train->add_option("--alpha", alpha, "reconstruction weight");
  train->add_option("--lambda", lambda_dur, "duration loss weight");
  train->add_option("--log-every", log_every, "log period (steps)");
  train->add_option("--ckpt-every", ckpt_every, "checkpoint period (steps)");

  // synth
  auto* synth = app.add_subcommand("synth", "synthesize speech");
  std::string checkpoint, accent, speaker, text, phonemes, out_wav;
  double noise_pr = 0.667, noise_ac = 0.667;
  int64_t synth_seed = 0;
  synth->add_option("--checkpoint", checkpoint, "model checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  synth->add_option("--accent", accent, "accent name")->required();
  synth->add_option("--speaker", speaker, "target speaker name")->required();
  auto* text_opt = synth->add_option("--text", text, "input text");
  auto* phon_opt = synth->add_option("--phonemes", phonemes,
                                     "phoneme+duration file (alignment format)")
                       ->check(CLI::ExistingFile);
  text_opt->excludes(phon_opt);
  synth->add_option("--out", out_wav, "output wav path")->required();
  synth->add_option("--noise-pr", noise_pr, "pronunciation noise scale");
  synth->add_option("--noise-ac", noise_ac, "acoustic noise scale");
  synth->add_option("--seed", synth_seed, "sampling seed");

  // eval
  auto* eval = app.add_subcommand("eval", "objective metrics over a manifest");
  std::string eval_ckpt, eval_manifest, out_csv, per_utt,
      embedder = "builtin";
  double eval_noise_pr = 0.0, eval_noise_ac = 0.0;
  int64_t eval_seed = 0;
  eval->add_option("--checkpoint", eval_ckpt, "model checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--manifest", eval_manifest, "utterance manifest")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--out", out_csv, "report csv path")->required();
  eval->add_option("--embedder", embedder, "builtin|external:<cmd>");
  eval->add_option("--per-utt", per_utt, "per-utterance csv path");
  eval->add_option("--noise-pr", eval_noise_pr, "pronunciation noise scale");
  eval->add_option("--noise-ac", eval_noise_ac, "acoustic noise scale");
  eval->add_option("--seed", eval_seed, "sampling seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(train))
      return run_train(config_path, manifest, out_dir, ablation, toy, steps,
                       batch, lr, seed, slice_frames, alpha, lambda_dur,
                       log_every, ckpt_every);
    if (app.got_subcommand(synth)) {
      if (text.empty() && phonemes.empty()) {
        std::cerr << "synth requires --text or --phonemes" << std::endl;
        return 2;
      }
      return run_synth(checkpoint, accent, speaker, text, phonemes, out_wav,
                       noise_pr, noise_ac, synth_seed);
    }
    if (app.got_subcommand(eval))
      return run_eval(eval_ckpt, eval_manifest, out_csv, embedder, per_utt,
                      eval_noise_pr, eval_noise_ac, eval_seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 0;
}
