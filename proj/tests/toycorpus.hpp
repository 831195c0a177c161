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

#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "accentflow/training.hpp"
#include "testutil.hpp"

namespace aftest {

// Deterministic synthetic speech-like signal: per-phoneme harmonic segments
// with phase continuity plus a little seeded noise.
inline af::Waveform toy_utterance_wav(const std::vector<int>& durations,
                                      double base_f0, uint64_t seed) {
  int total_frames = 0;
  for (int d : durations) total_frames += d;
  const int n = (total_frames - 1) * af::kHop;
  af::Rng rng(seed);
  af::Waveform w;
  w.samples.resize(static_cast<size_t>(n));
  double phase = 0.0, phase2 = 0.0;
  int seg = 0, seg_end = durations[0] * af::kHop;
  for (int i = 0; i < n; ++i) {
    if (i >= seg_end && seg + 1 < static_cast<int>(durations.size())) {
      ++seg;
      seg_end += durations[static_cast<size_t>(seg)] * af::kHop;
    }
    const double f0 = base_f0 * (1.0 + 0.25 * (seg % 3));
    phase += 2.0 * M_PI * f0 / af::kSampleRate;
    phase2 += 2.0 * M_PI * 2.7 * f0 / af::kSampleRate;
    w.samples[static_cast<size_t>(i)] = 0.35 * std::sin(phase) +
                                        0.15 * std::sin(phase2) +
                                        0.02 * rng.uniform(-1, 1);
  }
  return w;
}

struct ToyCorpus {
  std::unique_ptr<TempDir> dir;
  af::TrainConfig config;
  std::string manifest_path;
  std::vector<std::vector<int>> durations;  // per utterance
};

// Two utterances, two accents, two speakers, pseudo BN features.
inline ToyCorpus make_toy_corpus(const std::string& tag,
                                 af::AblationMode mode = af::AblationMode::kFull,
                                 uint64_t seed = 1234) {
  ToyCorpus corpus;
  corpus.dir = std::make_unique<TempDir>(tag);
  const TempDir& d = *corpus.dir;

  auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream f(d.file(name));
    f << text;
  };
  write("mandarin.phones", "<pad>\na\nb\n");
  write("sichuan.phones", "<pad>\na\nc\n");
  write("mandarin.g2p", "a\ta\nb\tb\n");
  write("sichuan.g2p", "a\ta\nb\tc\n");

  corpus.durations = {{5, 6, 7, 5, 6, 7, 5}, {4, 5, 6, 4, 5, 6}};
  const std::vector<std::string> accents = {"mandarin", "sichuan"};
  const std::vector<std::vector<std::string>> symbols = {
      {"a", "b", "a", "b", "a", "b", "a"}, {"a", "c", "a", "c", "a", "c"}};
  const std::vector<double> f0 = {180.0, 120.0};

  std::string manifest;
  for (int u = 0; u < 2; ++u) {
    const std::string utt = "u" + std::to_string(u + 1);
    std::ostringstream dur_text;
    for (size_t i = 0; i < corpus.durations[static_cast<size_t>(u)].size(); ++i)
      dur_text << symbols[static_cast<size_t>(u)][i] << '\t'
               << corpus.durations[static_cast<size_t>(u)][i] << '\n';
    write(utt + ".dur", dur_text.str());
    af::save_wav(d.file(utt + ".wav"),
                 toy_utterance_wav(corpus.durations[static_cast<size_t>(u)],
                                   f0[static_cast<size_t>(u)], seed + static_cast<uint64_t>(u)));
    manifest += utt + "|s" + std::to_string(u) + "|" + accents[static_cast<size_t>(u)] +
                "|" + d.file(utt + ".wav") + "|" + d.file(utt + ".dur") +
                "|PSEUDO\n";
  }
  write("manifest.txt", manifest);
  corpus.manifest_path = d.file("manifest.txt");

  af::TrainConfig cfg;
  cfg.accents = {{"mandarin", d.file("mandarin.phones"), d.file("mandarin.g2p")},
                 {"sichuan", d.file("sichuan.phones"), d.file("sichuan.g2p")}};
  cfg.speakers = {"s0", "s1"};
  cfg.ablation = mode;
  cfg.seed = seed;
  cfg.apply_toy_preset();
  corpus.config = cfg;
  return corpus;
}

}  // namespace aftest
