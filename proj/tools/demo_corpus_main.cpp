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

// Writes a tiny self-contained corpus (two synthetic utterances, two
// accents, two speakers, pseudo BN) so the train/synth/eval pipeline can be
// exercised without any real data.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "accentflow/dsp.hpp"

namespace {

af::Waveform harmonic_utterance(const std::vector<int>& durations,
                                double base_f0, uint64_t seed) {
  int total = 0;
  for (int d : durations) total += d;
  const int n = (total - 1) * af::kHop;
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

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  f << text;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: accentflow_demo_corpus <output-dir>" << std::endl;
    return 2;
  }
  const std::string dir = argv[1];
  std::filesystem::create_directories(dir);

  write_text(dir + "/mandarin.phones", "<pad>\na\nb\n");
  write_text(dir + "/sichuan.phones", "<pad>\na\nc\n");
  write_text(dir + "/mandarin.g2p", "a\ta\nb\tb\n");
  write_text(dir + "/sichuan.g2p", "a\ta\nb\tc\n");

  const std::vector<std::vector<int>> durations = {{5, 6, 7, 5, 6, 7, 5},
                                                   {4, 5, 6, 4, 5, 6}};
  const std::vector<std::vector<std::string>> symbols = {
      {"a", "b", "a", "b", "a", "b", "a"}, {"a", "c", "a", "c", "a", "c"}};
  const std::vector<std::string> accents = {"mandarin", "sichuan"};
  const std::vector<double> f0 = {180.0, 120.0};

  std::string manifest;
  for (int u = 0; u < 2; ++u) {
    const std::string utt = "u" + std::to_string(u + 1);
    std::string dur_text;
    for (size_t i = 0; i < durations[static_cast<size_t>(u)].size(); ++i)
      dur_text += symbols[static_cast<size_t>(u)][i] + "\t" +
                  std::to_string(durations[static_cast<size_t>(u)][i]) + "\n";
    write_text(dir + "/" + utt + ".dur", dur_text);
    af::save_wav(dir + "/" + utt + ".wav",
                 harmonic_utterance(durations[static_cast<size_t>(u)],
                                    f0[static_cast<size_t>(u)],
                                    10 + static_cast<uint64_t>(u)));
    manifest += utt + "|s" + std::to_string(u) + "|" + accents[static_cast<size_t>(u)] +
                "|" + dir + "/" + utt + ".wav|" + dir + "/" + utt +
                ".dur|PSEUDO\n";
  }
  write_text(dir + "/manifest.txt", manifest);

  nlohmann::json config;
  config["toy"] = true;
  config["steps"] = 200;
  config["seed"] = 7;
  config["data"] = {
      {"accents",
       nlohmann::json::array(
           {{{"name", "mandarin"},
             {"inventory", dir + "/mandarin.phones"},
             {"g2p", dir + "/mandarin.g2p"}},
            {{"name", "sichuan"},
             {"inventory", dir + "/sichuan.phones"},
             {"g2p", dir + "/sichuan.g2p"}}})},
      {"speakers", {"s0", "s1"}}};
  write_text(dir + "/config.json", config.dump(2) + "\n");

  std::cout << "demo corpus written to " << dir << std::endl;
  std::cout << "next: accentflow train --config " << dir << "/config.json"
            << " --data " << dir << "/manifest.txt --out " << dir << "/run"
            << std::endl;
  return 0;
}
