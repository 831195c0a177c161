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

#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "accentflow/inference.hpp"

namespace af {

inline real duration_mae(const std::vector<real>& pred,
                         const std::vector<real>& ref) {
  AF_CHECK(pred.size() == ref.size() && !pred.empty(),
           "duration_mae: length mismatch");
  double acc = 0.0;
  for (size_t i = 0; i < pred.size(); ++i) acc += std::abs(pred[i] - ref[i]);
  return acc / static_cast<double>(pred.size());
}

inline real cosine_similarity(const std::vector<real>& a,
                              const std::vector<real>& b) {
  AF_CHECK(a.size() == b.size() && !a.empty(), "cosine_similarity: size mismatch");
  double dot = 0, na = 0, nb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  AF_CHECK(na > 0 && nb > 0, "cosine_similarity: zero-norm input");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

// Builtin deterministic embedder: per-bin mel mean and std, 160 dims.
// Real x-vector backends plug in through the external command contract.
inline std::vector<real> mel_statistics_embedding(const Waveform& w) {
  const MelSpectrogram mel = mel_extract(w);
  const int T = mel.num_frames();
  std::vector<real> out(2 * kNumMels, 0.0);
  for (int m = 0; m < kNumMels; ++m) {
    // centered accumulation keeps constant inputs exact
    const double offset = mel.frames.at(0, m);
    double acc = 0;
    for (int t = 0; t < T; ++t) acc += mel.frames.at(t, m) - offset;
    const double mean = offset + acc / T;
    double var = 0;
    for (int t = 0; t < T; ++t) {
      const double d = mel.frames.at(t, m) - mean;
      var += d * d;
    }
    out[static_cast<size_t>(m)] = mean;
    out[static_cast<size_t>(kNumMels + m)] = std::sqrt(var / T);
  }
  return out;
}

// External embedder contract: the command reads a WAV path on stdin and
// prints whitespace-separated floats on stdout.
inline std::vector<real> external_embedding(const Waveform& w,
                                            const std::string& command,
                                            const std::string& scratch_dir) {
  const std::string wav_path = scratch_dir + "/embed_input.wav";
  save_wav(wav_path, w);
  const std::string full = "echo '" + wav_path + "' | " + command;
  FILE* pipe = popen(full.c_str(), "r");
  AF_CHECK(pipe != nullptr, "external embedder failed to start: " + command);
  std::string output;
  char buf[4096];
  size_t n;
  while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) output.append(buf, n);
  const int status = pclose(pipe);
  AF_CHECK(status == 0, "external embedder exited nonzero: " + command);
  std::istringstream is(output);
  std::vector<real> vec;
  double v;
  while (is >> v) vec.push_back(v);
  AF_CHECK(!vec.empty(), "external embedder produced no floats: " + command);
  return vec;
}

// backend: "builtin" or "external:<command>"
inline std::vector<real> embed_speaker(const Waveform& w,
                                       const std::string& backend,
                                       const std::string& scratch_dir = "/tmp") {
  if (backend == "builtin") return mel_statistics_embedding(w);
  const std::string prefix = "external:";
  if (backend.rfind(prefix, 0) == 0)
    return external_embedding(w, backend.substr(prefix.size()), scratch_dir);
  throw Error("unknown embedder backend: " + backend);
}

struct EvalRow {
  std::string utt_id;
  std::string accent;
  std::string speaker;
  real duration_mae = 0;
  real speaker_cosine = 0;
};

struct EvalReport {
  std::vector<EvalRow> rows;

  // per-accent and average rows; aggregates are plain means over utterances
  std::string to_csv() const {
    std::ostringstream os;
    os << "accent,utterances,duration_mae,speaker_cosine\n";
    std::vector<std::string> order;
    std::map<std::string, std::pair<int, std::pair<double, double>>> agg;
    for (const auto& r : rows) {
      if (!agg.count(r.accent)) order.push_back(r.accent);
      auto& a = agg[r.accent];
      a.first += 1;
      a.second.first += r.duration_mae;
      a.second.second += r.speaker_cosine;
    }
    os.precision(6);
    os << std::fixed;
    for (const auto& accent : order) {
      const auto& a = agg[accent];
      os << accent << ',' << a.first << ',' << a.second.first / a.first << ','
         << a.second.second / a.first << "\n";
    }
    if (!rows.empty()) {
      double mae = 0, cos = 0;
      for (const auto& r : rows) {
        mae += r.duration_mae;
        cos += r.speaker_cosine;
      }
      os << "average," << rows.size() << ',' << mae / rows.size() << ','
         << cos / rows.size() << "\n";
    }
    return os.str();
  }

  std::string to_per_utt_csv() const {
    std::ostringstream os;
    os << "utt_id,accent,speaker,duration_mae,speaker_cosine\n";
    os.precision(6);
    os << std::fixed;
    for (const auto& r : rows)
      os << r.utt_id << ',' << r.accent << ',' << r.speaker << ','
         << r.duration_mae << ',' << r.speaker_cosine << "\n";
    return os.str();
  }
};

// Synthesizes every manifest utterance with predicted durations and scores
// duration MAE against the alignment plus speaker cosine similarity against
// the reference recording.
inline EvalReport evaluate_manifest(const std::string& manifest_path,
                                    const Synthesizer& synth,
                                    const std::string& embedder_backend,
                                    const SynthOptions& opts = {},
                                    const std::string& scratch_dir = "/tmp") {
  EvalReport report;
  std::istringstream in(read_text_file(manifest_path));
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto fields = split(t, '|');
    AF_CHECK(fields.size() == 6,
             manifest_path + ":" + std::to_string(lineno) + ": expected 6 fields");
    EvalRow row;
    row.utt_id = trim(fields[0]);
    row.speaker = trim(fields[1]);
    row.accent = trim(fields[2]);
    const std::string wav_path = trim(fields[3]);
    const std::string dur_path = trim(fields[4]);
    AF_CHECK(file_exists(wav_path),
             "utterance " + row.utt_id + ": missing wav " + wav_path);

    const PhonemeSequence seq =
        load_alignment(dur_path, synth.registry(), row.accent);
    const SynthesisResult res =
        synth.synthesize_from_ids(seq.ids, synth.speaker_id(row.speaker), opts);

    std::vector<real> pred(res.durations.begin(), res.durations.end());
    std::vector<real> ref(seq.durations.begin(), seq.durations.end());
    row.duration_mae = duration_mae(pred, ref);

    const Waveform reference = load_wav(wav_path);
    row.speaker_cosine =
        cosine_similarity(embed_speaker(res.wav, embedder_backend, scratch_dir),
                          embed_speaker(reference, embedder_backend, scratch_dir));
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace af
