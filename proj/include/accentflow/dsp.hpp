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
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "accentflow/autograd.hpp"
#include "accentflow/fft.hpp"
#include "accentflow/tensor.hpp"

namespace af {

constexpr int kSampleRate = 16000;
constexpr int kNumMels = 80;
constexpr int kBnDim = 512;
constexpr int kHop = 200;      // 12.5 ms at 16 kHz
constexpr int kWin = 800;      // 50 ms
constexpr int kFftSize = 1024;
constexpr real kLogFloor = 1e-5;

struct Waveform {
  std::vector<real> samples;  // mono, [-1, 1]
  int sample_rate = kSampleRate;

  int64_t size() const { return static_cast<int64_t>(samples.size()); }
};

struct MelSpectrogram {
  Tensor frames;  // T x 80, log-amplitude

  int num_frames() const { return frames.dim(0); }
};

struct BnFeature {
  Tensor frames;  // T_bn x 512
  std::string source;

  int num_frames() const { return frames.dim(0); }
};

// ---------------------------------------------------------------------------
// WAV I/O (16-bit PCM)
// ---------------------------------------------------------------------------

namespace wav_detail {
inline uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  AF_CHECK(in.good(), "wav: unexpected end of file");
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}
inline uint16_t read_u16(std::istream& in) {
  unsigned char b[2];
  in.read(reinterpret_cast<char*>(b), 2);
  AF_CHECK(in.good(), "wav: unexpected end of file");
  return static_cast<uint16_t>(b[0] | (b[1] << 8));
}
inline void write_u32(std::ostream& out, uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                     static_cast<char>((v >> 16) & 0xff),
                     static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}
inline void write_u16(std::ostream& out, uint16_t v) {
  const char b[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
  out.write(b, 2);
}
}  // namespace wav_detail

// Linear resampler, used only to normalize input rates to 16 kHz.
inline std::vector<real> resample_linear(const std::vector<real>& x, int sr_in,
                                         int sr_out) {
  if (sr_in == sr_out || x.empty()) return x;
  const int64_t n_out =
      static_cast<int64_t>(std::llround(static_cast<double>(x.size()) * sr_out /
                                        static_cast<double>(sr_in)));
  std::vector<real> out(static_cast<size_t>(std::max<int64_t>(n_out, 1)));
  const double step = static_cast<double>(sr_in) / sr_out;
  for (size_t i = 0; i < out.size(); ++i) {
    const double pos = i * step;
    const int64_t lo = std::min<int64_t>(static_cast<int64_t>(pos),
                                         static_cast<int64_t>(x.size()) - 1);
    const int64_t hi = std::min<int64_t>(lo + 1, static_cast<int64_t>(x.size()) - 1);
    const double frac = pos - static_cast<double>(lo);
    out[i] = x[static_cast<size_t>(lo)] * (1.0 - frac) +
             x[static_cast<size_t>(hi)] * frac;
  }
  return out;
}

inline Waveform load_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  AF_CHECK(in.good(), "cannot open wav: " + path);
  char tag[4];
  in.read(tag, 4);
  AF_CHECK(in.good() && std::memcmp(tag, "RIFF", 4) == 0,
           "wav: missing RIFF header: " + path);
  wav_detail::read_u32(in);  // riff size
  in.read(tag, 4);
  AF_CHECK(in.good() && std::memcmp(tag, "WAVE", 4) == 0,
           "wav: missing WAVE tag: " + path);

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t sample_rate = 0;
  std::vector<int16_t> pcm;
  bool have_fmt = false, have_data = false;
  while (in.read(tag, 4)) {
    const uint32_t size = wav_detail::read_u32(in);
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      AF_CHECK(size >= 16, "wav: short fmt chunk: " + path);
      format = wav_detail::read_u16(in);
      channels = wav_detail::read_u16(in);
      sample_rate = wav_detail::read_u32(in);
      wav_detail::read_u32(in);  // byte rate
      wav_detail::read_u16(in);  // block align
      bits = wav_detail::read_u16(in);
      in.ignore(size - 16);
      have_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      AF_CHECK(have_fmt, "wav: data chunk before fmt: " + path);
      AF_CHECK(size % 2 == 0, "wav: odd data size: " + path);
      pcm.resize(size / 2);
      in.read(reinterpret_cast<char*>(pcm.data()), size);
      AF_CHECK(in.good(), "wav: truncated data chunk: " + path);
      have_data = true;
    } else {
      in.ignore(size + (size % 2));  // chunks are word-aligned
    }
  }
  AF_CHECK(have_fmt && have_data, "wav: missing fmt or data chunk: " + path);
  AF_CHECK(format == 1, "wav: only PCM encoding supported: " + path);
  AF_CHECK(channels == 1, "wav: only mono supported: " + path);
  AF_CHECK(bits == 16, "wav: only 16-bit supported: " + path);

  Waveform w;
  w.samples.resize(pcm.size());
  for (size_t i = 0; i < pcm.size(); ++i) w.samples[i] = pcm[i] / 32768.0;
  if (sample_rate != kSampleRate)
    w.samples = resample_linear(w.samples, static_cast<int>(sample_rate),
                                kSampleRate);
  w.sample_rate = kSampleRate;
  return w;
}

inline void save_wav(const std::string& path, const Waveform& w) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  AF_CHECK(out.good(), "cannot open wav for write: " + path);
  const uint32_t data_size = static_cast<uint32_t>(w.samples.size() * 2);
  out.write("RIFF", 4);
  wav_detail::write_u32(out, 36 + data_size);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  wav_detail::write_u32(out, 16);
  wav_detail::write_u16(out, 1);  // PCM
  wav_detail::write_u16(out, 1);  // mono
  wav_detail::write_u32(out, static_cast<uint32_t>(w.sample_rate));
  wav_detail::write_u32(out, static_cast<uint32_t>(w.sample_rate * 2));
  wav_detail::write_u16(out, 2);
  wav_detail::write_u16(out, 16);
  out.write("data", 4);
  wav_detail::write_u32(out, data_size);
  for (real s : w.samples) {
    const real c = std::max<real>(-1.0, std::min<real>(1.0, s));
    const int16_t v = static_cast<int16_t>(std::lround(c * 32767.0));
    wav_detail::write_u16(out, static_cast<uint16_t>(v));
  }
  AF_CHECK(out.good(), "wav write failed: " + path);
}

// ---------------------------------------------------------------------------
// mel extraction
// ---------------------------------------------------------------------------

inline int mel_frame_count(int64_t num_samples) {
  return static_cast<int>(num_samples / kHop) + 1;
}

// Multi-bounce reflect of index i into [0, n).
inline int64_t reflect_index(int64_t i, int64_t n) {
  if (n == 1) return 0;
  const int64_t period = 2 * (n - 1);
  int64_t m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - m;
}

namespace mel_detail {

inline const std::vector<real>& hann_window() {
  static const std::vector<real> w = [] {
    std::vector<real> v(kWin);
    for (int i = 0; i < kWin; ++i)
      v[static_cast<size_t>(i)] = 0.5 * (1.0 - std::cos(2.0 * M_PI * i / kWin));
    return v;
  }();
  return w;
}

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

// Triangular filterbank, (n_fft/2+1) x n_mels, 0..8000 Hz on the mel scale.
inline const Tensor& filterbank() {
  static const Tensor fb = [] {
    const int n_bins = kFftSize / 2 + 1;
    Tensor t({n_bins, kNumMels});
    const double mel_lo = hz_to_mel(0.0), mel_hi = hz_to_mel(8000.0);
    std::vector<double> edges(kNumMels + 2);
    for (int i = 0; i < kNumMels + 2; ++i)
      edges[static_cast<size_t>(i)] =
          mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (kNumMels + 1));
    for (int k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * kSampleRate / kFftSize;
      for (int m = 0; m < kNumMels; ++m) {
        const double left = edges[static_cast<size_t>(m)];
        const double center = edges[static_cast<size_t>(m + 1)];
        const double right = edges[static_cast<size_t>(m + 2)];
        double w = 0.0;
        if (f >= left && f <= center && center > left)
          w = (f - left) / (center - left);
        else if (f > center && f <= right && right > center)
          w = (right - f) / (right - center);
        t.at(k, m) = w;
      }
    }
    return t;
  }();
  return fb;
}

// Magnitude spectrum of frame t (centered at t*hop, window reflected at the
// signal edges). Also returns the windowed frame source indices.
inline void frame_magnitude(const std::vector<real>& x, int t,
                            std::vector<double>& re, std::vector<double>& im,
                            std::vector<double>& mag) {
  const int64_t n = static_cast<int64_t>(x.size());
  std::vector<double> buf(kFftSize, 0.0);
  const auto& win = hann_window();
  for (int j = 0; j < kWin; ++j) {
    const int64_t src = reflect_index(static_cast<int64_t>(t) * kHop + j - kWin / 2, n);
    buf[static_cast<size_t>(j)] = x[static_cast<size_t>(src)] * win[static_cast<size_t>(j)];
  }
  rfft(buf, re, im);
  mag.resize(re.size());
  for (size_t k = 0; k < re.size(); ++k)
    mag[k] = std::sqrt(re[k] * re[k] + im[k] * im[k]);
}

}  // namespace mel_detail

// Fixed signal-processing layer: STFT magnitude -> mel filterbank ->
// log(max(x, 1e-5)). T = floor(num_samples / hop) + 1.
inline MelSpectrogram mel_extract(const Waveform& w) {
  AF_CHECK(w.sample_rate == kSampleRate, "mel_extract: expected 16 kHz input");
  AF_CHECK(w.size() >= kHop, "mel_extract: waveform shorter than one hop");
  const int T = mel_frame_count(w.size());
  const Tensor& fb = mel_detail::filterbank();
  const int n_bins = kFftSize / 2 + 1;
  MelSpectrogram mel;
  mel.frames = Tensor({T, kNumMels});
  std::vector<double> re, im, mag;
  for (int t = 0; t < T; ++t) {
    mel_detail::frame_magnitude(w.samples, t, re, im, mag);
    for (int m = 0; m < kNumMels; ++m) {
      double s = 0.0;
      for (int k = 0; k < n_bins; ++k) s += mag[static_cast<size_t>(k)] * fb.at(k, m);
      mel.frames.at(t, m) = std::log(std::max(s, kLogFloor));
    }
  }
  return mel;
}

// Differentiable mel extraction for the reconstruction loss. Forward matches
// mel_extract exactly; backward chains log-clamp, filterbank, magnitude, the
// rFFT adjoint, the window, and the reflect scatter.
inline ag::Var mel_op(const ag::Var& wav) {
  AF_CHECK(wav->value.rank() == 1, "mel_op: expected rank-1 waveform");
  const int64_t n = wav->value.numel();
  AF_CHECK(n >= kHop, "mel_op: waveform shorter than one hop");
  const int T = mel_frame_count(n);
  const int n_bins = kFftSize / 2 + 1;
  const Tensor& fb = mel_detail::filterbank();

  Tensor out({T, kNumMels});
  // per-frame spectra retained for the backward pass
  auto spectra = std::make_shared<std::vector<std::vector<double>>>();
  auto mel_lin = std::make_shared<Tensor>(Tensor({T, kNumMels}));
  spectra->resize(static_cast<size_t>(T) * 3);
  std::vector<double> re, im, mag;
  for (int t = 0; t < T; ++t) {
    mel_detail::frame_magnitude(wav->value.data, t, re, im, mag);
    (*spectra)[static_cast<size_t>(t) * 3 + 0] = re;
    (*spectra)[static_cast<size_t>(t) * 3 + 1] = im;
    (*spectra)[static_cast<size_t>(t) * 3 + 2] = mag;
    for (int m = 0; m < kNumMels; ++m) {
      double s = 0.0;
      for (int k = 0; k < n_bins; ++k) s += mag[static_cast<size_t>(k)] * fb.at(k, m);
      mel_lin->at(t, m) = s;
      out.at(t, m) = std::log(std::max(s, kLogFloor));
    }
  }

  return ag::make_node(
      std::move(out), {wav}, [wav, T, n, n_bins, spectra, mel_lin](ag::Node& nd) {
        const Tensor& fb2 = mel_detail::filterbank();
        const auto& win = mel_detail::hann_window();
        std::vector<double> gre(static_cast<size_t>(n_bins));
        std::vector<double> gim(static_cast<size_t>(n_bins));
        std::vector<double> gframe;
        for (int t = 0; t < T; ++t) {
          const auto& re2 = (*spectra)[static_cast<size_t>(t) * 3 + 0];
          const auto& im2 = (*spectra)[static_cast<size_t>(t) * 3 + 1];
          const auto& mag2 = (*spectra)[static_cast<size_t>(t) * 3 + 2];
          for (int k = 0; k < n_bins; ++k) {
            double gmag = 0.0;
            for (int m = 0; m < kNumMels; ++m) {
              const double lin = mel_lin->at(t, m);
              if (lin <= kLogFloor) continue;  // clamped, no gradient
              gmag += nd.grad.at(t, m) / lin * fb2.at(k, m);
            }
            const double mg = mag2[static_cast<size_t>(k)];
            if (mg > 0.0) {
              gre[static_cast<size_t>(k)] = gmag * re2[static_cast<size_t>(k)] / mg;
              gim[static_cast<size_t>(k)] = gmag * im2[static_cast<size_t>(k)] / mg;
            } else {
              gre[static_cast<size_t>(k)] = 0.0;
              gim[static_cast<size_t>(k)] = 0.0;
            }
          }
          rfft_adjoint(gre, gim, kFftSize, gframe);
          for (int j = 0; j < kWin; ++j) {
            const int64_t src =
                reflect_index(static_cast<int64_t>(t) * kHop + j - kWin / 2, n);
            wav->grad.data[static_cast<size_t>(src)] +=
                gframe[static_cast<size_t>(j)] * win[static_cast<size_t>(j)];
          }
        }
      });
}

// ---------------------------------------------------------------------------
// BN features
// ---------------------------------------------------------------------------

// Linear time-axis interpolation to target_T frames; endpoints preserved.
inline BnFeature interpolate_bn(const BnFeature& bn, int target_T) {
  AF_CHECK(target_T >= 1, "interpolate_bn: target_T must be >= 1");
  const int T_in = bn.num_frames();
  AF_CHECK(T_in >= 1, "interpolate_bn: empty input");
  const int C = bn.frames.dim(1);
  BnFeature out;
  out.source = bn.source;
  out.frames = Tensor({target_T, C});
  for (int i = 0; i < target_T; ++i) {
    const double pos = (target_T == 1 || T_in == 1)
                           ? 0.0
                           : static_cast<double>(i) * (T_in - 1) / (target_T - 1);
    const int lo = static_cast<int>(pos);
    const int hi = std::min(lo + 1, T_in - 1);
    const double frac = pos - lo;
    for (int c = 0; c < C; ++c)
      out.frames.at(i, c) =
          bn.frames.at(lo, c) * (1.0 - frac) + bn.frames.at(hi, c) * frac;
  }
  return out;
}

// Deterministic stand-in for ASR encoder output: a fixed random 80->512
// projection of the mel frames through tanh. Same (mel, seed) gives the
// same feature, different seeds give different projections.
inline BnFeature pseudo_bn(const MelSpectrogram& mel, uint64_t seed) {
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  const real scale = 3.0 / std::sqrt(static_cast<real>(kNumMels));
  Tensor w = Tensor::uniform({kNumMels, kBnDim}, rng, -scale, scale);
  Tensor b = Tensor::uniform({kBnDim}, rng, -0.5, 0.5);
  const int T = mel.num_frames();
  BnFeature bn;
  bn.source = "pseudo";
  bn.frames = Tensor({T, kBnDim});
  for (int t = 0; t < T; ++t)
    for (int c = 0; c < kBnDim; ++c) {
      double s = b.data[static_cast<size_t>(c)];
      for (int m = 0; m < kNumMels; ++m)
        s += (mel.frames.at(t, m) / 10.0 + 1.0) * w.at(m, c);
      bn.frames.at(t, c) = std::tanh(s);
    }
  return bn;
}

// On-disk BN pair: <base>.bn holds row-major float32, <base>.bn.hdr holds
// "<utt_id> <T_bn> 512".
inline void save_bn(const std::string& base, const std::string& utt_id,
                    const BnFeature& bn) {
  AF_CHECK(bn.frames.dim(1) == kBnDim, "save_bn: expected 512 channels");
  std::ofstream f(base + ".bn", std::ios::binary | std::ios::trunc);
  AF_CHECK(f.good(), "cannot write bn file: " + base + ".bn");
  for (real v : bn.frames.data) {
    const float x = static_cast<float>(v);
    f.write(reinterpret_cast<const char*>(&x), sizeof(float));
  }
  AF_CHECK(f.good(), "bn write failed: " + base + ".bn");
  std::ofstream h(base + ".bn.hdr", std::ios::trunc);
  h << utt_id << ' ' << bn.num_frames() << ' ' << kBnDim << '\n';
  AF_CHECK(h.good(), "bn header write failed");
}

inline BnFeature load_bn(const std::string& base) {
  std::istringstream hdr(read_text_file(base + ".bn.hdr"));
  std::string utt_id;
  int T = 0, C = 0;
  AF_CHECK(static_cast<bool>(hdr >> utt_id >> T >> C),
           "malformed bn header: " + base + ".bn.hdr");
  AF_CHECK(T >= 1 && C == kBnDim, "bn header dims invalid: " + base + ".bn.hdr");
  std::ifstream f(base + ".bn", std::ios::binary);
  AF_CHECK(f.good(), "cannot open bn file: " + base + ".bn");
  BnFeature bn;
  bn.source = base;
  bn.frames = Tensor({T, C});
  for (real& v : bn.frames.data) {
    float x = 0;
    f.read(reinterpret_cast<char*>(&x), sizeof(float));
    AF_CHECK(f.good(), "bn file truncated: " + base + ".bn");
    v = x;
  }
  return bn;
}

}  // namespace af
