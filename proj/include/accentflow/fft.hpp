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
#include <vector>

#include "accentflow/common.hpp"

namespace af {

// In-place iterative radix-2 Cooley-Tukey. n must be a power of two.
// inverse=true applies the conjugate transform WITHOUT the 1/n factor.
inline void fft_inplace(std::vector<double>& re, std::vector<double>& im,
                        bool inverse) {
  const size_t n = re.size();
  AF_CHECK(n == im.size(), "fft: re/im size mismatch");
  AF_CHECK(n > 0 && (n & (n - 1)) == 0, "fft: size must be a power of two");

  // bit-reversal permutation
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) {
      std::swap(re[i], re[j]);
      std::swap(im[i], im[j]);
    }
  }

  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? 2.0 : -2.0) * M_PI / static_cast<double>(len);
    const double wr = std::cos(ang);
    const double wi = std::sin(ang);
    for (size_t i = 0; i < n; i += len) {
      double cr = 1.0, ci = 0.0;
      for (size_t k = 0; k < len / 2; ++k) {
        const size_t a = i + k;
        const size_t b = i + k + len / 2;
        const double ur = re[a], ui = im[a];
        const double vr = re[b] * cr - im[b] * ci;
        const double vi = re[b] * ci + im[b] * cr;
        re[a] = ur + vr;
        im[a] = ui + vi;
        re[b] = ur - vr;
        im[b] = ui - vi;
        const double ncr = cr * wr - ci * wi;
        ci = cr * wi + ci * wr;
        cr = ncr;
      }
    }
  }
}

// Real-input FFT: returns bins 0..n/2 of the length-n DFT of x.
inline void rfft(const std::vector<double>& x, std::vector<double>& out_re,
                 std::vector<double>& out_im) {
  const size_t n = x.size();
  std::vector<double> re(x);
  std::vector<double> im(n, 0.0);
  fft_inplace(re, im, false);
  out_re.assign(re.begin(), re.begin() + static_cast<int64_t>(n / 2 + 1));
  out_im.assign(im.begin(), im.begin() + static_cast<int64_t>(n / 2 + 1));
}

// Adjoint of rfft: given dL/d(re_k), dL/d(im_k) for k=0..n/2, returns
// dL/dx_n. Equals Re(sum_k g_k e^{+2pi i k t / n}) with g zero-extended,
// done with one inverse-sign FFT.
inline void rfft_adjoint(const std::vector<double>& g_re,
                         const std::vector<double>& g_im, size_t n,
                         std::vector<double>& out) {
  AF_CHECK(g_re.size() == n / 2 + 1 && g_im.size() == n / 2 + 1,
           "rfft_adjoint: bad gradient size");
  std::vector<double> re(n, 0.0), im(n, 0.0);
  for (size_t k = 0; k <= n / 2; ++k) {
    re[k] = g_re[k];
    im[k] = g_im[k];
  }
  fft_inplace(re, im, true);
  out = std::move(re);
}

}  // namespace af
