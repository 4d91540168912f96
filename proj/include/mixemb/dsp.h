// Copyright (c) 2026 The mixemb Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MIXEMB_DSP_H_
#define MIXEMB_DSP_H_

#include <complex>
#include <vector>

#include "mixemb/common.h"

namespace mixemb {

// Lightweight row-major matrix for non-differentiable signal data.
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> v;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), v(static_cast<size_t>(r) * c, 0.0) {}
  double& at(int r, int c) { return v[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return v[static_cast<size_t>(r) * cols + c]; }
};

// Iterative radix-2 FFT; size must be a power of two. inverse=true applies
// the 1/N factor.
void fft_inplace(std::vector<std::complex<double>>& a, bool inverse);

// Real-input FFT returning nfft/2+1 bins; x is zero-padded to nfft.
std::vector<std::complex<double>> rfft(const std::vector<double>& x, int nfft);

// Periodic Hann window.
std::vector<double> hann_window(int len);

struct Stft {
  Mat mag;    // T x bins
  Mat phase;  // T x bins
  int win_len = 0;
  int hop = 0;
  int nfft = 0;
};

// 25 ms / 10 ms framing at 8 kHz by default callers. pad_tail=false uses
// T = floor((N-win)/hop)+1 (analysis only); pad_tail=true covers the whole
// signal with a zero-padded final frame so resynthesis spans every sample.
Stft stft(const std::vector<double>& x, int win_len, int hop, int nfft,
          bool pad_tail);

// Triangular mel filterbank, rows = bins (nfft/2+1), cols = n_mels.
// Also reports each filter's center frequency in Hz.
Mat mel_filterbank(int nfft, int sample_rate, int n_mels,
                   std::vector<double>* centers_hz = nullptr);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

}  // namespace mixemb

#endif  // MIXEMB_DSP_H_
