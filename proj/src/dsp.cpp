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

#include "mixemb/dsp.h"

#include <cmath>

namespace mixemb {

namespace {
constexpr double kPi = 3.14159265358979323846;

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }
}  // namespace

void fft_inplace(std::vector<std::complex<double>>& a, bool inverse) {
  const int n = static_cast<int>(a.size());
  if (!is_pow2(n))
    throw ValueError("fft: size " + std::to_string(n) +
                     " is not a power of two");
  // Bit-reversal permutation.
  for (int i = 1, j = 0; i < n; ++i) {
    int bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[static_cast<size_t>(i)], a[static_cast<size_t>(j)]);
  }
  for (int len = 2; len <= n; len <<= 1) {
    double ang = 2.0 * kPi / len * (inverse ? 1.0 : -1.0);
    std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (int i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (int k = 0; k < len / 2; ++k) {
        std::complex<double> u = a[static_cast<size_t>(i + k)];
        std::complex<double> v = a[static_cast<size_t>(i + k + len / 2)] * w;
        a[static_cast<size_t>(i + k)] = u + v;
        a[static_cast<size_t>(i + k + len / 2)] = u - v;
        w *= wlen;
      }
    }
  }
  if (inverse) {
    for (auto& x : a) x /= static_cast<double>(n);
  }
}

std::vector<std::complex<double>> rfft(const std::vector<double>& x,
                                       int nfft) {
  std::vector<std::complex<double>> buf(static_cast<size_t>(nfft),
                                        std::complex<double>(0.0, 0.0));
  size_t copy = std::min(x.size(), static_cast<size_t>(nfft));
  for (size_t i = 0; i < copy; ++i) buf[i] = std::complex<double>(x[i], 0.0);
  fft_inplace(buf, false);
  buf.resize(static_cast<size_t>(nfft / 2 + 1));
  return buf;
}

std::vector<double> hann_window(int len) {
  std::vector<double> w(static_cast<size_t>(len));
  for (int n = 0; n < len; ++n)
    w[static_cast<size_t>(n)] = 0.5 * (1.0 - std::cos(2.0 * kPi * n / len));
  return w;
}

Stft stft(const std::vector<double>& x, int win_len, int hop, int nfft,
          bool pad_tail) {
  const int n = static_cast<int>(x.size());
  if (n < win_len)
    throw ValueError("stft: input length " + std::to_string(n) +
                     " shorter than one window (" + std::to_string(win_len) +
                     ")");
  int frames;
  if (pad_tail) {
    frames = (n - win_len + hop - 1) / hop + 1;
  } else {
    frames = (n - win_len) / hop + 1;
  }
  const int bins = nfft / 2 + 1;
  std::vector<double> window = hann_window(win_len);
  Stft out;
  out.mag = Mat(frames, bins);
  out.phase = Mat(frames, bins);
  out.win_len = win_len;
  out.hop = hop;
  out.nfft = nfft;
  std::vector<double> frame(static_cast<size_t>(win_len));
  for (int t = 0; t < frames; ++t) {
    int start = t * hop;
    for (int i = 0; i < win_len; ++i) {
      int src = start + i;
      frame[static_cast<size_t>(i)] =
          src < n ? x[static_cast<size_t>(src)] * window[static_cast<size_t>(i)]
                  : 0.0;
    }
    auto spec = rfft(frame, nfft);
    for (int f = 0; f < bins; ++f) {
      out.mag.at(t, f) = std::abs(spec[static_cast<size_t>(f)]);
      out.phase.at(t, f) = std::atan2(spec[static_cast<size_t>(f)].imag(),
                                      spec[static_cast<size_t>(f)].real());
    }
  }
  return out;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

Mat mel_filterbank(int nfft, int sample_rate, int n_mels,
                   std::vector<double>* centers_hz) {
  const int bins = nfft / 2 + 1;
  const double mel_lo = hz_to_mel(0.0);
  const double mel_hi = hz_to_mel(sample_rate / 2.0);
  std::vector<double> edges(static_cast<size_t>(n_mels) + 2);
  for (int i = 0; i < n_mels + 2; ++i)
    edges[static_cast<size_t>(i)] =
        mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (n_mels + 1));
  if (centers_hz) {
    centers_hz->assign(edges.begin() + 1, edges.end() - 1);
  }
  Mat fb(bins, n_mels);
  for (int m = 0; m < n_mels; ++m) {
    double lo = edges[static_cast<size_t>(m)];
    double cen = edges[static_cast<size_t>(m) + 1];
    double hi = edges[static_cast<size_t>(m) + 2];
    for (int k = 0; k < bins; ++k) {
      double f = static_cast<double>(k) * sample_rate / nfft;
      double w = 0.0;
      if (f >= lo && f <= cen && cen > lo) {
        w = (f - lo) / (cen - lo);
      } else if (f > cen && f <= hi && hi > cen) {
        w = (hi - f) / (hi - cen);
      }
      fb.at(k, m) = w;
    }
  }
  return fb;
}

}  // namespace mixemb
