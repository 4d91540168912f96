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

#include "mixemb/features.h"

#include <cmath>

namespace mixemb {

FeatureSequence featurize(const Waveform& wave, int n_mels) {
  if (wave.sample_rate != kSampleRate)
    throw ValueError("featurize: expected " + std::to_string(kSampleRate) +
                     " Hz input, got " + std::to_string(wave.sample_rate));
  Stft s = stft(wave.samples, kWinLen, kHop, kNfft, /*pad_tail=*/false);
  Mat fb = mel_filterbank(kNfft, kSampleRate, n_mels);
  const int T = s.mag.rows;
  const int bins = s.mag.cols;
  FeatureSequence out;
  out.frames = Mat(T, n_mels);
  for (int t = 0; t < T; ++t) {
    for (int m = 0; m < n_mels; ++m) {
      double acc = 0.0;
      for (int k = 0; k < bins; ++k) {
        double mag = s.mag.at(t, k);
        acc += mag * mag * fb.at(k, m);
      }
      out.frames.at(t, m) = std::log(acc + kLogFloor);
    }
  }
  return out;
}

std::vector<double> mel_centers(int n_mels) {
  std::vector<double> centers;
  mel_filterbank(kNfft, kSampleRate, n_mels, &centers);
  return centers;
}

}  // namespace mixemb
