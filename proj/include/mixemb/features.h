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

#ifndef MIXEMB_FEATURES_H_
#define MIXEMB_FEATURES_H_

#include "mixemb/dsp.h"
#include "mixemb/wave.h"

namespace mixemb {

inline constexpr int kWinLen = 200;  // 25 ms at 8 kHz
inline constexpr int kHop = 80;      // 10 ms
inline constexpr int kNfft = 256;
inline constexpr double kLogFloor = 1e-6;

struct FeatureSequence {
  Mat frames;  // T x F log mel-filterbank energies
  double frame_rate = static_cast<double>(kSampleRate) / kHop;
};

// Log mel-filterbank features: 25 ms Hann window, 10 ms hop, n_mels
// triangular filters over the power spectrum, log(x + 1e-6) compression.
// T = floor((N - window) / hop) + 1. Input shorter than one window raises
// ValueError.
FeatureSequence featurize(const Waveform& wave, int n_mels = 40);

// Center frequencies (Hz) of the filters used by featurize.
std::vector<double> mel_centers(int n_mels = 40);

}  // namespace mixemb

#endif  // MIXEMB_FEATURES_H_
