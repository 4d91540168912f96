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

#ifndef MIXEMB_WAVE_H_
#define MIXEMB_WAVE_H_

#include <string>
#include <vector>

#include "mixemb/common.h"

namespace mixemb {

struct Waveform {
  std::vector<double> samples;
  int sample_rate = kSampleRate;

  int64_t size() const { return static_cast<int64_t>(samples.size()); }
  double duration() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

double rms(const Waveform& w);
double peak_abs(const Waveform& w);
double signal_power(const std::vector<double>& x);

// 16-bit PCM mono. Values are clipped to [-1, 1) on write.
void write_wav(const std::string& path, const Waveform& w);
Waveform read_wav(const std::string& path);

}  // namespace mixemb

#endif  // MIXEMB_WAVE_H_
