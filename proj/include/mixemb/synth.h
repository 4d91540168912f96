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

#ifndef MIXEMB_SYNTH_H_
#define MIXEMB_SYNTH_H_

#include <string>
#include <vector>

#include "mixemb/wave.h"

namespace mixemb {

// Parametric voice: harmonic source with vibrato, shaped by formant
// resonators, gated by speech-like pauses.
struct SpeakerProfile {
  int speaker_id = 0;
  double f0 = 150.0;                    // Hz, in [80, 400]
  std::vector<double> harmonic_gains;   // relative amplitudes, >= 0
  std::vector<double> formant_centers;  // Hz, below Nyquist
  double vibrato_rate = 5.0;            // Hz
  double vibrato_depth = 0.01;          // fraction of f0
  uint64_t seed = 0;
};

// Deterministic per speaker_id and dataset seed; pairwise-distinct f0 and
// first-formant placement via low-discrepancy sequences.
SpeakerProfile random_profile(int speaker_id, uint64_t dataset_seed);

// Harmonic-plus-formant utterance with amplitude modulation and 20-40%
// interspersed silence; peak-normalized to 0.5. Deterministic per
// (profile, seed). duration must lie in [1, 10] s.
Waveform synth_utterance(const SpeakerProfile& profile, double duration,
                         uint64_t seed);

enum class NoiseKind { kWhite, kPink, kBabble };
NoiseKind noise_kind_from_string(const std::string& s);
std::string noise_kind_to_string(NoiseKind k);

// Unit-RMS noise. Babble is six random-profile utterances summed.
Waveform synth_noise(NoiseKind kind, double duration, uint64_t seed);

// Contiguous window of target_len seconds maximizing total energy over
// 25 ms frames; scan granularity is one frame.
Waveform energy_vad_crop(const Waveform& wave, double target_len);

// One of three equally likely uniform modes: [-5,5], [5,15], [15,25] dB.
double sample_snr(Rng& rng);

struct MixtureSample {
  Waveform mixture;
  std::vector<Waveform> sources;  // source-aligned, mixture length
  Waveform noise;                 // scaled, mixture length
  std::vector<int> speaker_ids;
  double overlap_ratio = 0.0;
  double snr_db = 0.0;
  std::vector<int64_t> start_offsets;
};

struct MixOptions {
  bool include_noise = true;
  // Common gain keeps 16-bit headroom; applied to every component.
  double peak_ceiling = 0.95;
};

// Staggers equal-length sources by round((1-overlap)*L), scales noise to
// the requested speech-to-noise ratio, and sums. overlap must lie in
// [0.5, 0.8]; sources must be non-empty (2..3) and equal length.
MixtureSample mix(const std::vector<Waveform>& sources, const Waveform& noise,
                  double overlap_ratio, double snr_db, uint64_t seed,
                  const MixOptions& options = {});

// Single-speaker corruption: source plus noise at snr_db, no staggering.
MixtureSample corrupt_single(const Waveform& source, const Waveform& noise,
                             double snr_db, uint64_t seed,
                             const MixOptions& options = {});

}  // namespace mixemb

#endif  // MIXEMB_SYNTH_H_
