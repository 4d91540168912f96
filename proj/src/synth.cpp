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

#include "mixemb/synth.h"

#include <algorithm>
#include <cmath>
#include <complex>

#include "mixemb/dsp.h"

namespace mixemb {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr int kVadFrame = 200;  // 25 ms at 8 kHz

double frac(double x) { return x - std::floor(x); }

}  // namespace

SpeakerProfile random_profile(int speaker_id, uint64_t dataset_seed) {
  Rng rng(seed_combine(dataset_seed, 0x5eedu, static_cast<uint64_t>(speaker_id)));
  SpeakerProfile p;
  p.speaker_id = speaker_id;
  // Golden-ratio and sqrt(2) sequences keep any two speakers apart in at
  // least one of (f0, first formant) even for adjacent ids.
  p.f0 = 95.0 + 215.0 * frac(0.6180339887498949 * (speaker_id + 1) +
                             0.25 * rng.uniform());
  double decay = rng.uniform(0.9, 1.4);
  int n_harm = 12;
  p.harmonic_gains.resize(static_cast<size_t>(n_harm));
  for (int h = 0; h < n_harm; ++h)
    p.harmonic_gains[static_cast<size_t>(h)] =
        std::pow(h + 1.0, -decay) * rng.uniform(0.75, 1.25);
  p.harmonic_gains[0] = 1.0;
  double f1 = 380.0 + 520.0 * frac(0.4142135623730951 * (speaker_id + 1) +
                                   0.2 * rng.uniform());
  p.formant_centers = {f1, rng.uniform(950.0, 2100.0),
                       rng.uniform(2300.0, 3400.0)};
  p.vibrato_rate = rng.uniform(4.5, 6.5);
  p.vibrato_depth = rng.uniform(0.005, 0.02);
  p.seed = seed_combine(dataset_seed, 0xab1eu, static_cast<uint64_t>(speaker_id));
  return p;
}

Waveform synth_utterance(const SpeakerProfile& profile, double duration,
                         uint64_t seed) {
  if (duration < 1.0 || duration > 10.0)
    throw ValueError("synth_utterance: duration " + std::to_string(duration) +
                     " outside [1, 10] s");
  Rng rng(seed_combine(profile.seed, seed));
  const int n = static_cast<int>(std::llround(duration * kSampleRate));

  // A harmonic line source through any LTI formant filter reduces to a
  // per-harmonic amplitude: evaluate the resonance envelope at h*f0.
  // Non-fundamental partials are capped below the fundamental so the
  // dominant spectral peak always sits at f0.
  std::vector<double> envelope_gain, envelope_bw;
  for (size_t k = 0; k < profile.formant_centers.size(); ++k) {
    envelope_gain.push_back(rng.uniform(0.5, 1.0));
    envelope_bw.push_back(rng.uniform(60.0, 120.0));
  }
  auto formant_envelope = [&](double f) {
    double e = 1.0;
    for (size_t k = 0; k < profile.formant_centers.size(); ++k) {
      double d = (f - profile.formant_centers[k]) / envelope_bw[k];
      e += envelope_gain[k] * std::exp(-0.5 * d * d);
    }
    return e;
  };
  std::vector<double> amp(profile.harmonic_gains.size(), 0.0);
  for (size_t h = 0; h < amp.size(); ++h) {
    double hf = profile.f0 * static_cast<double>(h + 1);
    if (hf >= 0.475 * kSampleRate) break;
    amp[h] = profile.harmonic_gains[h] * formant_envelope(hf);
  }
  for (size_t h = 1; h < amp.size(); ++h) amp[h] = std::min(amp[h], 0.85 * amp[0]);

  // Vibrato acts on the instantaneous frequency.
  std::vector<double> shaped(static_cast<size_t>(n), 0.0);
  double phase = rng.uniform(0.0, 2.0 * kPi);
  const double vib_w = 2.0 * kPi * profile.vibrato_rate / kSampleRate;
  std::vector<double> hphase(amp.size(), 0.0);
  for (size_t h = 0; h < hphase.size(); ++h) hphase[h] = rng.uniform(0.0, 2.0 * kPi);
  for (int i = 0; i < n; ++i) {
    double f = profile.f0 * (1.0 + profile.vibrato_depth * std::sin(vib_w * i));
    phase += 2.0 * kPi * f / kSampleRate;
    double v = 0.0;
    for (size_t h = 0; h < amp.size(); ++h) {
      if (amp[h] == 0.0) continue;
      double hf = f * static_cast<double>(h + 1);
      if (hf >= 0.475 * kSampleRate) continue;
      v += amp[h] * std::sin(static_cast<double>(h + 1) * phase + hphase[h]);
    }
    shaped[static_cast<size_t>(i)] = v;
  }

  // Slow amplitude modulation.
  double am_rate = rng.uniform(1.5, 4.0);
  double am_depth = rng.uniform(0.15, 0.35);
  double am_phase = rng.uniform(0.0, 2.0 * kPi);
  for (int i = 0; i < n; ++i)
    shaped[static_cast<size_t>(i)] *=
        1.0 + am_depth * std::sin(2.0 * kPi * am_rate * i / kSampleRate + am_phase);

  // Interspersed pauses totalling 20-40% of the clip, one pause per equal
  // chunk so they never overlap; 10 ms raised-cosine edges.
  double pause_frac = rng.uniform(0.2, 0.4);
  int n_pauses = 2 + static_cast<int>(rng.randint(3));
  int pause_len = static_cast<int>(pause_frac * n / n_pauses);
  int chunk = n / n_pauses;
  const int ramp = kSampleRate / 100;
  std::vector<double> gate(static_cast<size_t>(n), 1.0);
  for (int k = 0; k < n_pauses; ++k) {
    int lo = k * chunk;
    int max_start = chunk - pause_len;
    if (max_start <= 0) continue;
    int start = lo + static_cast<int>(rng.randint(max_start));
    for (int i = 0; i < pause_len; ++i) {
      int idx = start + i;
      if (idx >= n) break;
      double g = 0.0;
      if (i < ramp) g = 0.5 * (1.0 + std::cos(kPi * i / ramp));
      if (pause_len - 1 - i < ramp)
        g = std::max(g, 0.5 * (1.0 + std::cos(kPi * (pause_len - 1 - i) / ramp)));
      gate[static_cast<size_t>(idx)] = std::min(gate[static_cast<size_t>(idx)], g);
    }
  }
  // Faint breath noise under the same gate.
  for (int i = 0; i < n; ++i) {
    double g = gate[static_cast<size_t>(i)];
    shaped[static_cast<size_t>(i)] =
        g * (shaped[static_cast<size_t>(i)] + 0.004 * rng.gaussian());
  }

  Waveform out;
  out.samples = std::move(shaped);
  double p = peak_abs(out);
  if (p > 0.0) {
    double g = 0.5 / p;
    for (auto& v : out.samples) v *= g;
  }
  return out;
}

NoiseKind noise_kind_from_string(const std::string& s) {
  if (s == "white") return NoiseKind::kWhite;
  if (s == "pink") return NoiseKind::kPink;
  if (s == "babble") return NoiseKind::kBabble;
  throw ValueError("synth_noise: unknown kind '" + s + "'");
}

std::string noise_kind_to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::kWhite: return "white";
    case NoiseKind::kPink: return "pink";
    default: return "babble";
  }
}

Waveform synth_noise(NoiseKind kind, double duration, uint64_t seed) {
  if (duration <= 0.0)
    throw ValueError("synth_noise: duration must be positive");
  const int n = static_cast<int>(std::llround(duration * kSampleRate));
  Rng rng(seed_combine(seed, 0x4015eu));
  Waveform out;
  out.samples.assign(static_cast<size_t>(n), 0.0);
  switch (kind) {
    case NoiseKind::kWhite: {
      for (auto& v : out.samples) v = rng.gaussian();
      break;
    }
    case NoiseKind::kPink: {
      // Spectral synthesis: magnitude 1/sqrt(f) gives an exact -3 dB per
      // octave power slope.
      int nfft = 1;
      while (nfft < n) nfft <<= 1;
      std::vector<std::complex<double>> spec(static_cast<size_t>(nfft),
                                             {0.0, 0.0});
      for (int k = 1; k <= nfft / 2; ++k) {
        double mag = 1.0 / std::sqrt(static_cast<double>(k));
        double ph = rng.uniform(0.0, 2.0 * kPi);
        spec[static_cast<size_t>(k)] = std::polar(mag, ph);
        if (k != nfft / 2)
          spec[static_cast<size_t>(nfft - k)] =
              std::conj(spec[static_cast<size_t>(k)]);
        else
          spec[static_cast<size_t>(k)] =
              std::complex<double>(spec[static_cast<size_t>(k)].real(), 0.0);
      }
      fft_inplace(spec, /*inverse=*/true);
      for (int i = 0; i < n; ++i)
        out.samples[static_cast<size_t>(i)] = spec[static_cast<size_t>(i)].real();
      break;
    }
    case NoiseKind::kBabble: {
      double utt_dur = std::max(duration, 1.0);
      for (int t = 0; t < 6; ++t) {
        SpeakerProfile p = random_profile(
            1000 + static_cast<int>(rng.randint(1000)), rng.next_u64());
        Waveform u = synth_utterance(p, utt_dur, rng.next_u64());
        for (int i = 0; i < n; ++i)
          out.samples[static_cast<size_t>(i)] += u.samples[static_cast<size_t>(i)];
      }
      break;
    }
  }
  double r = rms(out);
  if (r > 0.0)
    for (auto& v : out.samples) v /= r;
  return out;
}

Waveform energy_vad_crop(const Waveform& wave, double target_len) {
  const int64_t n = wave.size();
  const int64_t target = std::llround(target_len * wave.sample_rate);
  if (n < target)
    throw ValueError("energy_vad_crop: input of " + std::to_string(n) +
                     " samples shorter than target " + std::to_string(target));
  // Prefix sums of energy; candidates on a 25 ms grid plus the final
  // position so the tail is reachable.
  std::vector<double> prefix(static_cast<size_t>(n) + 1, 0.0);
  for (int64_t i = 0; i < n; ++i)
    prefix[static_cast<size_t>(i) + 1] =
        prefix[static_cast<size_t>(i)] +
        wave.samples[static_cast<size_t>(i)] * wave.samples[static_cast<size_t>(i)];
  int64_t best_start = 0;
  double best_energy = -1.0;
  auto consider = [&](int64_t s) {
    double e = prefix[static_cast<size_t>(s + target)] - prefix[static_cast<size_t>(s)];
    if (e > best_energy) {
      best_energy = e;
      best_start = s;
    }
  };
  for (int64_t s = 0; s + target <= n; s += kVadFrame) consider(s);
  consider(n - target);
  Waveform out;
  out.sample_rate = wave.sample_rate;
  out.samples.assign(wave.samples.begin() + best_start,
                     wave.samples.begin() + best_start + target);
  return out;
}

double sample_snr(Rng& rng) {
  static const double lo[3] = {-5.0, 5.0, 15.0};
  int mode = static_cast<int>(rng.randint(3));
  return rng.uniform(lo[mode], lo[mode] + 10.0);
}

namespace {

// Noise segment of `len` samples: random circular rotation, tiled if short.
std::vector<double> noise_segment(const Waveform& noise, int64_t len,
                                  Rng& rng) {
  if (noise.size() == 0) throw ValueError("mix: empty noise");
  std::vector<double> seg(static_cast<size_t>(len));
  int64_t rot = rng.randint(noise.size());
  for (int64_t i = 0; i < len; ++i)
    seg[static_cast<size_t>(i)] =
        noise.samples[static_cast<size_t>((rot + i) % noise.size())];
  return seg;
}

// Scales components for 16-bit headroom and sums them; the mixture is the
// literal sum of the emitted parts so reconstruction is exact.
MixtureSample assemble(std::vector<std::vector<double>> padded,
                       std::vector<double> noise_scaled, double overlap,
                       double snr_db, std::vector<int64_t> offsets,
                       double peak_ceiling) {
  int64_t len = static_cast<int64_t>(noise_scaled.size());
  std::vector<double> mixture(static_cast<size_t>(len), 0.0);
  for (const auto& s : padded)
    for (int64_t i = 0; i < len; ++i) mixture[static_cast<size_t>(i)] += s[static_cast<size_t>(i)];
  for (int64_t i = 0; i < len; ++i)
    mixture[static_cast<size_t>(i)] += noise_scaled[static_cast<size_t>(i)];
  double peak = 0.0;
  for (double v : mixture) peak = std::max(peak, std::fabs(v));
  if (peak > peak_ceiling) {
    double g = peak_ceiling / peak;
    for (auto& s : padded)
      for (auto& v : s) v *= g;
    for (auto& v : noise_scaled) v *= g;
    std::fill(mixture.begin(), mixture.end(), 0.0);
    for (const auto& s : padded)
      for (int64_t i = 0; i < len; ++i)
        mixture[static_cast<size_t>(i)] += s[static_cast<size_t>(i)];
    for (int64_t i = 0; i < len; ++i)
      mixture[static_cast<size_t>(i)] += noise_scaled[static_cast<size_t>(i)];
  }
  MixtureSample ms;
  ms.mixture.samples = std::move(mixture);
  for (auto& s : padded) {
    Waveform w;
    w.samples = std::move(s);
    ms.sources.push_back(std::move(w));
  }
  ms.noise.samples = std::move(noise_scaled);
  ms.overlap_ratio = overlap;
  ms.snr_db = snr_db;
  ms.start_offsets = std::move(offsets);
  return ms;
}

}  // namespace

MixtureSample mix(const std::vector<Waveform>& sources, const Waveform& noise,
                  double overlap_ratio, double snr_db, uint64_t seed,
                  const MixOptions& options) {
  if (sources.empty()) throw ValueError("mix: empty source list");
  if (sources.size() < 2 || sources.size() > 3)
    throw ValueError("mix: expected 2 or 3 sources, got " +
                     std::to_string(sources.size()));
  if (overlap_ratio < 0.5 || overlap_ratio > 0.8)
    throw ValueError("mix: overlap_ratio " + std::to_string(overlap_ratio) +
                     " outside [0.5, 0.8]");
  const int64_t L = sources[0].size();
  for (const auto& s : sources)
    if (s.size() != L)
      throw ShapeError("mix: sources must share one length, got " +
                       std::to_string(s.size()) + " vs " + std::to_string(L));
  const int64_t step = std::llround((1.0 - overlap_ratio) * static_cast<double>(L));
  const int64_t n = static_cast<int64_t>(sources.size());
  const int64_t total = (n - 1) * step + L;

  std::vector<std::vector<double>> padded;
  std::vector<int64_t> offsets;
  for (int64_t k = 0; k < n; ++k) {
    std::vector<double> p(static_cast<size_t>(total), 0.0);
    int64_t off = k * step;
    for (int64_t i = 0; i < L; ++i)
      p[static_cast<size_t>(off + i)] = sources[static_cast<size_t>(k)].samples[static_cast<size_t>(i)];
    padded.push_back(std::move(p));
    offsets.push_back(off);
  }

  std::vector<double> speech_sum(static_cast<size_t>(total), 0.0);
  for (const auto& p : padded)
    for (int64_t i = 0; i < total; ++i)
      speech_sum[static_cast<size_t>(i)] += p[static_cast<size_t>(i)];

  Rng rng(seed_combine(seed, 0x31337u));
  std::vector<double> noise_scaled(static_cast<size_t>(total), 0.0);
  if (options.include_noise) {
    noise_scaled = noise_segment(noise, total, rng);
    double pn = signal_power(noise_scaled);
    if (pn <= 0.0) throw ValueError("mix: noise has zero power");
    double ps = signal_power(speech_sum);
    double g = std::sqrt(ps / (pn * std::pow(10.0, snr_db / 10.0)));
    for (auto& v : noise_scaled) v *= g;
  }
  return assemble(std::move(padded), std::move(noise_scaled), overlap_ratio,
                  snr_db, std::move(offsets), options.peak_ceiling);
}

MixtureSample corrupt_single(const Waveform& source, const Waveform& noise,
                             double snr_db, uint64_t seed,
                             const MixOptions& options) {
  if (source.size() == 0) throw ValueError("corrupt_single: empty source");
  Rng rng(seed_combine(seed, 0x31337u));
  std::vector<std::vector<double>> padded = {source.samples};
  std::vector<double> noise_scaled(source.samples.size(), 0.0);
  if (options.include_noise) {
    noise_scaled = noise_segment(noise, source.size(), rng);
    double pn = signal_power(noise_scaled);
    if (pn <= 0.0) throw ValueError("corrupt_single: noise has zero power");
    double ps = signal_power(source.samples);
    double g = std::sqrt(ps / (pn * std::pow(10.0, snr_db / 10.0)));
    for (auto& v : noise_scaled) v *= g;
  }
  MixtureSample ms = assemble(std::move(padded), std::move(noise_scaled),
                              /*overlap=*/1.0, snr_db, {0},
                              options.peak_ceiling);
  return ms;
}

}  // namespace mixemb
