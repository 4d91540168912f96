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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "mixemb/dataset.h"
#include "mixemb/dsp.h"
#include "mixemb/synth.h"

using namespace mixemb;

namespace {

// Max-energy window scan owned by the tests (independent of the library's
// VAD path).
std::vector<double> best_window(const std::vector<double>& x, int len) {
  int64_t best = 0;
  double best_e = -1.0;
  for (int64_t s = 0; s + len <= static_cast<int64_t>(x.size()); s += 200) {
    double e = 0.0;
    for (int i = 0; i < len; ++i)
      e += x[static_cast<size_t>(s + i)] * x[static_cast<size_t>(s + i)];
    if (e > best_e) {
      best_e = e;
      best = s;
    }
  }
  return std::vector<double>(x.begin() + best, x.begin() + best + len);
}

// FFT peak-pick oracle over a Hann-windowed max-energy segment.
double dominant_freq_hz(const Waveform& w) {
  const int nfft = 8192;
  std::vector<double> seg = best_window(w.samples, nfft);
  std::vector<double> win = hann_window(nfft);
  for (int i = 0; i < nfft; ++i) seg[static_cast<size_t>(i)] *= win[static_cast<size_t>(i)];
  auto spec = rfft(seg, nfft);
  double best_mag = -1.0;
  int best_bin = 0;
  for (int k = 0; k < static_cast<int>(spec.size()); ++k) {
    double f = static_cast<double>(k) * kSampleRate / nfft;
    if (f < 60.0 || f > 3900.0) continue;
    double m = std::abs(spec[static_cast<size_t>(k)]);
    if (m > best_mag) {
      best_mag = m;
      best_bin = k;
    }
  }
  return static_cast<double>(best_bin) * kSampleRate / nfft;
}

// Autocorrelation pitch oracle with parabolic refinement.
double autocorr_pitch_hz(const Waveform& w) {
  std::vector<double> seg = best_window(w.samples, 4000);
  auto r = [&](int tau) {
    double acc = 0.0;
    for (size_t i = 0; i + static_cast<size_t>(tau) < seg.size(); ++i)
      acc += seg[i] * seg[i + static_cast<size_t>(tau)];
    return acc;
  };
  int best_tau = 20;
  double best_v = -1e300;
  for (int tau = 20; tau <= 100; ++tau) {
    double v = r(tau);
    if (v > best_v) {
      best_v = v;
      best_tau = tau;
    }
  }
  double rm = r(best_tau - 1), r0 = r(best_tau), rp = r(best_tau + 1);
  double denom = rm - 2.0 * r0 + rp;
  double delta = denom != 0.0 ? 0.5 * (rm - rp) / denom : 0.0;
  return kSampleRate / (best_tau + delta);
}

SpeakerProfile plain_profile(double f0, double vibrato_depth) {
  SpeakerProfile p;
  p.speaker_id = 0;
  p.f0 = f0;
  p.harmonic_gains = {1.0, 0.5, 0.33, 0.25, 0.2, 0.16};
  p.formant_centers = {500.0, 1500.0, 2500.0};
  p.vibrato_rate = 5.5;
  p.vibrato_depth = vibrato_depth;
  p.seed = 99;
  return p;
}

}  // namespace

TEST_CASE("synth_utterance is deterministic per (profile, seed)") {
  SpeakerProfile p = random_profile(3, 42);
  Waveform a = synth_utterance(p, 2.0, 7);
  Waveform b = synth_utterance(p, 2.0, 7);
  REQUIRE(a.size() == b.size());
  for (int64_t i = 0; i < a.size(); ++i)
    CHECK(a.samples[static_cast<size_t>(i)] == b.samples[static_cast<size_t>(i)]);
  Waveform c = synth_utterance(p, 2.0, 8);
  bool differs = false;
  for (int64_t i = 0; i < a.size() && !differs; ++i)
    differs = a.samples[static_cast<size_t>(i)] != c.samples[static_cast<size_t>(i)];
  CHECK(differs);
}

TEST_CASE("synth_utterance rejects out-of-range durations") {
  SpeakerProfile p = random_profile(0, 1);
  CHECK_THROWS_AS(synth_utterance(p, 0.5, 1), ValueError);
  CHECK_THROWS_AS(synth_utterance(p, 10.5, 1), ValueError);
}

TEST_CASE("dominant spectral peak sits at the profile f0") {
  for (double f0 : {200.0, 120.0}) {
    SpeakerProfile p = plain_profile(f0, 0.0);
    Waveform w = synth_utterance(p, 4.0, 5);
    double peak = dominant_freq_hz(w);
    CHECK(std::fabs(peak - f0) <= static_cast<double>(kSampleRate) / 8192 + 1e-9);
  }
}

TEST_CASE("autocorrelation pitch matches f0 without vibrato") {
  for (double f0 : {137.0, 221.0, 310.0}) {
    SpeakerProfile p = plain_profile(f0, 0.0);
    p.seed = 123;
    Waveform w = synth_utterance(p, 3.0, 11);
    CHECK(std::fabs(autocorr_pitch_hz(w) - f0) < 2.0);
  }
}

TEST_CASE("utterances include 20-40% low-energy pause samples") {
  SpeakerProfile p = random_profile(5, 21);
  Waveform w = synth_utterance(p, 4.0, 3);
  int64_t quiet = 0;
  for (double v : w.samples)
    if (std::fabs(v) < 1e-3) ++quiet;
  double fraction = static_cast<double>(quiet) / static_cast<double>(w.size());
  CHECK(fraction > 0.10);
  CHECK(fraction < 0.55);
  CHECK(peak_abs(w) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("random profiles satisfy their invariants") {
  for (int id = 0; id < 40; ++id) {
    SpeakerProfile p = random_profile(id, 42);
    CHECK(p.f0 >= 80.0);
    CHECK(p.f0 <= 400.0);
    for (double g : p.harmonic_gains) CHECK(g >= 0.0);
    for (double f : p.formant_centers) CHECK(f < kSampleRate / 2.0);
    CHECK(p.formant_centers.size() >= 2);
    CHECK(p.formant_centers.size() <= 3);
  }
}

TEST_CASE("white noise is unit RMS and deterministic") {
  Waveform a = synth_noise(NoiseKind::kWhite, 2.0, 9);
  CHECK(rms(a) == doctest::Approx(1.0).epsilon(1e-6));
  Waveform b = synth_noise(NoiseKind::kWhite, 2.0, 9);
  for (int64_t i = 0; i < a.size(); ++i)
    CHECK(a.samples[static_cast<size_t>(i)] == b.samples[static_cast<size_t>(i)]);
}

TEST_CASE("pink noise slope is about -3 dB per octave") {
  Waveform w = synth_noise(NoiseKind::kPink, 4.0, 31);
  const int nfft = 16384;
  std::vector<double> x = w.samples;
  x.resize(nfft, 0.0);
  auto spec = rfft(x, nfft);
  // Log-log regression of power vs frequency over 100-3000 Hz.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int count = 0;
  for (int k = 1; k < static_cast<int>(spec.size()); ++k) {
    double f = static_cast<double>(k) * kSampleRate / nfft;
    if (f < 100.0 || f > 3000.0) continue;
    double p = std::norm(spec[static_cast<size_t>(k)]);
    double lx = std::log2(f);
    double ly = 10.0 * std::log10(p + 1e-30);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++count;
  }
  double slope = (count * sxy - sx * sy) / (count * sxx - sx * sx);
  CHECK(slope == doctest::Approx(-3.01).epsilon(0.33));  // +-1 dB/octave
  CHECK(rms(w) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("babble noise works and unknown kinds are rejected") {
  Waveform w = synth_noise(NoiseKind::kBabble, 1.5, 77);
  CHECK(rms(w) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK_THROWS_AS(noise_kind_from_string("brown"), ValueError);
  CHECK(noise_kind_from_string("pink") == NoiseKind::kPink);
}

TEST_CASE("energy VAD crop finds the tone in silence") {
  Waveform w;
  w.samples.assign(8000, 0.0);
  for (int i = 0; i < 16000; ++i)
    w.samples.push_back(0.3 * std::sin(2.0 * 3.14159265358979 * 440.0 * i / kSampleRate));
  w.samples.resize(w.samples.size() + 8000, 0.0);
  Waveform crop = energy_vad_crop(w, 2.0);
  CHECK(crop.size() == 16000);
  // The chosen window must start within one frame of the tone onset.
  double first_sq = crop.samples[0] * crop.samples[0];
  (void)first_sq;
  double energy = 0.0;
  for (double v : crop.samples) energy += v * v;
  CHECK(energy == doctest::Approx(16000 * 0.5 * 0.3 * 0.3).epsilon(0.01));
}

TEST_CASE("energy VAD crop on silence returns zero energy") {
  Waveform w;
  w.samples.assign(24000, 0.0);
  Waveform crop = energy_vad_crop(w, 2.0);
  CHECK(crop.size() == 16000);
  for (double v : crop.samples) CHECK(v == 0.0);
}

TEST_CASE("energy VAD crop maximizes over the exhaustive window scan") {
  SpeakerProfile p = random_profile(8, 13);
  Waveform utt = synth_utterance(p, 4.0, 2);
  Waveform crop = energy_vad_crop(utt, 2.0);
  double crop_e = 0.0;
  for (double v : crop.samples) crop_e += v * v;
  const int64_t target = 16000;
  for (int64_t s = 0; s + target <= utt.size(); s += 200) {
    double e = 0.0;
    for (int64_t i = 0; i < target; ++i)
      e += utt.samples[static_cast<size_t>(s + i)] * utt.samples[static_cast<size_t>(s + i)];
    CHECK(crop_e >= e - 1e-9);
  }
  CHECK_THROWS_AS(energy_vad_crop(crop, 3.0), ValueError);
}

TEST_CASE("snr sampler covers three equal modes inside [-5, 25]") {
  Rng rng(1234);
  int counts[3] = {0, 0, 0};
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    double snr = sample_snr(rng);
    CHECK(snr >= -5.0);
    CHECK(snr <= 25.0);
    if (snr < 5.0)
      ++counts[0];
    else if (snr < 15.0)
      ++counts[1];
    else
      ++counts[2];
  }
  for (int m = 0; m < 3; ++m)
    CHECK(std::fabs(counts[m] / static_cast<double>(n) - 1.0 / 3.0) < 0.03);
  // Same seed, same sequence.
  Rng a(55), b(55);
  for (int i = 0; i < 100; ++i) CHECK(sample_snr(a) == sample_snr(b));
}

namespace {

std::vector<Waveform> two_test_sources() {
  SpeakerProfile p1 = plain_profile(150.0, 0.01);
  SpeakerProfile p2 = plain_profile(240.0, 0.01);
  p2.seed = 7;
  Waveform a = energy_vad_crop(synth_utterance(p1, 3.0, 1), 2.0);
  Waveform b = energy_vad_crop(synth_utterance(p2, 3.0, 2), 2.0);
  return {a, b};
}

}  // namespace

TEST_CASE("noise-free mix equals the sum of shifted sources") {
  auto sources = two_test_sources();
  Waveform noise = synth_noise(NoiseKind::kWhite, 2.0, 5);
  MixOptions opt;
  opt.include_noise = false;
  MixtureSample ms = mix(sources, noise, 0.6, 10.0, 3, opt);
  for (int64_t i = 0; i < ms.mixture.size(); ++i) {
    double expect = 0.0;
    for (const auto& s : ms.sources) expect += s.samples[static_cast<size_t>(i)];
    CHECK(std::fabs(ms.mixture.samples[static_cast<size_t>(i)] - expect) <= 1e-12);
  }
}

TEST_CASE("mix hits the requested speech-to-noise ratio") {
  auto sources = two_test_sources();
  Waveform noise = synth_noise(NoiseKind::kPink, 4.0, 6);
  for (double snr : {-5.0, 0.0, 10.0, 25.0}) {
    MixtureSample ms = mix(sources, noise, 0.5, snr, 11);
    std::vector<double> speech(ms.mixture.samples.size(), 0.0);
    for (const auto& s : ms.sources)
      for (size_t i = 0; i < speech.size(); ++i) speech[i] += s.samples[i];
    double measured =
        10.0 * std::log10(signal_power(speech) / signal_power(ms.noise.samples));
    CHECK(measured == doctest::Approx(snr).epsilon(1e-9));
  }
}

TEST_CASE("mix staggers sources by round((1-overlap)*L)") {
  auto sources = two_test_sources();
  Waveform noise = synth_noise(NoiseKind::kWhite, 2.0, 5);
  MixtureSample ms = mix(sources, noise, 0.5, 10.0, 3);
  REQUIRE(ms.start_offsets.size() == 2);
  CHECK(ms.start_offsets[0] == 0);
  CHECK(ms.start_offsets[1] == 8000);
  CHECK(ms.mixture.size() == 24000);
  MixtureSample ms2 = mix(sources, noise, 0.8, 10.0, 3);
  CHECK(ms2.start_offsets[1] == 3200);
}

TEST_CASE("mix validates overlap range and source count") {
  auto sources = two_test_sources();
  Waveform noise = synth_noise(NoiseKind::kWhite, 2.0, 5);
  CHECK_THROWS_AS(mix(sources, noise, 0.4, 10.0, 3), ValueError);
  CHECK_THROWS_AS(mix(sources, noise, 0.85, 10.0, 3), ValueError);
  CHECK_THROWS_AS(mix({}, noise, 0.6, 10.0, 3), ValueError);
  CHECK_THROWS_AS(mix({sources[0]}, noise, 0.6, 10.0, 3), ValueError);
}

TEST_CASE("mixture reconstructs from its emitted components") {
  Rng rng(2024);
  for (int trial = 0; trial < 4; ++trial) {
    auto sources = two_test_sources();
    Waveform noise =
        synth_noise(trial % 2 ? NoiseKind::kWhite : NoiseKind::kBabble, 3.0,
                    static_cast<uint64_t>(trial));
    double overlap = rng.uniform(0.5, 0.8);
    double snr = sample_snr(rng);
    MixtureSample ms = mix(sources, noise, overlap, snr, static_cast<uint64_t>(trial));
    CHECK(ms.overlap_ratio >= 0.5);
    CHECK(ms.overlap_ratio <= 0.8);
    for (int64_t i = 0; i < ms.mixture.size(); ++i) {
      double expect = ms.noise.samples[static_cast<size_t>(i)];
      for (const auto& s : ms.sources) expect += s.samples[static_cast<size_t>(i)];
      CHECK(std::fabs(ms.mixture.samples[static_cast<size_t>(i)] - expect) <= 1e-9);
    }
  }
}

TEST_CASE("build_dataset writes deterministic manifests with the right shape") {
  namespace fs = std::filesystem;
  DataConfig cfg;
  cfg.n_speakers = 6;
  cfg.n_test_speakers = 3;
  cfg.n_sp = 2;
  cfg.train_mixtures = 6;
  cfg.test_mixtures = 4;
  cfg.teacher_train_clips = 6;
  cfg.teacher_test_clips = 3;
  cfg.seed = 404;
  fs::path dir = fs::temp_directory_path() / "mixemb_ds_test";
  fs::remove_all(dir);
  DatasetPaths paths = build_dataset(cfg, dir.string());

  Manifest train = load_manifest(paths.mix_train);
  CHECK(train.kind == "mixture");
  CHECK(train.entries.size() == 6);
  for (const auto& e : train.entries) {
    CHECK(e.speaker_ids.size() == 2);
    CHECK(e.speaker_ids[0] != e.speaker_ids[1]);
    CHECK(e.source_paths.size() == 2);
    CHECK(e.overlap_ratio >= 0.5);
    CHECK(e.overlap_ratio <= 0.8);
    CHECK(e.snr_db >= -5.0);
    CHECK(e.snr_db <= 25.0);
  }

  // Disjoint speaker pools.
  Manifest test = load_manifest(paths.mix_test);
  std::set<int> train_ids, test_ids;
  for (const auto& e : train.entries)
    train_ids.insert(e.speaker_ids.begin(), e.speaker_ids.end());
  for (const auto& e : test.entries)
    test_ids.insert(e.speaker_ids.begin(), e.speaker_ids.end());
  for (int id : test_ids) CHECK(train_ids.count(id) == 0);

  // Byte-identical on rebuild with the same config and seed.
  auto read_file = [](const std::string& p) {
    std::ifstream f(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(f)),
                       std::istreambuf_iterator<char>());
  };
  std::string before = read_file(paths.mix_train);
  fs::path dir2 = fs::temp_directory_path() / "mixemb_ds_test2";
  fs::remove_all(dir2);
  DatasetPaths paths2 = build_dataset(cfg, dir2.string());
  CHECK(before == read_file(paths2.mix_train));
  CHECK(read_file(paths.teacher_test) == read_file(paths2.teacher_test));

  // Loaded samples reconstruct within 16-bit quantization error.
  LoadedSample s = load_sample(train, train.entries[0]);
  REQUIRE(s.sources.size() == 2);
  CHECK(s.sources[0].size() == s.mixture.size());
  for (int64_t i = 0; i < s.mixture.size(); ++i) {
    double expect = s.noise.samples[static_cast<size_t>(i)];
    for (const auto& src : s.sources) expect += src.samples[static_cast<size_t>(i)];
    CHECK(std::fabs(s.mixture.samples[static_cast<size_t>(i)] - expect) < 2e-4);
  }

  // Single-speaker manifests carry one source and a clean/noisy pair.
  Manifest teacher = load_manifest(paths.teacher_train);
  CHECK(teacher.kind == "single");
  CHECK(teacher.entries[0].speaker_ids.size() == 1);
  LoadedSample ts = load_sample(teacher, teacher.entries[0]);
  CHECK(ts.sources[0].size() == 16000);

  Manifest enroll = load_manifest(paths.enroll);
  CHECK(enroll.entries.size() == static_cast<size_t>(cfg.n_test_speakers));

  fs::remove_all(dir);
  fs::remove_all(dir2);
}
