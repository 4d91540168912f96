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

#include "mixemb/dataset.h"

#include <algorithm>
#include <filesystem>
#include <fstream>

namespace fs = std::filesystem;

namespace mixemb {

nlohmann::json DataConfig::to_json() const {
  return nlohmann::json{{"n_speakers", n_speakers},
                        {"n_test_speakers", n_test_speakers},
                        {"split", split},
                        {"n_sp", n_sp},
                        {"train_mixtures", train_mixtures},
                        {"test_mixtures", test_mixtures},
                        {"teacher_train_clips", teacher_train_clips},
                        {"teacher_test_clips", teacher_test_clips},
                        {"enroll_per_speaker", enroll_per_speaker},
                        {"clip_seconds", clip_seconds},
                        {"utt_seconds", utt_seconds},
                        {"noise_kinds", noise_kinds},
                        {"seed", seed}};
}

DataConfig DataConfig::from_json(const nlohmann::json& j) {
  DataConfig c;
  c.n_speakers = j.at("n_speakers").get<int>();
  c.n_test_speakers = j.at("n_test_speakers").get<int>();
  c.split = j.at("split").get<std::string>();
  c.n_sp = j.at("n_sp").get<int>();
  c.train_mixtures = j.at("train_mixtures").get<int>();
  c.test_mixtures = j.at("test_mixtures").get<int>();
  c.teacher_train_clips = j.at("teacher_train_clips").get<int>();
  c.teacher_test_clips = j.at("teacher_test_clips").get<int>();
  c.enroll_per_speaker = j.at("enroll_per_speaker").get<int>();
  c.clip_seconds = j.at("clip_seconds").get<double>();
  c.utt_seconds = j.at("utt_seconds").get<double>();
  c.noise_kinds = j.at("noise_kinds").get<std::vector<std::string>>();
  c.seed = j.at("seed").get<uint64_t>();
  return c;
}

void save_manifest(const Manifest& m, const std::string& path) {
  nlohmann::json j;
  j["kind"] = m.kind;
  j["n_sp"] = m.n_sp;
  j["config"] = m.config_echo;
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : m.entries) {
    entries.push_back(nlohmann::json{{"id", e.id},
                                     {"mixture_path", e.mixture_path},
                                     {"source_paths", e.source_paths},
                                     {"noise_path", e.noise_path},
                                     {"speaker_ids", e.speaker_ids},
                                     {"overlap_ratio", e.overlap_ratio},
                                     {"snr_db", e.snr_db},
                                     {"start_offsets", e.start_offsets}});
  }
  j["entries"] = std::move(entries);
  std::ofstream f(path);
  if (!f) throw IoError("save_manifest: cannot open " + path);
  f << j.dump(2) << "\n";
  if (!f) throw IoError("save_manifest: write failed for " + path);
}

Manifest load_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("load_manifest: cannot open " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("load_manifest: invalid JSON in " + path + ": " + e.what());
  }
  Manifest m;
  m.kind = j.at("kind").get<std::string>();
  m.n_sp = j.at("n_sp").get<int>();
  m.config_echo = j.at("config");
  for (const auto& je : j.at("entries")) {
    ManifestEntry e;
    e.id = je.at("id").get<std::string>();
    e.mixture_path = je.at("mixture_path").get<std::string>();
    e.source_paths = je.at("source_paths").get<std::vector<std::string>>();
    e.noise_path = je.at("noise_path").get<std::string>();
    e.speaker_ids = je.at("speaker_ids").get<std::vector<int>>();
    e.overlap_ratio = je.at("overlap_ratio").get<double>();
    e.snr_db = je.at("snr_db").get<double>();
    e.start_offsets = je.at("start_offsets").get<std::vector<int64_t>>();
    m.entries.push_back(std::move(e));
  }
  m.base_dir = fs::path(path).parent_path().string();
  return m;
}

LoadedSample load_sample(const Manifest& m, const ManifestEntry& e) {
  fs::path base(m.base_dir);
  LoadedSample s;
  s.mixture = read_wav((base / e.mixture_path).string());
  for (const auto& p : e.source_paths)
    s.sources.push_back(read_wav((base / p).string()));
  s.noise = read_wav((base / e.noise_path).string());
  return s;
}

std::vector<int> manifest_speakers(const Manifest& m) {
  std::vector<int> ids;
  for (const auto& e : m.entries)
    for (int s : e.speaker_ids)
      if (std::find(ids.begin(), ids.end(), s) == ids.end()) ids.push_back(s);
  std::sort(ids.begin(), ids.end());
  return ids;
}

namespace {

constexpr uint64_t kStreamMixTrain = 1;
constexpr uint64_t kStreamMixTest = 2;
constexpr uint64_t kStreamTeacherTrain = 3;
constexpr uint64_t kStreamTeacherTest = 4;
constexpr uint64_t kStreamEnroll = 5;

std::string zero_pad(int v, int width) {
  std::string s = std::to_string(v);
  while (static_cast<int>(s.size()) < width) s = "0" + s;
  return s;
}

struct Pools {
  std::vector<int> train;
  std::vector<int> test;
};

Pools speaker_pools(const DataConfig& cfg) {
  Pools p;
  for (int i = 0; i < cfg.n_speakers; ++i) p.train.push_back(i);
  if (cfg.split == "disjoint") {
    for (int i = 0; i < cfg.n_test_speakers; ++i)
      p.test.push_back(cfg.n_speakers + i);
  } else if (cfg.split == "shared") {
    p.test = p.train;
  } else {
    throw ValueError("build_dataset: unknown split '" + cfg.split + "'");
  }
  return p;
}

NoiseKind pick_noise(const DataConfig& cfg, Rng& rng) {
  const auto& kinds = cfg.noise_kinds;
  if (kinds.empty()) throw ValueError("build_dataset: empty noise_kinds");
  return noise_kind_from_string(
      kinds[static_cast<size_t>(rng.randint(static_cast<int64_t>(kinds.size())))]);
}

Waveform make_clip(const DataConfig& cfg, int speaker, Rng& rng) {
  SpeakerProfile prof = random_profile(speaker, cfg.seed);
  Waveform utt = synth_utterance(prof, cfg.utt_seconds, rng.next_u64());
  return energy_vad_crop(utt, cfg.clip_seconds);
}

// One overlapped noisy mixture; everything derives from sample_seed.
MixtureSample make_mixture(const DataConfig& cfg, const std::vector<int>& pool,
                           uint64_t sample_seed, std::vector<int>* speakers_out) {
  Rng rng(sample_seed);
  std::vector<int> chosen;
  while (static_cast<int>(chosen.size()) < cfg.n_sp) {
    int s = pool[static_cast<size_t>(rng.randint(static_cast<int64_t>(pool.size())))];
    if (std::find(chosen.begin(), chosen.end(), s) == chosen.end())
      chosen.push_back(s);
  }
  std::vector<Waveform> clips;
  for (int s : chosen) clips.push_back(make_clip(cfg, s, rng));
  double overlap = rng.uniform(0.5, 0.8);
  double snr = sample_snr(rng);
  NoiseKind kind = pick_noise(cfg, rng);
  Waveform noise =
      synth_noise(kind, cfg.clip_seconds * cfg.n_sp, rng.next_u64());
  MixtureSample ms = mix(clips, noise, overlap, snr, rng.next_u64());
  ms.speaker_ids = chosen;
  *speakers_out = chosen;
  return ms;
}

MixtureSample make_single(const DataConfig& cfg, int speaker,
                          uint64_t sample_seed) {
  Rng rng(sample_seed);
  Waveform clip = make_clip(cfg, speaker, rng);
  double snr = sample_snr(rng);
  NoiseKind kind = pick_noise(cfg, rng);
  Waveform noise = synth_noise(kind, cfg.clip_seconds, rng.next_u64());
  MixtureSample ms = corrupt_single(clip, noise, snr, rng.next_u64());
  ms.speaker_ids = {speaker};
  return ms;
}

void write_sample(const MixtureSample& ms, const fs::path& base,
                  const std::string& rel_dir, const std::string& id,
                  ManifestEntry* entry) {
  fs::path dir = base / rel_dir;
  entry->id = id;
  entry->mixture_path = rel_dir + "/" + id + "_mix.wav";
  write_wav((base / entry->mixture_path).string(), ms.mixture);
  for (size_t k = 0; k < ms.sources.size(); ++k) {
    std::string rel = rel_dir + "/" + id + "_src" + std::to_string(k) + ".wav";
    entry->source_paths.push_back(rel);
    write_wav((base / rel).string(), ms.sources[k]);
  }
  entry->noise_path = rel_dir + "/" + id + "_noise.wav";
  write_wav((base / entry->noise_path).string(), ms.noise);
  entry->speaker_ids = ms.speaker_ids;
  entry->overlap_ratio = ms.overlap_ratio;
  entry->snr_db = ms.snr_db;
  entry->start_offsets = ms.start_offsets;
}

}  // namespace

DatasetPaths dataset_paths(const std::string& out_dir) {
  fs::path base(out_dir);
  DatasetPaths p;
  p.mix_train = (base / "manifest_mix_train.json").string();
  p.mix_test = (base / "manifest_mix_test.json").string();
  p.teacher_train = (base / "manifest_teacher_train.json").string();
  p.teacher_test = (base / "manifest_teacher_test.json").string();
  p.enroll = (base / "manifest_enroll.json").string();
  return p;
}

DatasetPaths build_dataset(const DataConfig& cfg, const std::string& out_dir) {
  if (cfg.n_sp < 1 || cfg.n_sp > 3)
    throw ValueError("build_dataset: n_sp must be 1..3");
  Pools pools = speaker_pools(cfg);
  fs::path base(out_dir);
  std::error_code ec;
  fs::create_directories(base / "wav", ec);
  if (ec)
    throw IoError("build_dataset: cannot create " + (base / "wav").string() +
                  ": " + ec.message());

  DatasetPaths paths = dataset_paths(out_dir);
  nlohmann::json echo = cfg.to_json();

  struct MixJob {
    const char* rel;
    uint64_t stream;
    int count;
    const std::vector<int>* pool;
    std::string out;
  };
  for (const MixJob& job :
       {MixJob{"wav/mix_train", kStreamMixTrain, cfg.train_mixtures,
               &pools.train, paths.mix_train},
        MixJob{"wav/mix_test", kStreamMixTest, cfg.test_mixtures, &pools.test,
               paths.mix_test}}) {
    fs::create_directories(base / job.rel, ec);
    Manifest m;
    m.kind = "mixture";
    m.n_sp = cfg.n_sp;
    m.config_echo = echo;
    for (int i = 0; i < job.count; ++i) {
      std::vector<int> speakers;
      MixtureSample ms = make_mixture(
          cfg, *job.pool, seed_combine(cfg.seed, job.stream, static_cast<uint64_t>(i)),
          &speakers);
      ManifestEntry e;
      write_sample(ms, base, job.rel, zero_pad(i, 5), &e);
      m.entries.push_back(std::move(e));
    }
    save_manifest(m, job.out);
  }

  struct SingleJob {
    const char* rel;
    uint64_t stream;
    int count;
    const std::vector<int>* pool;
    std::string out;
  };
  for (const SingleJob& job :
       {SingleJob{"wav/teacher_train", kStreamTeacherTrain,
                  cfg.teacher_train_clips, &pools.train, paths.teacher_train},
        SingleJob{"wav/teacher_test", kStreamTeacherTest,
                  cfg.teacher_test_clips, &pools.test, paths.teacher_test}}) {
    fs::create_directories(base / job.rel, ec);
    Manifest m;
    m.kind = "single";
    m.n_sp = 1;
    m.config_echo = echo;
    for (int i = 0; i < job.count; ++i) {
      // Round-robin speakers keeps every class balanced.
      int speaker = (*job.pool)[static_cast<size_t>(i) % job.pool->size()];
      MixtureSample ms = make_single(
          cfg, speaker, seed_combine(cfg.seed, job.stream, static_cast<uint64_t>(i)));
      ManifestEntry e;
      write_sample(ms, base, job.rel, zero_pad(i, 5), &e);
      m.entries.push_back(std::move(e));
    }
    save_manifest(m, job.out);
  }

  {
    fs::create_directories(base / "wav/enroll", ec);
    Manifest m;
    m.kind = "enroll";
    m.n_sp = 1;
    m.config_echo = echo;
    int idx = 0;
    for (int speaker : pools.test) {
      for (int r = 0; r < cfg.enroll_per_speaker; ++r, ++idx) {
        MixtureSample ms = make_single(
            cfg, speaker,
            seed_combine(cfg.seed, kStreamEnroll, static_cast<uint64_t>(idx)));
        ManifestEntry e;
        write_sample(ms, base, "wav/enroll", zero_pad(idx, 5), &e);
        m.entries.push_back(std::move(e));
      }
    }
    save_manifest(m, paths.enroll);
  }
  return paths;
}

}  // namespace mixemb
