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

#ifndef MIXEMB_DATASET_H_
#define MIXEMB_DATASET_H_

#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "mixemb/synth.h"

namespace mixemb {

struct DataConfig {
  int n_speakers = 16;       // training identity pool
  int n_test_speakers = 8;   // held-out pool when split == "disjoint"
  std::string split = "disjoint";
  int n_sp = 2;
  int train_mixtures = 2000;
  int test_mixtures = 400;
  int teacher_train_clips = 2000;
  int teacher_test_clips = 240;
  int enroll_per_speaker = 1;
  double clip_seconds = 2.0;
  double utt_seconds = 3.0;
  std::vector<std::string> noise_kinds = {"white", "pink", "babble"};
  uint64_t seed = 17;

  nlohmann::json to_json() const;
  static DataConfig from_json(const nlohmann::json& j);
};

struct ManifestEntry {
  std::string id;
  std::string mixture_path;  // relative to the manifest's directory
  std::vector<std::string> source_paths;
  std::string noise_path;
  std::vector<int> speaker_ids;
  double overlap_ratio = 1.0;
  double snr_db = 0.0;
  std::vector<int64_t> start_offsets;
};

struct Manifest {
  std::string kind;  // "mixture", "single" or "enroll"
  int n_sp = 1;
  nlohmann::json config_echo;
  std::vector<ManifestEntry> entries;
  std::string base_dir;  // directory of the manifest file once loaded
};

void save_manifest(const Manifest& m, const std::string& path);
Manifest load_manifest(const std::string& path);

// Waveforms of one entry read back from disk. Sources are source-aligned
// at mixture length for "mixture" manifests; clip length otherwise.
struct LoadedSample {
  Waveform mixture;
  std::vector<Waveform> sources;
  Waveform noise;
};
LoadedSample load_sample(const Manifest& m, const ManifestEntry& e);

// The speaker ids that occur anywhere in a manifest.
std::vector<int> manifest_speakers(const Manifest& m);

struct DatasetPaths {
  std::string mix_train;
  std::string mix_test;
  std::string teacher_train;
  std::string teacher_test;
  std::string enroll;
};

// Writes all five manifests plus the referenced waveforms under out_dir.
// Deterministic per config seed: every sample derives its own seed from
// (seed, split, index) only.
DatasetPaths build_dataset(const DataConfig& cfg, const std::string& out_dir);

DatasetPaths dataset_paths(const std::string& out_dir);

}  // namespace mixemb

#endif  // MIXEMB_DATASET_H_
