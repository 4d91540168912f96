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

#ifndef MIXEMB_METRICS_H_
#define MIXEMB_METRICS_H_

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mixemb/dsp.h"
#include "mixemb/wave.h"

namespace mixemb {

struct LabeledEmbeddings {
  Mat vectors;              // N x D
  std::vector<int> labels;  // ground-truth speaker ids
};

// K-means on l2-normalized vectors under cosine distance; k-means++
// seeding, 10 restarts, best within-cluster distance sum kept.
// Deterministic per seed. k > N raises ValueError.
std::vector<int> spherical_kmeans(const Mat& vectors, int k, uint64_t seed);

// Hungarian-matched cluster purity: contingency matrix, square-padded,
// matched mass / N.
double clustering_accuracy(const std::vector<int>& pred_labels,
                           const std::vector<int>& true_labels);

// 2 I(A;B) / (H(A)+H(B)) with natural-log entropies; 1.0 when both
// partitions are single-cluster.
double nmi(const std::vector<int>& a_labels, const std::vector<int>& b_labels);

// Pair-counting adjusted Rand index; 1.0 when Max == Expected.
double ari(const std::vector<int>& a_labels, const std::vector<int>& b_labels);

// Cosine-distance silhouette, mean over points; a=0 for singletons and
// s=0 where max(a,b)=0. Fewer than 2 clusters raises ValueError.
double silhouette(const Mat& vectors, const std::vector<int>& labels);

// Mean same-label pairwise cosine minus mean different-label cosine.
double separation_score(const Mat& vectors, const std::vector<int>& labels);

double si_sdri(const Waveform& est, const Waveform& mix, const Waveform& ref);

struct ClusteringReport {
  double acc = 0.0;
  double nmi = 0.0;
  double ari = 0.0;
  double silhouette = 0.0;
  double sep = 0.0;
  int k = 0;
  std::vector<int> assignments;
};

// Full protocol: spherical k-means at k = #distinct true labels, then the
// agreement metrics against ground truth; silhouette on the predicted
// clustering, separation on the true labels.
ClusteringReport evaluate_clustering(const LabeledEmbeddings& data,
                                     uint64_t seed);

// One (model, dataset, metric) row; value is absent for empty buckets.
struct ReportRow {
  std::string model;
  std::string dataset;
  std::string metric;
  std::optional<double> value;
  int64_t count = -1;  // sample count when >= 0
};

// Conventions header: NMI normalization, distance choice, k protocol.
nlohmann::json report_conventions();

std::string report_csv(const std::vector<ReportRow>& rows);
nlohmann::json report_json(const std::vector<ReportRow>& rows,
                           const nlohmann::json& config_echo);

}  // namespace mixemb

#endif  // MIXEMB_METRICS_H_
