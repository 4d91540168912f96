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

#include "mixemb/metrics.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "mixemb/objectives.h"

namespace mixemb {

namespace {

Mat normalize_rows(const Mat& m) {
  Mat out = m;
  for (int i = 0; i < m.rows; ++i) {
    double ss = 0.0;
    for (int j = 0; j < m.cols; ++j) ss += m.at(i, j) * m.at(i, j);
    double n = std::sqrt(ss);
    if (n < 1e-12) n = 1.0;
    for (int j = 0; j < m.cols; ++j) out.at(i, j) = m.at(i, j) / n;
  }
  return out;
}

double row_dot(const Mat& a, int i, const Mat& b, int j) {
  double acc = 0.0;
  for (int c = 0; c < a.cols; ++c) acc += a.at(i, c) * b.at(j, c);
  return acc;
}

// Dense relabeling in order of first appearance of the sorted label set,
// so the contingency matrix layout is deterministic.
std::vector<int> dense_labels(const std::vector<int>& labels, int* k_out) {
  std::map<int, int> remap;
  for (int l : labels) remap.emplace(l, 0);
  int next = 0;
  for (auto& [label, idx] : remap) idx = next++;
  std::vector<int> out;
  out.reserve(labels.size());
  for (int l : labels) out.push_back(remap[l]);
  *k_out = next;
  return out;
}

Mat contingency(const std::vector<int>& a, int ka, const std::vector<int>& b,
                int kb) {
  Mat n(ka, kb);
  for (size_t i = 0; i < a.size(); ++i)
    n.at(a[i], b[i]) += 1.0;
  return n;
}

void check_equal_length(const char* op, const std::vector<int>& a,
                        const std::vector<int>& b) {
  if (a.size() != b.size())
    throw ShapeError(std::string(op) + ": label lengths differ, " +
                     std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()));
  if (a.empty()) throw ShapeError(std::string(op) + ": empty labelings");
}

}  // namespace

std::vector<int> spherical_kmeans(const Mat& vectors, int k, uint64_t seed) {
  const int n = vectors.rows;
  if (k < 1 || k > n)
    throw ValueError("spherical_kmeans: k " + std::to_string(k) +
                     " outside [1, " + std::to_string(n) + "]");
  Mat x = normalize_rows(vectors);

  std::vector<int> best_assign;
  double best_score = std::numeric_limits<double>::infinity();
  for (int restart = 0; restart < 10; ++restart) {
    Rng rng(seed_combine(seed, 0x6b6du, static_cast<uint64_t>(restart)));
    // k-means++ seeding under cosine distance.
    std::vector<int> centers_idx;
    centers_idx.push_back(static_cast<int>(rng.randint(n)));
    std::vector<double> dist(static_cast<size_t>(n), 0.0);
    while (static_cast<int>(centers_idx.size()) < k) {
      double total = 0.0;
      for (int i = 0; i < n; ++i) {
        double d = std::numeric_limits<double>::infinity();
        for (int c : centers_idx)
          d = std::min(d, 1.0 - row_dot(x, i, x, c));
        d = std::max(d, 0.0);
        dist[static_cast<size_t>(i)] = d * d;
        total += d * d;
      }
      int pick = 0;
      if (total <= 0.0) {
        pick = static_cast<int>(rng.randint(n));
      } else {
        double target = rng.uniform() * total;
        double acc = 0.0;
        pick = n - 1;
        for (int i = 0; i < n; ++i) {
          acc += dist[static_cast<size_t>(i)];
          if (acc >= target) {
            pick = i;
            break;
          }
        }
      }
      centers_idx.push_back(pick);
    }
    Mat centers(k, x.cols);
    for (int c = 0; c < k; ++c)
      for (int j = 0; j < x.cols; ++j)
        centers.at(c, j) = x.at(centers_idx[static_cast<size_t>(c)], j);

    std::vector<int> assign(static_cast<size_t>(n), -1);
    for (int iter = 0; iter < 100; ++iter) {
      bool changed = false;
      for (int i = 0; i < n; ++i) {
        int arg = 0;
        double best_cos = -2.0;
        for (int c = 0; c < k; ++c) {
          double cv = row_dot(x, i, centers, c);
          if (cv > best_cos) {
            best_cos = cv;
            arg = c;
          }
        }
        if (assign[static_cast<size_t>(i)] != arg) {
          assign[static_cast<size_t>(i)] = arg;
          changed = true;
        }
      }
      // Recompute centroids; an emptied cluster is reseeded with the point
      // farthest from its centroid.
      Mat sums(k, x.cols);
      std::vector<int> counts(static_cast<size_t>(k), 0);
      for (int i = 0; i < n; ++i) {
        ++counts[static_cast<size_t>(assign[static_cast<size_t>(i)])];
        for (int j = 0; j < x.cols; ++j)
          sums.at(assign[static_cast<size_t>(i)], j) += x.at(i, j);
      }
      for (int c = 0; c < k; ++c) {
        if (counts[static_cast<size_t>(c)] == 0) {
          int far = 0;
          double worst = 2.0;
          for (int i = 0; i < n; ++i) {
            double cv = row_dot(x, i, centers, assign[static_cast<size_t>(i)]);
            if (cv < worst) {
              worst = cv;
              far = i;
            }
          }
          assign[static_cast<size_t>(far)] = c;
          for (int j = 0; j < x.cols; ++j) sums.at(c, j) = x.at(far, j);
          counts[static_cast<size_t>(c)] = 1;
          changed = true;
        }
        double ss = 0.0;
        for (int j = 0; j < x.cols; ++j) ss += sums.at(c, j) * sums.at(c, j);
        double nm = std::sqrt(ss);
        if (nm < 1e-12) nm = 1.0;
        for (int j = 0; j < x.cols; ++j) centers.at(c, j) = sums.at(c, j) / nm;
      }
      if (!changed) break;
    }
    double score = 0.0;
    for (int i = 0; i < n; ++i)
      score += 1.0 - row_dot(x, i, centers, assign[static_cast<size_t>(i)]);
    if (score < best_score) {
      best_score = score;
      best_assign = assign;
    }
  }
  return best_assign;
}

double clustering_accuracy(const std::vector<int>& pred_labels,
                           const std::vector<int>& true_labels) {
  check_equal_length("clustering_accuracy", pred_labels, true_labels);
  int kp = 0, kt = 0;
  std::vector<int> p = dense_labels(pred_labels, &kp);
  std::vector<int> t = dense_labels(true_labels, &kt);
  int s = std::max(kp, kt);
  Mat counts = contingency(p, kp, t, kt);
  // Square pad with zeros, negate so the assignment maximizes matched mass.
  Mat cost(s, s);
  for (int i = 0; i < s; ++i)
    for (int j = 0; j < s; ++j)
      cost.at(i, j) = (i < kp && j < kt) ? -counts.at(i, j) : 0.0;
  Assignment a = hungarian(cost);
  double matched = -a.total_cost;
  return matched / static_cast<double>(pred_labels.size());
}

double nmi(const std::vector<int>& a_labels, const std::vector<int>& b_labels) {
  check_equal_length("nmi", a_labels, b_labels);
  int ka = 0, kb = 0;
  std::vector<int> a = dense_labels(a_labels, &ka);
  std::vector<int> b = dense_labels(b_labels, &kb);
  if (ka == 1 && kb == 1) return 1.0;
  const double n = static_cast<double>(a.size());
  Mat joint = contingency(a, ka, b, kb);
  std::vector<double> pa(static_cast<size_t>(ka), 0.0), pb(static_cast<size_t>(kb), 0.0);
  for (int i = 0; i < ka; ++i)
    for (int j = 0; j < kb; ++j) {
      pa[static_cast<size_t>(i)] += joint.at(i, j);
      pb[static_cast<size_t>(j)] += joint.at(i, j);
    }
  double ha = 0.0, hb = 0.0, mi = 0.0;
  for (int i = 0; i < ka; ++i)
    if (pa[static_cast<size_t>(i)] > 0.0) {
      double q = pa[static_cast<size_t>(i)] / n;
      ha -= q * std::log(q);
    }
  for (int j = 0; j < kb; ++j)
    if (pb[static_cast<size_t>(j)] > 0.0) {
      double q = pb[static_cast<size_t>(j)] / n;
      hb -= q * std::log(q);
    }
  for (int i = 0; i < ka; ++i)
    for (int j = 0; j < kb; ++j) {
      double c = joint.at(i, j);
      if (c <= 0.0) continue;
      double pij = c / n;
      mi += pij * std::log(pij * n * n /
                           (pa[static_cast<size_t>(i)] * pb[static_cast<size_t>(j)]));
    }
  double denom = ha + hb;
  if (denom <= 0.0) return 1.0;
  double v = 2.0 * mi / denom;
  return std::max(0.0, std::min(1.0, v));
}

double ari(const std::vector<int>& a_labels, const std::vector<int>& b_labels) {
  check_equal_length("ari", a_labels, b_labels);
  int ka = 0, kb = 0;
  std::vector<int> a = dense_labels(a_labels, &ka);
  std::vector<int> b = dense_labels(b_labels, &kb);
  Mat joint = contingency(a, ka, b, kb);
  auto choose2 = [](double x) { return x * (x - 1.0) / 2.0; };
  double index = 0.0;
  for (double v : joint.v) index += choose2(v);
  std::vector<double> pa(static_cast<size_t>(ka), 0.0), pb(static_cast<size_t>(kb), 0.0);
  for (int i = 0; i < ka; ++i)
    for (int j = 0; j < kb; ++j) {
      pa[static_cast<size_t>(i)] += joint.at(i, j);
      pb[static_cast<size_t>(j)] += joint.at(i, j);
    }
  double sum_a = 0.0, sum_b = 0.0;
  for (double v : pa) sum_a += choose2(v);
  for (double v : pb) sum_b += choose2(v);
  double total = choose2(static_cast<double>(a.size()));
  double expected = sum_a * sum_b / total;
  double maximum = 0.5 * (sum_a + sum_b);
  if (maximum == expected) return 1.0;
  return (index - expected) / (maximum - expected);
}

double silhouette(const Mat& vectors, const std::vector<int>& labels) {
  if (vectors.rows != static_cast<int>(labels.size()))
    throw ShapeError("silhouette: " + std::to_string(vectors.rows) +
                     " vectors vs " + std::to_string(labels.size()) + " labels");
  int k = 0;
  std::vector<int> lab = dense_labels(labels, &k);
  if (k < 2) throw ValueError("silhouette: needs at least 2 clusters");
  const int n = vectors.rows;
  Mat x = normalize_rows(vectors);
  std::vector<int> counts(static_cast<size_t>(k), 0);
  for (int l : lab) ++counts[static_cast<size_t>(l)];

  double total = 0.0;
  std::vector<double> sums(static_cast<size_t>(k), 0.0);
  for (int i = 0; i < n; ++i) {
    std::fill(sums.begin(), sums.end(), 0.0);
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      sums[static_cast<size_t>(lab[static_cast<size_t>(j)])] +=
          1.0 - row_dot(x, i, x, j);
    }
    int ci = lab[static_cast<size_t>(i)];
    double a = counts[static_cast<size_t>(ci)] > 1
                   ? sums[static_cast<size_t>(ci)] /
                         (counts[static_cast<size_t>(ci)] - 1)
                   : 0.0;
    double b = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
      if (c == ci || counts[static_cast<size_t>(c)] == 0) continue;
      b = std::min(b, sums[static_cast<size_t>(c)] / counts[static_cast<size_t>(c)]);
    }
    double m = std::max(a, b);
    total += m > 0.0 ? (b - a) / m : 0.0;
  }
  return total / n;
}

double separation_score(const Mat& vectors, const std::vector<int>& labels) {
  if (vectors.rows != static_cast<int>(labels.size()))
    throw ShapeError("separation_score: vector/label count mismatch");
  Mat x = normalize_rows(vectors);
  double same = 0.0, diff = 0.0;
  int64_t n_same = 0, n_diff = 0;
  for (int i = 0; i < x.rows; ++i)
    for (int j = i + 1; j < x.rows; ++j) {
      double c = row_dot(x, i, x, j);
      if (labels[static_cast<size_t>(i)] == labels[static_cast<size_t>(j)]) {
        same += c;
        ++n_same;
      } else {
        diff += c;
        ++n_diff;
      }
    }
  if (n_same == 0 || n_diff == 0)
    throw ValueError("separation_score: needs both same-label and "
                     "different-label pairs");
  return same / static_cast<double>(n_same) - diff / static_cast<double>(n_diff);
}

double si_sdri(const Waveform& est, const Waveform& mix, const Waveform& ref) {
  return si_sdr(est, ref) - si_sdr(mix, ref);
}

ClusteringReport evaluate_clustering(const LabeledEmbeddings& data,
                                     uint64_t seed) {
  std::set<int> distinct(data.labels.begin(), data.labels.end());
  ClusteringReport r;
  r.k = static_cast<int>(distinct.size());
  r.assignments = spherical_kmeans(data.vectors, r.k, seed);
  r.acc = clustering_accuracy(r.assignments, data.labels);
  r.nmi = nmi(r.assignments, data.labels);
  r.ari = ari(r.assignments, data.labels);
  r.silhouette = silhouette(data.vectors, r.assignments);
  r.sep = separation_score(data.vectors, data.labels);
  return r;
}

nlohmann::json report_conventions() {
  return nlohmann::json{
      {"nmi_normalization", "arithmetic mean of entropies"},
      {"distance", "cosine"},
      {"silhouette_on", "predicted clustering"},
      {"separation_on", "ground-truth labels"},
      {"clustering_k", "number of distinct ground-truth speakers"},
      {"kmeans", "spherical, k-means++ seeding, 10 restarts"},
      {"si_sdr_cap_db", kSiSdrCapDb}};
}

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

std::string report_csv(const std::vector<ReportRow>& rows) {
  std::ostringstream os;
  os << "model,dataset,metric,value,count\n";
  for (const auto& r : rows) {
    os << r.model << "," << r.dataset << "," << r.metric << ",";
    if (r.value.has_value()) os << fmt_double(*r.value);
    os << ",";
    if (r.count >= 0) os << r.count;
    os << "\n";
  }
  return os.str();
}

nlohmann::json report_json(const std::vector<ReportRow>& rows,
                           const nlohmann::json& config_echo) {
  nlohmann::json out;
  out["conventions"] = report_conventions();
  out["config"] = config_echo;
  nlohmann::json jr = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json row{{"model", r.model},
                       {"dataset", r.dataset},
                       {"metric", r.metric}};
    if (r.value.has_value())
      row["value"] = *r.value;
    else
      row["value"] = nullptr;
    if (r.count >= 0) row["count"] = r.count;
    jr.push_back(std::move(row));
  }
  out["rows"] = std::move(jr);
  return out;
}

}  // namespace mixemb
