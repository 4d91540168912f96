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

#include "mixemb/objectives.h"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mixemb {

ArcFaceHead make_arcface_head(int n_classes, int embed_dim, double scale,
                              double margin, uint64_t seed) {
  if (scale <= 0.0) throw ValueError("arcface: scale must be positive");
  if (margin < 0.0 || margin >= 1.5707963267948966)
    throw ValueError("arcface: margin must lie in [0, pi/2)");
  Rng rng(seed_combine(seed, 0xa3cfu));
  std::vector<double> w(static_cast<size_t>(n_classes) * embed_dim);
  for (auto& v : w) v = rng.gaussian();
  ArcFaceHead head;
  head.class_weights = Tensor({n_classes, embed_dim}, std::move(w), true);
  renormalize_rows(head.class_weights);
  head.scale = scale;
  head.margin = margin;
  return head;
}

void renormalize_rows(Tensor& weights) {
  auto& v = weights.mutable_data();
  int K = weights.dim(0), D = weights.dim(1);
  for (int k = 0; k < K; ++k) {
    double ss = 0.0;
    for (int d = 0; d < D; ++d) {
      double x = v[static_cast<size_t>(k) * D + d];
      ss += x * x;
    }
    double n = std::sqrt(ss);
    if (n < 1e-12) throw ValueError("arcface: zero weight row");
    for (int d = 0; d < D; ++d) v[static_cast<size_t>(k) * D + d] /= n;
  }
}

Tensor arcface_loss(const std::vector<Tensor>& embeddings,
                    const std::vector<int>& labels, const ArcFaceHead& head) {
  if (embeddings.empty())
    throw ShapeError("arcface_loss: empty batch");
  if (embeddings.size() != labels.size())
    throw ShapeError("arcface_loss: batch size " +
                     std::to_string(embeddings.size()) + " vs " +
                     std::to_string(labels.size()) + " labels");
  const int K = head.class_weights.dim(0);
  const double cos_m = std::cos(head.margin);
  const double sin_m = std::sin(head.margin);
  Tensor w_norm = l2_normalize(head.class_weights, 1);
  Tensor w_t = transpose(w_norm);  // D x K

  Tensor total = Tensor::scalar(0.0);
  for (size_t i = 0; i < embeddings.size(); ++i) {
    int y = labels[i];
    if (y < 0 || y >= K)
      throw ValueError("arcface_loss: label " + std::to_string(y) +
                       " outside [0, " + std::to_string(K) + ")");
    Tensor cos_all = matmul(embeddings[i], w_t);  // K
    double cy = cos_all[y];
    if (std::fabs(cy) > 1.0 + 1e-9)
      throw ValueError("arcface_loss: |cos theta_y| = " + std::to_string(cy) +
                       " exceeds 1 beyond tolerance");
    Tensor cos_y = slice(cos_all, 0, y, 1);
    // cos(theta + m) via the angle-sum identity; exact when cos theta = 1.
    Tensor cos_t = sub(scale(cos_y, cos_m), scale(sin_from_cos(cos_y), sin_m));
    Tensor logit_y = scale(cos_t, head.scale);
    Tensor logits = scale(cos_all, head.scale);
    // loss = log1p(sum_{j != y} exp(l_j - l_y)); formulated against the
    // target logit directly so a dominant target stays fully precise.
    std::vector<double> mask(static_cast<size_t>(K), 1.0);
    mask[static_cast<size_t>(y)] = 0.0;
    Tensor mask_c(std::vector<int>{K}, mask);
    Tensor diffs = sub(logits, logit_y);
    Tensor expsum = sum(mul(mask_c, exp_op(diffs)));
    total = add(total, log1p_op(expsum));
  }
  return scale(total, 1.0 / static_cast<double>(embeddings.size()));
}

namespace {

// Jonker-Volgenant style shortest augmenting path solver; O(n^3).
std::vector<int> jv_solve(const Mat& cost) {
  const int n = cost.rows;
  std::vector<double> u(static_cast<size_t>(n) + 1, 0.0);
  std::vector<double> v(static_cast<size_t>(n) + 1, 0.0);
  std::vector<int> match(static_cast<size_t>(n) + 1, 0);  // col -> row (1-based)
  std::vector<int> way(static_cast<size_t>(n) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<size_t>(n) + 1,
                             std::numeric_limits<double>::infinity());
    std::vector<char> used(static_cast<size_t>(n) + 1, 0);
    do {
      used[static_cast<size_t>(j0)] = 1;
      int i0 = match[static_cast<size_t>(j0)];
      int j1 = 0;
      double delta = std::numeric_limits<double>::infinity();
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<size_t>(j)]) continue;
        double cur = cost.at(i0 - 1, j - 1) - u[static_cast<size_t>(i0)] -
                     v[static_cast<size_t>(j)];
        if (cur < minv[static_cast<size_t>(j)]) {
          minv[static_cast<size_t>(j)] = cur;
          way[static_cast<size_t>(j)] = j0;
        }
        if (minv[static_cast<size_t>(j)] < delta) {
          delta = minv[static_cast<size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<size_t>(j)]) {
          u[static_cast<size_t>(match[static_cast<size_t>(j)])] += delta;
          v[static_cast<size_t>(j)] -= delta;
        } else {
          minv[static_cast<size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (match[static_cast<size_t>(j0)] != 0);
    do {
      int j1 = way[static_cast<size_t>(j0)];
      match[static_cast<size_t>(j0)] = match[static_cast<size_t>(j1)];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> perm(static_cast<size_t>(n), -1);
  for (int j = 1; j <= n; ++j)
    if (match[static_cast<size_t>(j)] > 0)
      perm[static_cast<size_t>(match[static_cast<size_t>(j)]) - 1] = j - 1;
  return perm;
}

// Row-order sum; mirrors how an exhaustive search would accumulate, so
// equal permutations give bit-equal totals.
double direct_total(const Mat& cost, const std::vector<int>& perm) {
  double t = 0.0;
  for (size_t i = 0; i < perm.size(); ++i)
    t += cost.at(static_cast<int>(i), perm[i]);
  return t;
}

double min_total_over(const Mat& cost, const std::vector<int>& rows,
                      const std::vector<int>& cols) {
  const int k = static_cast<int>(rows.size());
  if (k == 0) return 0.0;
  Mat sub(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      sub.at(i, j) = cost.at(rows[static_cast<size_t>(i)],
                             cols[static_cast<size_t>(j)]);
  std::vector<int> perm = jv_solve(sub);
  return direct_total(sub, perm);
}

}  // namespace

Assignment hungarian(const Mat& cost) {
  const int n = cost.rows;
  if (n < 1 || cost.cols != n)
    throw ShapeError("hungarian: cost must be square and non-empty, got " +
                     std::to_string(cost.rows) + "x" + std::to_string(cost.cols));
  for (double v : cost.v)
    if (!std::isfinite(v))
      throw ValueError("hungarian: non-finite cost entry");

  std::vector<int> jv_perm = jv_solve(cost);
  double best = direct_total(cost, jv_perm);
  double tol = 1e-9 * std::max(1.0, std::fabs(best));

  // Lexicographic refinement: fix columns row by row, keeping the total
  // within tol of the optimum. Equal-cost matchings therefore resolve to
  // the lexicographically smallest permutation.
  std::vector<int> chosen(static_cast<size_t>(n), -1);
  std::vector<int> avail;
  for (int j = 0; j < n; ++j) avail.push_back(j);
  double prefix = 0.0;
  for (int i = 0; i < n; ++i) {
    std::vector<int> rest_rows;
    for (int r = i + 1; r < n; ++r) rest_rows.push_back(r);
    bool fixed = false;
    for (size_t a = 0; a < avail.size() && !fixed; ++a) {
      int j = avail[a];
      std::vector<int> rest_cols;
      for (size_t b = 0; b < avail.size(); ++b)
        if (b != a) rest_cols.push_back(avail[b]);
      double t = prefix + cost.at(i, j) + min_total_over(cost, rest_rows, rest_cols);
      if (t <= best + tol) {
        chosen[static_cast<size_t>(i)] = j;
        prefix += cost.at(i, j);
        avail.erase(avail.begin() + static_cast<long>(a));
        fixed = true;
      }
    }
    if (!fixed) {
      // Numerical fallback; keep the unrefined optimum.
      chosen = jv_perm;
      break;
    }
  }
  Assignment out;
  out.permutation = chosen;
  out.total_cost = direct_total(cost, chosen);
  return out;
}

PitResult pit_cosine_loss(const std::vector<Tensor>& pred,
                          const std::vector<Tensor>& targets) {
  if (pred.size() != targets.size())
    throw ShapeError("pit_cosine_loss: " + std::to_string(pred.size()) +
                     " predictions vs " + std::to_string(targets.size()) +
                     " targets");
  if (pred.empty()) throw ShapeError("pit_cosine_loss: empty sets");
  const int n = static_cast<int>(pred.size());
  Mat cost(n, n);
  for (int i = 0; i < n; ++i) {
    const auto& p = pred[static_cast<size_t>(i)].data();
    for (int j = 0; j < n; ++j) {
      const auto& t = targets[static_cast<size_t>(j)].data();
      if (p.size() != t.size())
        throw ShapeError("pit_cosine_loss: embedding dims differ");
      double dot = 0.0, sp = 0.0, st = 0.0;
      for (size_t k = 0; k < p.size(); ++k) {
        dot += p[k] * t[k];
        sp += p[k] * p[k];
        st += t[k] * t[k];
      }
      cost.at(i, j) = 1.0 - dot / std::sqrt(sp * st);
    }
  }
  Assignment assign = hungarian(cost);
  Tensor acc = Tensor::scalar(0.0);
  for (int i = 0; i < n; ++i) {
    Tensor cosv = cosine_similarity(
        pred[static_cast<size_t>(i)],
        targets[static_cast<size_t>(assign.permutation[static_cast<size_t>(i)])]);
    acc = add(acc, sub(Tensor::scalar(1.0), cosv));
  }
  PitResult r;
  r.loss = scale(acc, 1.0 / n);
  r.assignment = assign;
  return r;
}

double si_sdr(const Waveform& est, const Waveform& ref) {
  if (est.size() != ref.size())
    throw ShapeError("si_sdr: length " + std::to_string(est.size()) + " vs " +
                     std::to_string(ref.size()));
  double rr = 0.0, er = 0.0;
  for (int64_t i = 0; i < ref.size(); ++i) {
    rr += ref.samples[static_cast<size_t>(i)] * ref.samples[static_cast<size_t>(i)];
    er += est.samples[static_cast<size_t>(i)] * ref.samples[static_cast<size_t>(i)];
  }
  if (rr == 0.0) throw ValueError("si_sdr: reference is all zero");
  double alpha = er / rr;
  double tp = 0.0, ep = 0.0;
  for (int64_t i = 0; i < ref.size(); ++i) {
    double t = alpha * ref.samples[static_cast<size_t>(i)];
    double e = est.samples[static_cast<size_t>(i)] - t;
    tp += t * t;
    ep += e * e;
  }
  double val = 10.0 * std::log10(tp / std::max(ep, 1e-12 * tp));
  if (std::isnan(val)) val = -kSiSdrCapDb;  // tp == 0 and ep == 0
  return std::min(std::max(val, -kSiSdrCapDb), kSiSdrCapDb);
}

Tensor si_sdr_loss(const Tensor& est, const std::vector<double>& ref) {
  if (est.ndim() != 1 || est.numel() != static_cast<int64_t>(ref.size()))
    throw ShapeError("si_sdr_loss: estimate shape " + shape_str(est.shape()) +
                     " vs reference length " + std::to_string(ref.size()));
  double rr = 0.0;
  for (double v : ref) rr += v * v;
  if (rr == 0.0) throw ValueError("si_sdr_loss: reference is all zero");
  Tensor refc(std::vector<int>{static_cast<int>(ref.size())}, ref);
  Tensor alpha = scale(sum(mul(est, refc)), 1.0 / rr);
  Tensor target = mul(alpha, refc);
  Tensor err = sub(est, target);
  Tensor tp = sum(mul(target, target));
  Tensor ep = sum(mul(err, err));
  Tensor num = add(ep, scale(tp, 1e-12));
  return scale(sub(log_op(num), log_op(tp)), 10.0 / std::log(10.0));
}

}  // namespace mixemb
