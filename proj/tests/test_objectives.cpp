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

#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "mixemb/adam.h"
#include "mixemb/objectives.h"

using namespace mixemb;

namespace {

// Exhaustive assignment search in lexicographic order; strict improvement
// keeps the lexicographically smallest optimum.
Assignment brute_force_assignment(const Mat& cost) {
  const int n = cost.rows;
  std::vector<int> perm(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) perm[static_cast<size_t>(i)] = i;
  Assignment best;
  best.total_cost = std::numeric_limits<double>::infinity();
  do {
    double t = 0.0;
    for (int i = 0; i < n; ++i) t += cost.at(i, perm[static_cast<size_t>(i)]);
    if (t < best.total_cost) {
      best.total_cost = t;
      best.permutation = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

std::vector<double> random_unit(Rng& rng, int d) {
  std::vector<double> v(static_cast<size_t>(d));
  double ss = 0.0;
  for (auto& x : v) {
    x = rng.gaussian();
    ss += x * x;
  }
  double n = std::sqrt(ss);
  for (auto& x : v) x /= n;
  return v;
}

Tensor unit_tensor(Rng& rng, int d) {
  return Tensor({d}, random_unit(rng, d));
}

// Independent cross-entropy on s-scaled cosine logits (margin-free case).
double plain_cosine_ce(const std::vector<std::vector<double>>& embs,
                       const std::vector<int>& labels,
                       const std::vector<std::vector<double>>& rows, double s) {
  double total = 0.0;
  for (size_t i = 0; i < embs.size(); ++i) {
    std::vector<double> logits;
    for (const auto& w : rows) {
      double dot = 0.0;
      for (size_t d = 0; d < w.size(); ++d) dot += embs[i][d] * w[d];
      logits.push_back(s * dot);
    }
    double mx = *std::max_element(logits.begin(), logits.end());
    double denom = 0.0;
    for (double l : logits) denom += std::exp(l - mx);
    total += mx + std::log(denom) - logits[static_cast<size_t>(labels[i])];
  }
  return total / static_cast<double>(embs.size());
}

}  // namespace

TEST_CASE("hungarian solves the diagonal and the worked 3x3 case") {
  Mat eye_cost(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) eye_cost.at(i, j) = i == j ? 0.0 : 1.0;
  Assignment a = hungarian(eye_cost);
  CHECK(a.total_cost == 0.0);
  CHECK(a.permutation == std::vector<int>{0, 1, 2});

  Mat m(3, 3);
  m.v = {4, 1, 3, 2, 0, 5, 3, 2, 2};
  Assignment b = hungarian(m);
  CHECK(b.total_cost == 5.0);
  CHECK(b.permutation == std::vector<int>{1, 0, 2});

  Mat one(1, 1);
  one.v = {7.25};
  Assignment c = hungarian(one);
  CHECK(c.total_cost == 7.25);
  CHECK(c.permutation == std::vector<int>{0});
}

TEST_CASE("hungarian rejects malformed input") {
  Mat rect(2, 3);
  CHECK_THROWS_AS(hungarian(rect), ShapeError);
  Mat bad(2, 2);
  bad.v = {1.0, 2.0, std::numeric_limits<double>::quiet_NaN(), 0.0};
  CHECK_THROWS_AS(hungarian(bad), ValueError);
}

TEST_CASE("hungarian ties break to the lexicographically smallest permutation") {
  Mat zeros(3, 3);
  Assignment a = hungarian(zeros);
  CHECK(a.permutation == std::vector<int>{0, 1, 2});

  // Two optimal matchings; (0,1) precedes (1,0).
  Mat m(2, 2);
  m.v = {1.0, 1.0, 1.0, 1.0};
  CHECK(hungarian(m).permutation == std::vector<int>{0, 1});

  // Integer costs with a genuine tie deeper in the matrix.
  Mat t(3, 3);
  t.v = {1, 1, 5, 1, 1, 5, 5, 5, 0};
  Assignment r = hungarian(t);
  CHECK(r.total_cost == 2.0);
  CHECK(r.permutation == std::vector<int>{0, 1, 2});
}

TEST_CASE("hungarian equals brute force exactly on random matrices") {
  for (int n = 2; n <= 7; ++n) {
    for (int trial = 0; trial < 100; ++trial) {
      Rng rng(seed_combine(900, static_cast<uint64_t>(n), static_cast<uint64_t>(trial)));
      Mat cost(n, n);
      for (auto& v : cost.v) v = rng.uniform(-5.0, 5.0);
      Assignment got = hungarian(cost);
      Assignment want = brute_force_assignment(cost);
      CHECK(got.total_cost == want.total_cost);
      CHECK(got.permutation == want.permutation);
    }
  }
}

TEST_CASE("arcface reduces to plain cosine cross-entropy at zero margin") {
  Rng rng(77);
  const int K = 5, D = 8, B = 6;
  ArcFaceHead head = make_arcface_head(K, D, 30.0, 0.0, 3);
  std::vector<std::vector<double>> rows;
  for (int k = 0; k < K; ++k) {
    std::vector<double> r(static_cast<size_t>(D));
    for (int d = 0; d < D; ++d)
      r[static_cast<size_t>(d)] = head.class_weights[k * D + d];
    rows.push_back(std::move(r));
  }
  std::vector<Tensor> embs;
  std::vector<std::vector<double>> raw;
  std::vector<int> labels;
  for (int i = 0; i < B; ++i) {
    raw.push_back(random_unit(rng, D));
    embs.emplace_back(std::vector<int>{D}, raw.back());
    labels.push_back(static_cast<int>(rng.randint(K)));
  }
  double got = arcface_loss(embs, labels, head).item();
  double want = plain_cosine_ce(raw, labels, rows, 30.0);
  CHECK(std::fabs(got - want) < 1e-10);
}

TEST_CASE("arcface aligned-target closed form is exact") {
  const int D = 4;
  ArcFaceHead head;
  head.class_weights =
      Tensor({2, D}, {1, 0, 0, 0, 0, 1, 0, 0}, /*requires_grad=*/false);
  head.scale = 30.0;
  head.margin = 0.5;
  std::vector<Tensor> embs = {Tensor({D}, {1, 0, 0, 0})};
  double got = arcface_loss(embs, {0}, head).item();
  double want = std::log1p(std::exp(-30.0 * std::cos(0.5)));
  CHECK(std::fabs(got - want) / want < 1e-13);
}

TEST_CASE("the margin only increases the loss on (0, pi - m)") {
  Rng rng(31);
  const int K = 4, D = 6;
  for (int trial = 0; trial < 20; ++trial) {
    ArcFaceHead h0 = make_arcface_head(K, D, 30.0, 0.0, 50 + static_cast<uint64_t>(trial));
    ArcFaceHead h5 = h0;
    h5.margin = 0.5;
    std::vector<Tensor> embs = {unit_tensor(rng, D)};
    std::vector<int> labels = {static_cast<int>(rng.randint(K))};
    double cy = 0.0;
    for (int d = 0; d < D; ++d)
      cy += embs[0][d] * h0.class_weights[labels[0] * D + d];
    double theta = std::acos(std::max(-1.0, std::min(1.0, cy)));
    if (theta <= 1e-6 || theta >= 3.14159265 - 0.5) continue;
    CHECK(arcface_loss(embs, labels, h5).item() >
          arcface_loss(embs, labels, h0).item());
  }
}

TEST_CASE("arcface rejects bad labels and non-cosine similarities") {
  ArcFaceHead head = make_arcface_head(3, 4, 30.0, 0.5, 9);
  std::vector<Tensor> embs = {Tensor({4}, {1, 0, 0, 0})};
  CHECK_THROWS_AS(arcface_loss(embs, {3}, head), ValueError);
  CHECK_THROWS_AS(arcface_loss(embs, {-1}, head), ValueError);
  ArcFaceHead aligned;
  aligned.class_weights = Tensor({2, 4}, {1, 0, 0, 0, 0, 1, 0, 0});
  aligned.scale = 30.0;
  aligned.margin = 0.5;
  std::vector<Tensor> big = {Tensor({4}, {2, 0, 0, 0})};
  CHECK_THROWS_AS(arcface_loss(big, {0}, aligned), ValueError);
}

TEST_CASE("arcface gradients match finite differences on a toy head") {
  // Checked against both the embeddings and the class weights.
  for (int seedi = 0; seedi < 10; ++seedi) {
    Rng rng(400 + static_cast<uint64_t>(seedi));
    const int K = 4, D = 5, B = 3;
    ArcFaceHead head = make_arcface_head(K, D, 30.0, 0.5,
                                         700 + static_cast<uint64_t>(seedi));
    std::vector<std::vector<double>> raw;
    std::vector<int> labels;
    for (int i = 0; i < B; ++i) {
      std::vector<double> r(static_cast<size_t>(D));
      for (auto& x : r) x = rng.uniform(-1.0, 1.0);
      raw.push_back(r);
      labels.push_back(static_cast<int>(rng.randint(K)));
    }
    std::vector<double> flat;
    for (const auto& r : raw) flat.insert(flat.end(), r.begin(), r.end());
    Tensor x({B, D}, flat);
    auto f_emb = [&](const Tensor& t) {
      std::vector<Tensor> embs;
      for (int i = 0; i < B; ++i)
        embs.push_back(l2_normalize(slice(t, 0, i, 1)));
      std::vector<Tensor> rows;
      for (auto& e : embs) rows.push_back(reshape(e, {D}));
      return arcface_loss(rows, labels, head);
    };
    CHECK(grad_check(f_emb, x, 1e-5) < 1e-4);

    std::vector<Tensor> embs;
    for (const auto& r : raw) {
      double ss = 0.0;
      for (double v : r) ss += v * v;
      std::vector<double> u = r;
      for (auto& v : u) v /= std::sqrt(ss);
      embs.emplace_back(std::vector<int>{D}, u);
    }
    auto f_w = [&](const Tensor& t) {
      ArcFaceHead h;
      h.class_weights = t;
      h.scale = head.scale;
      h.margin = head.margin;
      return arcface_loss(embs, labels, h);
    };
    CHECK(grad_check(f_w, head.class_weights.detach(), 1e-5) < 1e-4);
  }
}

TEST_CASE("arcface loss decreases under gradient descent on a toy batch") {
  Rng rng(88);
  const int K = 4, D = 8;
  ArcFaceHead head = make_arcface_head(K, D, 30.0, 0.5, 21);
  // Separable batch: one raw vector per class.
  std::vector<Tensor> raws;
  std::vector<int> labels;
  for (int k = 0; k < K; ++k) {
    std::vector<double> v(static_cast<size_t>(D));
    for (auto& x : v) x = rng.uniform(-1.0, 1.0);
    raws.emplace_back(std::vector<int>{D}, v, /*requires_grad=*/true);
    labels.push_back(k);
  }
  std::vector<std::pair<std::string, Tensor>> params = {
      {"weights", head.class_weights}};
  for (int k = 0; k < K; ++k)
    params.emplace_back("raw" + std::to_string(k), raws[static_cast<size_t>(k)]);
  AdamOptimizer opt(params, 1e-2);
  double first = 0.0, last = 0.0;
  for (int step = 0; step < 50; ++step) {
    std::vector<Tensor> embs;
    for (auto& r : raws) embs.push_back(l2_normalize(r));
    Tensor loss = arcface_loss(embs, labels, head);
    if (step == 0) first = loss.item();
    last = loss.item();
    loss.backward();
    opt.step();
  }
  CHECK(last < first);
}

TEST_CASE("pit loss is zero for any permutation of matching sets") {
  Rng rng(5);
  for (int n : {2, 3}) {
    std::vector<Tensor> targets;
    for (int i = 0; i < n; ++i) targets.push_back(unit_tensor(rng, 6));
    std::vector<int> perm(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) perm[static_cast<size_t>(i)] = i;
    do {
      std::vector<Tensor> pred;
      for (int i = 0; i < n; ++i)
        pred.push_back(targets[static_cast<size_t>(perm[static_cast<size_t>(i)])]);
      PitResult r = pit_cosine_loss(pred, targets);
      CHECK(std::fabs(r.loss.item()) < 1e-12);
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
}

TEST_CASE("pit loss is invariant to target permutations") {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    int n = trial % 2 ? 2 : 3;
    std::vector<Tensor> pred, targets;
    for (int i = 0; i < n; ++i) {
      pred.push_back(unit_tensor(rng, 5));
      targets.push_back(unit_tensor(rng, 5));
    }
    double base = pit_cosine_loss(pred, targets).loss.item();
    CHECK(base >= 0.0);
    CHECK(base <= 2.0);
    std::vector<int> perm(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) perm[static_cast<size_t>(i)] = i;
    do {
      std::vector<Tensor> shuffled;
      for (int i = 0; i < n; ++i)
        shuffled.push_back(targets[static_cast<size_t>(perm[static_cast<size_t>(i)])]);
      CHECK(std::fabs(pit_cosine_loss(pred, shuffled).loss.item() - base) <=
            1e-12);
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
}

TEST_CASE("pit loss equals the exhaustive permutation minimum") {
  Rng rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 3, d = 5;
    std::vector<Tensor> pred, targets;
    for (int i = 0; i < n; ++i) {
      pred.push_back(unit_tensor(rng, d));
      targets.push_back(unit_tensor(rng, d));
    }
    PitResult got = pit_cosine_loss(pred, targets);
    // Brute force over all 6 permutations.
    std::vector<int> perm = {0, 1, 2};
    double best = 1e300;
    do {
      double t = 0.0;
      for (int i = 0; i < n; ++i) {
        double dot = 0.0;
        for (int k = 0; k < d; ++k)
          dot += pred[static_cast<size_t>(i)][k] *
                 targets[static_cast<size_t>(perm[static_cast<size_t>(i)])][k];
        t += 1.0 - dot;
      }
      best = std::min(best, t / n);
    } while (std::next_permutation(perm.begin(), perm.end()));
    CHECK(std::fabs(got.loss.item() - best) < 1e-12);
  }
  std::vector<Tensor> two = {unit_tensor(rng, 4), unit_tensor(rng, 4)};
  std::vector<Tensor> three = {unit_tensor(rng, 4), unit_tensor(rng, 4),
                               unit_tensor(rng, 4)};
  CHECK_THROWS_AS(pit_cosine_loss(two, three), ShapeError);
}

TEST_CASE("pit loss gradients match finite differences") {
  for (int seedi = 0; seedi < 10; ++seedi) {
    Rng rng(600 + static_cast<uint64_t>(seedi));
    const int n = 3, d = 4;
    std::vector<Tensor> targets;
    for (int i = 0; i < n; ++i) targets.push_back(unit_tensor(rng, d));
    std::vector<double> flat;
    for (int i = 0; i < n; ++i) {
      auto v = random_unit(rng, d);
      flat.insert(flat.end(), v.begin(), v.end());
    }
    Tensor x({n, d}, flat);
    auto f = [&](const Tensor& t) {
      std::vector<Tensor> pred;
      for (int i = 0; i < n; ++i) pred.push_back(reshape(slice(t, 0, i, 1), {d}));
      return pit_cosine_loss(pred, targets).loss;
    };
    CHECK(grad_check(f, x, 1e-5) < 1e-4);
  }
}

TEST_CASE("si_sdr basic identities") {
  Waveform ref, est;
  ref.samples = {1.0, 0.0};
  est.samples = {1.0, 1.0};
  CHECK(si_sdr(est, ref) == doctest::Approx(0.0).epsilon(1e-6));

  Rng rng(12);
  Waveform r2;
  for (int i = 0; i < 256; ++i) r2.samples.push_back(rng.uniform(-1, 1));
  for (double c : {1.0, -0.5, 3.0}) {
    Waveform scaled;
    for (double v : r2.samples) scaled.samples.push_back(c * v);
    CHECK(si_sdr(scaled, r2) == kSiSdrCapDb);
  }

  Waveform noisy;
  for (size_t i = 0; i < r2.samples.size(); ++i)
    noisy.samples.push_back(r2.samples[i] + 0.1 * rng.gaussian());
  double a = si_sdr(noisy, r2);
  Waveform doubled;
  for (double v : noisy.samples) doubled.samples.push_back(2.0 * v);
  CHECK(std::fabs(si_sdr(doubled, r2) - a) < 1e-9);

  Waveform zeros;
  zeros.samples.assign(256, 0.0);
  CHECK_THROWS_AS(si_sdr(noisy, zeros), ValueError);
  Waveform shorter;
  shorter.samples.assign(100, 0.1);
  CHECK_THROWS_AS(si_sdr(shorter, r2), ShapeError);
}

TEST_CASE("si_sdr_loss agrees with the metric and is differentiable") {
  Rng rng(13);
  const int n = 64;
  std::vector<double> ref(n);
  for (auto& v : ref) v = rng.uniform(-1, 1);
  std::vector<double> est(n);
  for (int i = 0; i < n; ++i) est[static_cast<size_t>(i)] = ref[static_cast<size_t>(i)] + 0.3 * rng.gaussian();

  Tensor est_t(std::vector<int>{n}, est);
  double loss = si_sdr_loss(est_t, ref).item();
  Waveform we, wr;
  we.samples = est;
  wr.samples = ref;
  CHECK(std::fabs(-loss - si_sdr(we, wr)) < 1e-6);

  for (int seedi = 0; seedi < 5; ++seedi) {
    Rng r2(800 + static_cast<uint64_t>(seedi));
    std::vector<double> e2(n);
    for (auto& v : e2) v = r2.uniform(-1, 1);
    Tensor x(std::vector<int>{n}, e2);
    CHECK(grad_check([&](const Tensor& t) { return si_sdr_loss(t, ref); }, x,
                     1e-5) < 1e-4);
  }
}
