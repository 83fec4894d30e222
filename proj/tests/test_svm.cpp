//
// Copyright 2026 The dphelmet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "dphelmet/svm.hpp"

#include <cmath>
#include <numeric>

#include <doctest.h>

#include "dphelmet/data.hpp"

using namespace dphelmet;
namespace svm = dphelmet::svm;

namespace {

// Brute-force objective oracle, written independently of svm::objective:
// explicit clip, std::inner_product margins, case-by-case Huber.
double objective_oracle(const std::vector<double>& f, const Dataset& d,
                        int32_t k, const Hyperparams& hp) {
  double reg = 0.0;
  for (double w : f) reg += w * w;
  reg *= 0.5 * hp.lambda;
  double total = 0.0;
  for (const auto& pt : d.points()) {
    double norm = 0.0;
    for (double x : pt.features) norm += x * x;
    norm = std::sqrt(norm);
    double scale = norm > hp.clip ? hp.clip / norm : 1.0;
    double margin = 0.0;
    for (size_t i = 0; i < f.size(); ++i) margin += f[i] * pt.features[i] * scale;
    margin *= (pt.label == k) ? 1.0 : -1.0;
    double loss;
    if (hp.loss == LossKind::kHuberHinge) {
      if (margin > 1.0 + hp.huber_h) {
        loss = 0.0;
      } else if (margin < 1.0 - hp.huber_h) {
        loss = 1.0 - margin;
      } else {
        loss = (1.0 + hp.huber_h - margin) * (1.0 + hp.huber_h - margin) /
               (4.0 * hp.huber_h);
      }
    } else {
      loss = std::log(1.0 + std::exp(-margin));
    }
    total += loss;
  }
  return reg + total / static_cast<double>(d.size());
}

Dataset tiny_blobs(uint64_t seed, int classes = 3, int dim = 4,
                   int per_class = 20, double spread = 1.0,
                   double separation = 3.0) {
  Rng rng = spawn_rng(seed, "tiny");
  return data::synth_blobs(rng, classes, dim, per_class, spread, separation);
}

// True when every margin is clear of the Huber breakpoints 1-h and 1+h.
bool away_from_breakpoints(const std::vector<double>& f, const Dataset& d,
                           int32_t k, const Hyperparams& hp, double window) {
  for (const auto& pt : d.points()) {
    auto clipped = data::clip_point(pt.features, hp.clip);
    double z = dot(f, clipped) * svm::ovr_label(pt.label, k);
    if (std::abs(z - (1.0 - hp.huber_h)) < window) return false;
    if (std::abs(z - (1.0 + hp.huber_h)) < window) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("huber loss branch values") {
  CHECK(svm::huber_loss(2.0, 0.1) == 0.0);
  CHECK(svm::huber_loss(1.0, 0.1) == doctest::Approx(0.025));  // (1/0.4)*0.01
  CHECK(svm::huber_loss(0.0, 0.1) == doctest::Approx(1.0));
}

TEST_CASE("huber gradient branch values") {
  CHECK(svm::huber_grad(2.0, 0.1) == 0.0);
  CHECK(svm::huber_grad(0.0, 0.1) == -1.0);
  CHECK(svm::huber_grad(1.0, 0.1) == doctest::Approx(-0.5));  // -(1/0.2)*0.1
}

TEST_CASE("huber loss is continuous and matches finite differences") {
  const double h = 0.1;
  // Continuity across the two breakpoints.
  CHECK(svm::huber_loss(1.0 + h - 1e-12, h) ==
        doctest::Approx(svm::huber_loss(1.0 + h + 1e-12, h)).epsilon(1e-6));
  CHECK(svm::huber_loss(1.0 - h - 1e-12, h) ==
        doctest::Approx(svm::huber_loss(1.0 - h + 1e-12, h)).epsilon(1e-6));

  Rng rng = spawn_rng(1, "huber-fd");
  int checked = 0;
  while (checked < 200) {
    double z = 4.0 * (rng.uniform() - 0.5);
    if (std::abs(z - (1.0 - h)) < 1e-4 || std::abs(z - (1.0 + h)) < 1e-4) {
      continue;
    }
    double step = 1e-7;
    double fd = (svm::huber_loss(z + step, h) - svm::huber_loss(z - step, h)) /
                (2.0 * step);
    REQUIRE(svm::huber_grad(z, h) == doctest::Approx(fd).epsilon(1e-5));
    ++checked;
  }
}

TEST_CASE("ovr label encodes one positive class") {
  CHECK(svm::ovr_label(3, 3) == 1.0);
  CHECK(svm::ovr_label(2, 3) == -1.0);
  for (int32_t y = 0; y < 5; ++y) {
    int positives = 0;
    for (int32_t k = 0; k < 5; ++k) {
      if (svm::ovr_label(y, k) > 0) ++positives;
    }
    REQUIRE(positives == 1);
  }
}

TEST_CASE("objective at the zero model") {
  auto d = tiny_blobs(3);
  Hyperparams hp;
  hp.clip = 1.0;
  std::vector<double> zero(static_cast<size_t>(d.dim()) + 1, 0.0);
  // All margins are 0 < 1-h, so the Huber term is 1 - 0 = 1.
  CHECK(svm::objective(zero, d, 0, hp) == doctest::Approx(1.0));
  hp.loss = LossKind::kLogistic;
  CHECK(svm::objective(zero, d, 0, hp) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("objective matches an independent oracle") {
  Rng rng = spawn_rng(17, "probe");
  auto d = tiny_blobs(4, 3, 4, 5);
  for (auto loss : {LossKind::kHuberHinge, LossKind::kLogistic}) {
    Hyperparams hp;
    hp.loss = loss;
    hp.clip = 1.5;
    hp.lambda = 0.7;
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> f(static_cast<size_t>(d.dim()) + 1);
      for (double& v : f) v = 2.0 * (rng.uniform() - 0.5);
      int32_t k = d.classes()[static_cast<size_t>(
          rng.next_below(d.classes().size()))];
      REQUIRE(svm::objective(f, d, k, hp) ==
              doctest::Approx(objective_oracle(f, d, k, hp)).epsilon(1e-12));
    }
  }
}

TEST_CASE("objective rejects dimension mismatch") {
  auto d = tiny_blobs(5);
  Hyperparams hp;
  std::vector<double> wrong(static_cast<size_t>(d.dim()) + 3, 0.0);
  CHECK_THROWS_AS(svm::objective(wrong, d, 0, hp), ValidationError);
}

TEST_CASE("analytic gradient matches central differences") {
  Rng rng = spawn_rng(23, "grad");
  auto d = tiny_blobs(6, 2, 3, 8);
  for (auto loss : {LossKind::kHuberHinge, LossKind::kLogistic}) {
    Hyperparams hp;
    hp.loss = loss;
    hp.clip = 1.2;
    hp.lambda = 0.5;
    int probes = 0;
    while (probes < 30) {
      std::vector<double> f(static_cast<size_t>(d.dim()) + 1);
      for (double& v : f) v = 1.5 * (rng.uniform() - 0.5);
      int32_t k = d.classes()[static_cast<size_t>(
          rng.next_below(d.classes().size()))];
      if (loss == LossKind::kHuberHinge &&
          !away_from_breakpoints(f, d, k, hp, 1e-3)) {
        continue;
      }
      auto grad = svm::objective_gradient(f, d, k, hp);
      const double step = 1e-6;
      std::vector<double> fd(f.size());
      for (size_t i = 0; i < f.size(); ++i) {
        auto hi = f, lo = f;
        hi[i] += step;
        lo[i] -= step;
        fd[i] = (svm::objective(hi, d, k, hp) - svm::objective(lo, d, k, hp)) /
                (2.0 * step);
      }
      std::vector<double> diff(f.size());
      for (size_t i = 0; i < f.size(); ++i) diff[i] = grad[i] - fd[i];
      REQUIRE(l2_norm(diff) <= 1e-4 * std::max(1.0, l2_norm(grad)));
      ++probes;
    }
  }
}

TEST_CASE("objective is strongly convex along segments") {
  Rng rng = spawn_rng(31, "convex");
  auto d = tiny_blobs(7, 2, 3, 10);
  Hyperparams hp;
  hp.lambda = 0.8;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> f1(static_cast<size_t>(d.dim()) + 1);
    std::vector<double> f2(f1.size());
    for (double& v : f1) v = 2.0 * (rng.uniform() - 0.5);
    for (double& v : f2) v = 2.0 * (rng.uniform() - 0.5);
    std::vector<double> mid(f1.size());
    std::vector<double> delta(f1.size());
    for (size_t i = 0; i < f1.size(); ++i) {
      mid[i] = 0.5 * (f1[i] + f2[i]);
      delta[i] = f1[i] - f2[i];
    }
    double gap2 = dot(delta, delta);
    double chord = 0.5 * (svm::objective(f1, d, 0, hp) +
                          svm::objective(f2, d, 0, hp));
    REQUIRE(svm::objective(mid, d, 0, hp) <=
            chord - hp.lambda / 8.0 * gap2 + 1e-9);
  }
}

TEST_CASE("train reaches high accuracy on separable blobs") {
  Rng data_rng = spawn_rng(0, "sep");
  auto d = data::synth_blobs(data_rng, 2, 2, 100, 0.1, 4.0);
  Hyperparams hp;
  hp.clip = 10.0;
  hp.lambda = 0.5;
  hp.radius = 1.0;
  hp.huber_h = 0.1;
  hp.iterations = 500;
  hp.batch_size = 20;
  Rng rng = spawn_rng(1, "train");
  auto model = svm::train(d, hp, rng);
  CHECK(svm::accuracy(model, d, hp.clip) >= 0.99);
}

TEST_CASE("one full-batch step from zero matches a hand-computed update") {
  auto d = tiny_blobs(8, 2, 3, 6);
  Hyperparams hp;
  hp.clip = 1.0;
  hp.lambda = 2.0;
  hp.radius = 0.05;
  hp.huber_h = 0.1;
  hp.iterations = 1;
  hp.batch_size = static_cast<int>(d.size());  // full batch: order-free
  Rng rng = spawn_rng(9, "train");
  auto model = svm::train(d, hp, rng);

  double beta = svm::smoothness(hp);
  double alpha = std::min(1.0 / beta, 1.0 / hp.lambda);
  for (size_t ki = 0; ki < d.classes().size(); ++ki) {
    int32_t k = d.classes()[ki];
    // From f = 0 every margin is 0 (< 1-h), so the slope is -1 per point.
    std::vector<double> grad(static_cast<size_t>(d.dim()) + 1, 0.0);
    for (const auto& pt : d.points()) {
      auto clipped = data::clip_point(pt.features, hp.clip);
      double y = svm::ovr_label(pt.label, k);
      for (size_t i = 0; i < grad.size(); ++i) {
        grad[i] += -1.0 * y * clipped[i] / static_cast<double>(d.size());
      }
    }
    std::vector<double> expected(grad.size());
    for (size_t i = 0; i < grad.size(); ++i) expected[i] = -alpha * grad[i];
    double norm = l2_norm(expected);
    if (norm > hp.radius) {
      for (double& v : expected) v *= hp.radius / norm;
    }
    for (size_t i = 0; i < expected.size(); ++i) {
      REQUIRE(model.row(ki)[i] == doctest::Approx(expected[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("training is bitwise deterministic") {
  auto d = tiny_blobs(10);
  Hyperparams hp;
  hp.iterations = 200;
  hp.batch_size = 10;
  Rng r1 = spawn_rng(3, "t");
  Rng r2 = spawn_rng(3, "t");
  auto m1 = svm::train(d, hp, r1);
  auto m2 = svm::train(d, hp, r2);
  REQUIRE(m1.weights() == m2.weights());

  // Per-class parallel training draws the same batches.
  Rng r3 = spawn_rng(3, "t");
  auto m3 = svm::train(d, hp, r3, /*jobs=*/3);
  REQUIRE(m3.weights() == m1.weights());
}

TEST_CASE("train validates batch size") {
  auto d = tiny_blobs(11, 2, 2, 3);  // 6 points
  Hyperparams hp;
  hp.batch_size = 7;
  Rng rng = spawn_rng(0, "t");
  CHECK_THROWS_AS(svm::train(d, hp, rng), ValidationError);
}

TEST_CASE("projection invariant holds after training") {
  Rng cfg_rng = spawn_rng(5, "cfg");
  for (int trial = 0; trial < 5; ++trial) {
    auto d = tiny_blobs(20 + static_cast<uint64_t>(trial));
    Hyperparams hp;
    hp.radius = 0.02 + 0.2 * cfg_rng.uniform();
    hp.lambda = 0.5 + 4.0 * cfg_rng.uniform();
    hp.iterations = 150;
    hp.batch_size = 5;
    Rng rng = spawn_rng(static_cast<uint64_t>(trial), "t");
    auto model = svm::train(d, hp, rng);
    REQUIRE(model.max_row_norm() <= hp.radius + 1e-9);
  }
}

TEST_CASE("sensitivity formula values") {
  Hyperparams hp;
  hp.clip = 1.0;
  hp.radius = 1.0;
  hp.lambda = 1.0;
  CHECK(svm::sensitivity(hp, 2) == doctest::Approx(2.0));

  hp.clip = 34.854;
  hp.radius = 0.07;
  hp.lambda = 2.0;
  CHECK(svm::sensitivity(hp, 50) == doctest::Approx(0.69988));

  // Doubling N halves s.
  CHECK(svm::sensitivity(hp, 100) ==
        doctest::Approx(0.5 * svm::sensitivity(hp, 50)));
}

TEST_CASE("empirical sensitivity stays under the bound") {
  Hyperparams hp;
  hp.clip = 1.0;
  hp.radius = 0.07;
  hp.lambda = 2.0;
  hp.huber_h = 0.1;
  hp.iterations = 300;
  hp.batch_size = 20;
  const size_t n = 50;
  double bound = svm::sensitivity(hp, n);

  Rng rng = spawn_rng(77, "pairs");
  auto pool = tiny_blobs(12, 3, 4, 200, 1.0, 3.0);
  for (int pair = 0; pair < 30; ++pair) {
    // Fresh dataset of size n and a neighbor differing at one index.
    std::vector<DataPoint> pts;
    for (size_t i = 0; i < n; ++i) {
      pts.push_back(pool.points()[static_cast<size_t>(
          rng.next_below(pool.size()))]);
    }
    auto neighbor_pts = pts;
    size_t victim = static_cast<size_t>(rng.next_below(n));
    neighbor_pts[victim] = pool.points()[static_cast<size_t>(
        rng.next_below(pool.size()))];
    neighbor_pts[victim].label = pool.classes()[static_cast<size_t>(
        rng.next_below(pool.classes().size()))];

    Dataset d(pts, pool.classes());
    Dataset d_neighbor(neighbor_pts, pool.classes());
    uint64_t seed = 1000 + static_cast<uint64_t>(pair);
    Rng t1 = spawn_rng(seed, "train");
    Rng t2 = spawn_rng(seed, "train");
    auto m1 = svm::train(d, hp, t1);
    auto m2 = svm::train(d_neighbor, hp, t2);
    for (size_t ki = 0; ki < m1.num_classes(); ++ki) {
      std::vector<double> diff(m1.row(ki).size());
      for (size_t i = 0; i < diff.size(); ++i) {
        diff[i] = m1.row(ki)[i] - m2.row(ki)[i];
      }
      REQUIRE(l2_norm(diff) <= bound + 1e-6);
    }
  }
}

TEST_CASE("predict margins and tie-breaking") {
  ModelStack m({0, 1}, 2);
  m.row(0)[0] = 1.0;
  m.row(1)[0] = -1.0;
  std::vector<double> x = {1.0, 0.0};
  CHECK(svm::predict(m, x) == 0);

  ModelStack zero({2, 5, 9}, 2);
  CHECK(svm::predict(zero, x) == 2);  // tie -> smallest label

  // The average of two identical models predicts identically.
  ModelStack avg({0, 1}, 2);
  for (size_t k = 0; k < 2; ++k) {
    for (int i = 0; i < 2; ++i) {
      avg.row(k)[static_cast<size_t>(i)] =
          m.row(k)[static_cast<size_t>(i)];
    }
  }
  Rng rng = spawn_rng(2, "pred");
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> probe = {1.0, 4.0 * (rng.uniform() - 0.5)};
    REQUIRE(svm::predict(avg, probe) == svm::predict(m, probe));
  }

  std::vector<double> wrong = {1.0, 0.0, 0.0};
  CHECK_THROWS_AS(svm::predict(m, wrong), ValidationError);
}

TEST_CASE("train records a trace") {
  auto d = tiny_blobs(13, 2, 2, 10);
  Hyperparams hp;
  hp.iterations = 50;
  hp.batch_size = 5;
  svm::TrainTrace trace;
  trace.record_objective = true;
  trace.snapshot_iterations = {10, 50};
  Rng rng = spawn_rng(6, "t");
  auto model = svm::train(d, hp, rng, 1, &trace);
  CHECK(trace.beta == doctest::Approx(svm::smoothness(hp)));
  CHECK(trace.final_row_norms.size() == d.classes().size());
  REQUIRE(trace.objective_per_iteration[0].size() == 50);
  REQUIRE(trace.snapshots[0].size() == 2);
  // The last snapshot is the returned model.
  for (size_t i = 0; i < trace.snapshots[0][1].size(); ++i) {
    REQUIRE(trace.snapshots[0][1][i] == model.row(0)[i]);
  }
  // Objective decreases overall from the zero start.
  CHECK(trace.objective_per_iteration[0].back() <
        trace.objective_per_iteration[0].front());
}
