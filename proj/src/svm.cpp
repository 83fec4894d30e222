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

#include <algorithm>
#include <cmath>

#include "dphelmet/data.hpp"

namespace dphelmet::svm {
namespace {

// Loss value and d/dz at margin z, dispatching on the configured loss.
inline double loss_value(double z, const Hyperparams& hp) {
  if (hp.loss == LossKind::kHuberHinge) return huber_loss(z, hp.huber_h);
  // ln(1 + exp(-z)), stable on both tails.
  return z > 0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
}

inline double loss_slope(double z, const Hyperparams& hp) {
  if (hp.loss == LossKind::kHuberHinge) return huber_grad(z, hp.huber_h);
  // -sigmoid(-z), stable on both tails.
  return z > 0 ? -std::exp(-z) / (1.0 + std::exp(-z))
               : -1.0 / (1.0 + std::exp(z));
}

inline void project_to_ball(std::span<double> f, double radius) {
  double norm = l2_norm(f);
  if (norm > radius) {
    double scale = radius / norm;
    for (double& v : f) v *= scale;
  }
}

}  // namespace

double huber_loss(double z, double h) {
  if (h <= 0) throw ValidationError("huber smoothness must be > 0");
  if (z > 1.0 + h) return 0.0;
  if (z < 1.0 - h) return 1.0 - z;
  double u = 1.0 + h - z;
  return u * u / (4.0 * h);
}

double huber_grad(double z, double h) {
  if (h <= 0) throw ValidationError("huber smoothness must be > 0");
  if (z > 1.0 + h) return 0.0;
  if (z < 1.0 - h) return -1.0;
  return -(1.0 + h - z) / (2.0 * h);
}

double ovr_label(int32_t y, int32_t k) { return y == k ? 1.0 : -1.0; }

double objective(std::span<const double> f, const Dataset& data, int32_t k,
                 const Hyperparams& hp) {
  if (f.size() != static_cast<size_t>(data.dim()) + 1) {
    throw ValidationError("objective: model dimension mismatch");
  }
  double loss_sum = 0.0;
  for (const auto& pt : data.points()) {
    auto clipped = data::clip_point(pt.features, hp.clip);
    double z = dot(f, clipped) * ovr_label(pt.label, k);
    loss_sum += loss_value(z, hp);
  }
  return 0.5 * hp.lambda * dot(f, f) +
         loss_sum / static_cast<double>(data.size());
}

std::vector<double> objective_gradient(std::span<const double> f,
                                       const Dataset& data, int32_t k,
                                       const Hyperparams& hp) {
  if (f.size() != static_cast<size_t>(data.dim()) + 1) {
    throw ValidationError("objective_gradient: model dimension mismatch");
  }
  std::vector<double> grad(f.size());
  for (size_t i = 0; i < f.size(); ++i) grad[i] = hp.lambda * f[i];
  double inv_n = 1.0 / static_cast<double>(data.size());
  for (const auto& pt : data.points()) {
    auto clipped = data::clip_point(pt.features, hp.clip);
    double y = ovr_label(pt.label, k);
    double z = dot(f, clipped) * y;
    double slope = loss_slope(z, hp) * y * inv_n;
    for (size_t i = 0; i < f.size(); ++i) grad[i] += slope * clipped[i];
  }
  return grad;
}

double smoothness(const Hyperparams& hp) {
  double c2 = hp.clip * hp.clip;
  if (hp.loss == LossKind::kHuberHinge) {
    return c2 / (2.0 * hp.huber_h) + hp.lambda;
  }
  return c2 / 4.0 + hp.lambda;
}

double lipschitz(const Hyperparams& hp) {
  return hp.clip + hp.radius * hp.lambda;
}

ModelStack train(const Dataset& data, const Hyperparams& hp, Rng& rng,
                 int jobs, TrainTrace* trace) {
  hp.validate();
  size_t n = data.size();
  if (static_cast<size_t>(hp.batch_size) > n) {
    throw ValidationError("batch_size " + std::to_string(hp.batch_size) +
                          " exceeds dataset size " + std::to_string(n));
  }
  size_t cols = static_cast<size_t>(data.dim()) + 1;
  const auto& classes = data.classes();
  ModelStack model(classes, static_cast<int>(cols));

  // Inputs are clipped once up front; Algorithm semantics clip per access,
  // and clip_point is idempotent.
  std::vector<double> clipped(n * cols);
  for (size_t i = 0; i < n; ++i) {
    auto c = data::clip_point(data.points()[i].features, hp.clip);
    std::copy(c.begin(), c.end(), clipped.begin() + i * cols);
  }

  double beta = smoothness(hp);
  size_t batch = static_cast<size_t>(hp.batch_size);
  size_t steps_per_epoch = (n + batch - 1) / batch;

  if (trace) {
    trace->iterations = hp.iterations;
    trace->beta = beta;
    trace->lambda = hp.lambda;
    trace->objective_per_iteration.assign(classes.size(), {});
    trace->final_row_norms.assign(classes.size(), 0.0);
    trace->snapshots.assign(classes.size(), {});
  }

  // Per-class streams keyed by the class label, so concurrent training and
  // sequential training draw identical batches.
  std::vector<Rng> class_rngs;
  class_rngs.reserve(classes.size());
  for (int32_t k : classes) {
    class_rngs.push_back(rng.substream("sgd/class/" + std::to_string(k)));
  }

  parallel_for(classes.size(), jobs, [&](size_t ki) {
    int32_t k = classes[ki];
    Rng& class_rng = class_rngs[ki];
    auto f = model.row(ki);
    std::vector<double> grad(cols);
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;

    for (int m = 1; m <= hp.iterations; ++m) {
      size_t slot = static_cast<size_t>(m - 1) % steps_per_epoch;
      if (slot == 0) class_rng.shuffle(order);
      size_t begin = slot * batch;
      size_t end = std::min(begin + batch, n);
      size_t bsize = end - begin;

      for (size_t i = 0; i < cols; ++i) grad[i] = hp.lambda * f[i];
      double inv_b = 1.0 / static_cast<double>(bsize);
      for (size_t bi = begin; bi < end; ++bi) {
        const double* x = clipped.data() + order[bi] * cols;
        double y = ovr_label(data.points()[order[bi]].label, k);
        double z = 0.0;
        for (size_t i = 0; i < cols; ++i) z += f[i] * x[i];
        z *= y;
        double slope = loss_slope(z, hp) * y * inv_b;
        for (size_t i = 0; i < cols; ++i) grad[i] += slope * x[i];
      }

      double alpha = std::min(1.0 / beta, 1.0 / (hp.lambda * m));
      for (size_t i = 0; i < cols; ++i) f[i] -= alpha * grad[i];
      project_to_ball(f, hp.radius);

      if (trace && trace->record_objective) {
        trace->objective_per_iteration[ki].push_back(
            objective(f, data, k, hp));
      }
      if (trace && std::binary_search(trace->snapshot_iterations.begin(),
                                      trace->snapshot_iterations.end(), m)) {
        trace->snapshots[ki].emplace_back(f.begin(), f.end());
      }
    }
    if (trace) trace->final_row_norms[ki] = l2_norm(f);
  });

  return model;
}

double sensitivity(const Hyperparams& hp, size_t n) {
  if (n < 1) throw ValidationError("sensitivity: N must be >= 1");
  return 2.0 * (hp.clip + hp.radius * hp.lambda) /
         (static_cast<double>(n) * hp.lambda);
}

int32_t predict(const ModelStack& model, std::span<const double> x) {
  if (x.size() != static_cast<size_t>(model.cols())) {
    throw ValidationError("predict: input dimension mismatch");
  }
  size_t best = 0;
  double best_margin = dot(model.row(0), x);
  for (size_t k = 1; k < model.num_classes(); ++k) {
    double margin = dot(model.row(k), x);
    if (margin > best_margin) {
      best_margin = margin;
      best = k;
    }
  }
  return model.classes()[best];
}

double accuracy(const ModelStack& model, const Dataset& data, double c) {
  size_t hits = 0;
  for (const auto& pt : data.points()) {
    auto clipped = data::clip_point(pt.features, c);
    if (predict(model, clipped) == pt.label) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

}  // namespace dphelmet::svm
