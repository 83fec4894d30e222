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

#include "dphelmet/learnability.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>

#include "dphelmet/data.hpp"

namespace dphelmet::learnability {
namespace {

// Trains every shard with a shared per-user seed and returns the average.
ModelStack averaged_model(const std::vector<Dataset>& shards,
                          const Hyperparams& hp, const Rng& base_rng) {
  size_t cols = static_cast<size_t>(shards.front().dim()) + 1;
  ModelStack avg(shards.front().classes(), static_cast<int>(cols));
  double inv = 1.0 / static_cast<double>(shards.size());
  for (size_t u = 0; u < shards.size(); ++u) {
    Rng user_rng = base_rng.substream("user/" + std::to_string(u));
    ModelStack local = svm::train(shards[u], hp, user_rng);
    for (size_t i = 0; i < avg.weights().size(); ++i) {
      avg.weights()[i] += inv * local.weights()[i];
    }
  }
  return avg;
}

// J on a single probe point, every class; returns per-class values.
void singleton_objectives(const ModelStack& model, const DataPoint& pt,
                          const Hyperparams& hp, std::vector<double>& out) {
  auto clipped = data::clip_point(pt.features, hp.clip);
  out.resize(model.num_classes());
  for (size_t ki = 0; ki < model.num_classes(); ++ki) {
    auto f = model.row(ki);
    double z = dot(f, clipped) * svm::ovr_label(pt.label, model.classes()[ki]);
    double loss =
        hp.loss == LossKind::kHuberHinge
            ? svm::huber_loss(z, hp.huber_h)
            : (z > 0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z)));
    out[ki] = 0.5 * hp.lambda * dot(f, f) + loss;
  }
}

}  // namespace

nlohmann::json StabilityReport::to_json() const {
  return nlohmann::json{{"theoretical_bound", theoretical_bound},
                        {"observed_max_gap", observed_max_gap},
                        {"lipschitz", lipschitz},
                        {"probes", probes},
                        {"violations", violations}};
}

StabilityReport stability_probe(const Dataset& dataset, const Hyperparams& hp,
                                int num_users, int probes, Rng& rng,
                                int probe_set_size, int jobs) {
  if (probes < 1) throw ValidationError("probes must be >= 1");
  if (num_users < 1) throw ValidationError("num_users must be >= 1");
  hp.validate();

  // Hold out the probe set; the bound applies to the remaining pool size.
  size_t hold = std::min<size_t>(static_cast<size_t>(probe_set_size),
                                 dataset.size() / 2);
  if (hold < 1) throw ValidationError("dataset too small for a probe set");
  std::vector<size_t> order(dataset.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng split_rng = rng.substream("probe-split");
  split_rng.shuffle(order);
  std::vector<DataPoint> probe_pts, pool_pts;
  for (size_t i = 0; i < order.size(); ++i) {
    const auto& pt = dataset.points()[order[i]];
    if (i < hold) {
      probe_pts.push_back(pt);
    } else {
      pool_pts.push_back(pt);
    }
  }
  Dataset probe_set(std::move(probe_pts), dataset.classes());
  Dataset pool(std::move(pool_pts), dataset.classes());

  size_t total = pool.size();
  double lipschitz = svm::lipschitz(hp);
  double bound =
      2.0 * lipschitz * lipschitz / (hp.lambda * static_cast<double>(total));

  data::PartitionPlan plan;
  plan.num_users = num_users;
  Rng partition_rng = rng.substream("partition");
  auto shards = data::partition(pool, plan, partition_rng);

  StabilityReport report;
  report.theoretical_bound = bound;
  report.lipschitz = lipschitz;
  report.probes = probes;

  std::vector<double> gaps(static_cast<size_t>(probes), 0.0);
  parallel_for(static_cast<size_t>(probes), jobs, [&](size_t p) {
    Rng probe_rng = rng.substream("probe/" + std::to_string(p));
    size_t user = static_cast<size_t>(probe_rng.next_below(shards.size()));
    size_t slot =
        static_cast<size_t>(probe_rng.next_below(shards[user].size()));
    // Replacement: features of a random probe point, random label. The bound
    // is worst-case over replacements, so an off-distribution label is fair.
    const auto& donor = probe_set.points()[static_cast<size_t>(
        probe_rng.next_below(probe_set.size()))];
    DataPoint replacement = donor;
    replacement.label = pool.classes()[static_cast<size_t>(
        probe_rng.next_below(pool.classes().size()))];

    auto neighbor_points = shards[user].points();
    neighbor_points[slot] = replacement;
    std::vector<Dataset> neighbor_shards;
    neighbor_shards.reserve(shards.size());
    for (size_t u = 0; u < shards.size(); ++u) {
      if (u == user) {
        neighbor_shards.emplace_back(neighbor_points, pool.classes());
      } else {
        neighbor_shards.emplace_back(shards[u].points(), pool.classes());
      }
    }

    Rng train_rng = rng.substream("train/" + std::to_string(p));
    ModelStack avg = averaged_model(shards, hp, train_rng);
    ModelStack avg_neighbor = averaged_model(neighbor_shards, hp, train_rng);

    double worst = 0.0;
    std::vector<double> a, b;
    for (const auto& z : probe_set.points()) {
      singleton_objectives(avg, z, hp, a);
      singleton_objectives(avg_neighbor, z, hp, b);
      for (size_t ki = 0; ki < a.size(); ++ki) {
        worst = std::max(worst, std::abs(a[ki] - b[ki]));
      }
    }
    gaps[p] = worst;
  });

  for (double g : gaps) {
    report.observed_max_gap = std::max(report.observed_max_gap, g);
    if (g > bound + 1e-6) ++report.violations;
  }
  return report;
}

nlohmann::json ConvergenceReport::to_json() const {
  return nlohmann::json{{"m_grid", m_grid},
                        {"gaps", gaps},
                        {"fitted_slope", fitted_slope},
                        {"reference_grad_norm", reference_grad_norm},
                        {"leading_constant", leading_constant}};
}

ConvergenceReport convergence_probe(const Dataset& dataset,
                                    const Hyperparams& hp, int num_users,
                                    const std::vector<int>& m_grid, Rng& rng,
                                    int seeds, int tail_points, int jobs) {
  if (m_grid.size() < 3 || !std::is_sorted(m_grid.begin(), m_grid.end())) {
    throw ValidationError("M grid must be sorted with >= 3 values");
  }
  if (seeds < 1) throw ValidationError("seeds must be >= 1");
  hp.validate();

  // Reference optimum per class: full-batch projected gradient descent on
  // the pooled objective, constant step 1/beta (linear convergence under
  // strong convexity).
  size_t cols = static_cast<size_t>(dataset.dim()) + 1;
  const auto& classes = dataset.classes();
  ModelStack reference(classes, static_cast<int>(cols));
  double step = 1.0 / svm::smoothness(hp);
  double worst_grad_norm = 0.0;
  for (size_t ki = 0; ki < classes.size(); ++ki) {
    auto f = reference.row(ki);
    std::vector<double> fv(f.begin(), f.end());
    double grad_norm = 0.0;
    for (int it = 0; it < 100000; ++it) {
      auto grad = svm::objective_gradient(fv, dataset, classes[ki], hp);
      grad_norm = l2_norm(grad);
      if (grad_norm < 1e-10) break;
      for (size_t i = 0; i < cols; ++i) fv[i] -= step * grad[i];
      double norm = l2_norm(fv);
      if (norm > hp.radius) {
        for (double& v : fv) v *= hp.radius / norm;
      }
    }
    if (grad_norm >= 1e-6) {
      throw Error("reference optimizer did not converge (gradient norm " +
                  std::to_string(grad_norm) +
                  "); the unconstrained optimum may lie outside the R-ball");
    }
    worst_grad_norm = std::max(worst_grad_norm, grad_norm);
    std::copy(fv.begin(), fv.end(), f.begin());
  }

  std::vector<double> reference_objective(classes.size());
  for (size_t ki = 0; ki < classes.size(); ++ki) {
    reference_objective[ki] =
        svm::objective(reference.row(ki), dataset, classes[ki], hp);
  }

  data::PartitionPlan plan;
  plan.num_users = num_users;

  // gap[s][g]: mean-over-classes pooled-objective gap of the averaged model
  // snapshot at grid point g under seed s.
  std::vector<std::vector<double>> gap_per_seed(
      static_cast<size_t>(seeds),
      std::vector<double>(m_grid.size(), 0.0));

  Hyperparams run_hp = hp;
  run_hp.iterations = m_grid.back();

  parallel_for(static_cast<size_t>(seeds), jobs, [&](size_t s) {
    Rng seed_rng = rng.substream("seed/" + std::to_string(s));
    Rng partition_rng = seed_rng.substream("partition");
    auto shards = data::partition(dataset, plan, partition_rng);

    // One long run per user; snapshots stand in for shorter trainings.
    std::vector<std::vector<std::vector<double>>> avg_at_grid(
        m_grid.size(),
        std::vector<std::vector<double>>(classes.size(),
                                         std::vector<double>(cols, 0.0)));
    double inv = 1.0 / static_cast<double>(shards.size());
    for (size_t u = 0; u < shards.size(); ++u) {
      svm::TrainTrace trace;
      trace.snapshot_iterations = m_grid;
      Rng user_rng = seed_rng.substream("user/" + std::to_string(u));
      svm::train(shards[u], run_hp, user_rng, 1, &trace);
      for (size_t ki = 0; ki < classes.size(); ++ki) {
        for (size_t g = 0; g < m_grid.size(); ++g) {
          const auto& snap = trace.snapshots[ki][g];
          for (size_t i = 0; i < cols; ++i) {
            avg_at_grid[g][ki][i] += inv * snap[i];
          }
        }
      }
    }
    for (size_t g = 0; g < m_grid.size(); ++g) {
      double gap = 0.0;
      for (size_t ki = 0; ki < classes.size(); ++ki) {
        gap += svm::objective(avg_at_grid[g][ki], dataset, classes[ki], hp) -
               reference_objective[ki];
      }
      gap_per_seed[s][g] = gap / static_cast<double>(classes.size());
    }
  });

  ConvergenceReport report;
  report.m_grid = m_grid;
  report.reference_grad_norm = worst_grad_norm;
  double lipschitz = svm::lipschitz(hp);
  report.leading_constant = svm::smoothness(hp) * lipschitz * lipschitz /
                            (2.0 * hp.lambda * hp.lambda);
  report.gaps.assign(m_grid.size(), 0.0);
  for (size_t g = 0; g < m_grid.size(); ++g) {
    for (int s = 0; s < seeds; ++s) {
      report.gaps[g] += gap_per_seed[static_cast<size_t>(s)][g];
    }
    report.gaps[g] /= static_cast<double>(seeds);
  }

  // Least squares on (log(M-1), log gap) over the grid tail.
  size_t tail = std::min<size_t>(static_cast<size_t>(std::max(tail_points, 2)),
                                 m_grid.size());
  size_t first = m_grid.size() - tail;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t g = first; g < m_grid.size(); ++g) {
    double x = std::log(static_cast<double>(m_grid[g] - 1));
    double y = std::log(std::max(report.gaps[g], 1e-300));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  double n = static_cast<double>(tail);
  report.fitted_slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return report;
}

void write_convergence_csv(const ConvergenceReport& report,
                           const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "M,gap\n";
  out.precision(12);
  for (size_t g = 0; g < report.m_grid.size(); ++g) {
    out << report.m_grid[g] << ',' << report.gaps[g] << '\n';
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace dphelmet::learnability
