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

#ifndef DPHELMET_LEARNABILITY_HPP_
#define DPHELMET_LEARNABILITY_HPP_

#include <vector>

#include <json.hpp>

#include "dphelmet/svm.hpp"

namespace dphelmet::learnability {

struct StabilityReport {
  double theoretical_bound = 0.0;  // 2 L^2 / (Lambda N)
  double observed_max_gap = 0.0;
  double lipschitz = 0.0;  // L = c + R * Lambda
  int probes = 0;
  int violations = 0;  // gaps above bound + 1e-6

  nlohmann::json to_json() const;
};

// For each probe: replace one random point in one user's shard, train the
// averaged model on both pools with a shared seed, and record the largest
// per-point objective gap over a held-out probe set and all classes.
StabilityReport stability_probe(const Dataset& dataset, const Hyperparams& hp,
                                int num_users, int probes, Rng& rng,
                                int probe_set_size = 1000, int jobs = 1);

struct ConvergenceReport {
  std::vector<int> m_grid;
  std::vector<double> gaps;      // J(avg model at M) - J(f*), pooled objective
  double fitted_slope = 0.0;     // log gap vs log(M-1), tail fit
  double reference_grad_norm = 0.0;
  double leading_constant = 0.0;  // beta L^2 / (2 Lambda^2)

  nlohmann::json to_json() const;
};

// f* per class comes from long-horizon full-batch projected gradient descent
// on the pooled objective; trained averaged models are compared against it
// along the M grid. Gaps are averaged over `seeds` independent runs.
ConvergenceReport convergence_probe(const Dataset& dataset,
                                    const Hyperparams& hp, int num_users,
                                    const std::vector<int>& m_grid, Rng& rng,
                                    int seeds = 5, int tail_points = 4,
                                    int jobs = 1);

void write_convergence_csv(const ConvergenceReport& report,
                           const std::string& path);

}  // namespace dphelmet::learnability

#endif  // DPHELMET_LEARNABILITY_HPP_
