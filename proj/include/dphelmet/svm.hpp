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

#ifndef DPHELMET_SVM_HPP_
#define DPHELMET_SVM_HPP_

#include <optional>
#include <vector>

#include "dphelmet/core.hpp"

namespace dphelmet::svm {

// Smoothed hinge with a quadratic transition of width 2h around margin 1.
//   z > 1+h      -> 0
//   |1-z| <= h   -> (1+h-z)^2 / (4h)
//   z < 1-h      -> 1-z
double huber_loss(double z, double h);

// d/dz of huber_loss; -1 on the linear branch, 0 past 1+h.
double huber_grad(double z, double h);

// +1 iff y == k, else -1 (standard one-vs-rest encoding).
double ovr_label(int32_t y, int32_t k);

// J(f, D, k) = Lambda/2 f'f + mean over D of loss(f'clipped(x) * ovr(y,k)).
double objective(std::span<const double> f, const Dataset& data, int32_t k,
                 const Hyperparams& hp);

// Gradient of the objective with respect to f.
std::vector<double> objective_gradient(std::span<const double> f,
                                       const Dataset& data, int32_t k,
                                       const Hyperparams& hp);

// Smoothness constant used in the step-size schedule:
// c^2/(2h) + Lambda for the Huber hinge, c^2/4 + Lambda for logistic.
double smoothness(const Hyperparams& hp);

// Lipschitz constant of the per-example objective on the R-ball: c + R*Lambda.
double lipschitz(const Hyperparams& hp);

struct TrainTrace {
  bool record_objective = false;        // opt-in, costs one full pass per step
  std::vector<std::vector<double>> objective_per_iteration;  // per class
  std::vector<double> final_row_norms;
  int iterations = 0;
  double beta = 0.0;
  double lambda = 0.0;

  // Opt-in: snapshot each row right after these steps (sorted ascending).
  // An M-step prefix of a longer run equals an M-step run under the same
  // stream, so snapshots stand in for separate shorter trainings.
  std::vector<int> snapshot_iterations;
  std::vector<std::vector<std::vector<double>>> snapshots;  // [class][grid]
};

// Projected mini-batch SGD per class: M steps with alpha_m = min(1/beta,
// 1/(Lambda m)) from a zero start, batches drawn by per-epoch reshuffling,
// each step followed by projection f <- R f / max(R, ||f||). Every returned
// row satisfies ||f|| <= R.
ModelStack train(const Dataset& data, const Hyperparams& hp, Rng& rng,
                 int jobs = 1, TrainTrace* trace = nullptr);

// Sensitivity bound of train() under single-point replacement:
// s = 2 (c + R*Lambda) / (N * Lambda).
double sensitivity(const Hyperparams& hp, size_t n);

// argmax_k f_k' x, ties broken toward the smallest class label. The caller
// clips x with the training bound first.
int32_t predict(const ModelStack& model, std::span<const double> x);

// Top-1 accuracy of model on `data`, clipping each point with bound c.
double accuracy(const ModelStack& model, const Dataset& data, double c);

}  // namespace dphelmet::svm

#endif  // DPHELMET_SVM_HPP_
