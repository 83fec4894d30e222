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

#ifndef DPHELMET_DP_HPP_
#define DPHELMET_DP_HPP_

#include <json.hpp>

#include "dphelmet/core.hpp"

namespace dphelmet::dp {

// Closed-form classical Gaussian-mechanism bound, valid for epsilon in (0,1).
struct EpsilonResult {
  double epsilon = 0.0;
  bool validity_warning = false;  // set when epsilon >= 1
};

// epsilon = sqrt(2 ln(1.25/delta)) / sigma, flagged when outside (0,1).
EpsilonResult epsilon_of_sigma(double sigma, double delta);

// sigma = sqrt(2 ln(1.25/delta)) / epsilon; epsilon must lie in (0,1).
double sigma_of_epsilon(double epsilon, double delta);

// Group privacy scales epsilon linearly in the group size.
double group_epsilon(double epsilon, int upsilon);

// Sensitivity of any R-norm-bounded learner under whole-dataset replacement.
double user_level_sensitivity(double radius);

// Epsilon after the published extrapolation to a larger user count:
// trained_models * epsilon * upsilon / num_users.
double extrapolated_epsilon(double epsilon, int upsilon, double num_users,
                            double trained_models = 1000.0);

enum class NoiseMode { kCentral, kDistributed };

struct NoisePlan {
  NoiseMode mode = NoiseMode::kCentral;
  double sigma = 0.0;
  double sensitivity = 0.0;
  double honest_fraction = 1.0;
  int num_users = 1;
  double per_user_std = 0.0;  // sigma*s (central) or sigma*s/sqrt(t*|U|)
};

// Central: each release is noised with sigma*s. Distributed: each of |U|
// users adds sigma*s/sqrt(t*|U|), so the honest users' averaged noise has
// standard deviation at least sigma*s/|U|.
NoisePlan noise_plan(NoiseMode mode, double sensitivity,
                     const PrivacySpec& spec, int num_users);

// Adds i.i.d. N(0, std_dev^2) to every entry of the stack (one spherical
// draw across all |K| rows).
ModelStack perturb(const ModelStack& model, double std_dev, Rng& rng);

// Accounting report for the CLI and run reports.
nlohmann::json accounting_report(const NoisePlan& plan, double delta,
                                 int upsilon);

}  // namespace dphelmet::dp

#endif  // DPHELMET_DP_HPP_
