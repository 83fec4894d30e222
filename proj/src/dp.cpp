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

#include "dphelmet/dp.hpp"

#include <cmath>
#include <limits>

namespace dphelmet::dp {

EpsilonResult epsilon_of_sigma(double sigma, double delta) {
  if (sigma <= 0) throw ValidationError("sigma must be > 0");
  if (delta <= 0 || delta >= 1) throw ValidationError("delta must be in (0,1)");
  EpsilonResult r;
  r.epsilon = std::sqrt(2.0 * std::log(1.25 / delta)) / sigma;
  r.validity_warning = r.epsilon >= 1.0;
  return r;
}

double sigma_of_epsilon(double epsilon, double delta) {
  if (epsilon <= 0 || epsilon >= 1) {
    throw ValidationError("epsilon must be in (0,1) for the closed-form bound");
  }
  if (delta <= 0 || delta >= 1) throw ValidationError("delta must be in (0,1)");
  return std::sqrt(2.0 * std::log(1.25 / delta)) / epsilon;
}

double group_epsilon(double epsilon, int upsilon) {
  if (epsilon <= 0) throw ValidationError("epsilon must be > 0");
  if (upsilon < 1) throw ValidationError("group size must be >= 1");
  return static_cast<double>(upsilon) * epsilon;
}

double user_level_sensitivity(double radius) {
  if (radius <= 0) throw ValidationError("radius must be > 0");
  return 2.0 * radius;
}

double extrapolated_epsilon(double epsilon, int upsilon, double num_users,
                            double trained_models) {
  if (num_users <= 0) throw ValidationError("num_users must be > 0");
  return trained_models * epsilon * static_cast<double>(upsilon) / num_users;
}

NoisePlan noise_plan(NoiseMode mode, double sensitivity,
                     const PrivacySpec& spec, int num_users) {
  if (sensitivity <= 0) throw ValidationError("sensitivity must be > 0");
  if (num_users < 1) throw ValidationError("num_users must be >= 1");
  spec.validate();
  NoisePlan plan;
  plan.mode = mode;
  plan.sigma = spec.sigma;
  plan.sensitivity = sensitivity;
  plan.honest_fraction = spec.honest_fraction;
  plan.num_users = num_users;
  if (mode == NoiseMode::kCentral) {
    plan.per_user_std = spec.sigma * sensitivity;
  } else {
    plan.per_user_std =
        spec.sigma * sensitivity /
        std::sqrt(spec.honest_fraction * static_cast<double>(num_users));
  }
  return plan;
}

ModelStack perturb(const ModelStack& model, double std_dev, Rng& rng) {
  if (std_dev < 0) throw ValidationError("noise std must be >= 0");
  ModelStack noisy = model;
  if (std_dev == 0) return noisy;
  for (double& w : noisy.weights()) w += std_dev * rng.gaussian();
  return noisy;
}

nlohmann::json accounting_report(const NoisePlan& plan, double delta,
                                 int upsilon) {
  nlohmann::json report;
  report["mode"] =
      plan.mode == NoiseMode::kCentral ? "central" : "distributed";
  report["sigma"] = plan.sigma;
  report["delta"] = delta;
  report["t"] = plan.honest_fraction;
  report["num_users"] = plan.num_users;
  report["sensitivity"] = plan.sensitivity;
  report["per_user_std"] = plan.per_user_std;
  if (plan.sigma > 0) {
    auto eps = epsilon_of_sigma(plan.sigma, delta);
    report["epsilon"] = eps.epsilon;
    report["group_epsilon"] = group_epsilon(eps.epsilon, upsilon);
    report["validity_warning"] =
        eps.validity_warning || group_epsilon(eps.epsilon, upsilon) >= 1.0;
  } else {
    // sigma = 0 is the noiseless debugging path; there is no finite epsilon.
    report["epsilon"] = "infinity";
    report["group_epsilon"] = "infinity";
    report["validity_warning"] = true;
  }
  report["upsilon"] = upsilon;
  return report;
}

}  // namespace dphelmet::dp
