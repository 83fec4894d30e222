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

#ifndef DPHELMET_SIM_HPP_
#define DPHELMET_SIM_HPP_

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dphelmet/protocol.hpp"

namespace dphelmet::sim {

struct SimConfig {
  int num_users = 10;
  std::optional<int> points_per_user;
  double eval_fraction = 0.2;  // stratified held-out share of the dataset
  std::vector<uint32_t> dropout_ids;    // clients that never submit
  std::vector<uint32_t> colluding_ids;  // noise-omitting but conformant
  uint64_t master_seed = 0;
  Hyperparams train;
  PrivacySpec privacy;
  protocol::SensitivityMode mode = protocol::SensitivityMode::kPointwise;
  int scale_bits = 24;
  int jobs = 1;
  bool record_individual_accuracy = false;

  void validate() const;
};

void to_json(nlohmann::json& j, const SimConfig& config);
void from_json(const nlohmann::json& j, SimConfig& config);

struct RunReport {
  bool aborted = false;
  std::string abort_reason;
  std::optional<ModelStack> released;
  protocol::EpsilonReport accounting;
  double sensitivity = 0.0;
  double per_user_noise_std = 0.0;
  double accuracy = -1.0;  // -1 when no evaluation data
  std::vector<double> individual_accuracies;
  std::string transcript_digest;
  size_t transcript_messages = 0;
  size_t transcript_aggregations = 0;
  nlohmann::json config_echo;

  // Everything except the released weights; stable field order, no
  // wall-clock content, so equal runs serialize to equal bytes.
  nlohmann::json to_json() const;
};

// Stratified split into (train pool, eval set); eval_fraction of each class,
// rounded down, seed-deterministic. The eval side is empty when the fraction
// rounds to zero points.
std::pair<Dataset, std::optional<Dataset>> stratified_split(
    const Dataset& dataset, double eval_fraction, Rng& rng);

// Partition -> client rounds (colluders skip noise, dropouts never submit)
// -> server round -> evaluation. Deterministic under the master seed.
RunReport run(const SimConfig& config, const Dataset& dataset);

// Same pipeline with an explicit train/eval split (used by sweep folds).
RunReport run_split(const SimConfig& config, const Dataset& train_pool,
                    const std::optional<Dataset>& eval_set);

struct SweepConfig {
  SimConfig base;
  std::vector<double> sigmas;
  std::vector<double> lambdas;  // candidates; best mean accuracy wins
  std::vector<double> radii;    // candidates; best mean accuracy wins
  int repeats = 5;
  int folds = 6;
};

struct SweepRow {
  double sigma = 0.0;
  double epsilon = 0.0;  // +inf for sigma = 0
  int num_users = 0;
  int points_per_user = 0;
  double lambda = 0.0;
  double radius = 0.0;
  double acc_mean = 0.0;
  double acc_std = 0.0;
};

// Repeated stratified cross-validation per sigma; for each sigma the best
// (lambda, radius) candidate by mean accuracy is reported.
std::vector<SweepRow> sweep(const SweepConfig& config, const Dataset& dataset);

// CSV: sigma,epsilon,num_users,points_per_user,lambda,radius,acc_mean,acc_std
void write_sweep_csv(const std::vector<SweepRow>& rows,
                     const std::string& path);

nlohmann::json sweep_manifest(const SweepConfig& config);

}  // namespace dphelmet::sim

#endif  // DPHELMET_SIM_HPP_
