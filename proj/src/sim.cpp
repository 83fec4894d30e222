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

#include "dphelmet/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <set>

#include "dphelmet/data.hpp"
#include "dphelmet/serialize.hpp"

namespace dphelmet::sim {
namespace {

std::string mode_name(protocol::SensitivityMode mode) {
  return mode == protocol::SensitivityMode::kPointwise ? "pointwise"
                                                       : "user_level";
}

protocol::SensitivityMode mode_from_name(const std::string& name) {
  if (name == "pointwise") return protocol::SensitivityMode::kPointwise;
  if (name == "user_level") return protocol::SensitivityMode::kUserLevel;
  throw ValidationError("unknown sensitivity mode '" + name + "'");
}

// Derived seed for one sweep cell, per the reproducible-sweeps scheme.
uint64_t cell_seed(uint64_t master, size_t sigma_index, size_t repeat,
                   size_t fold) {
  std::string tag = "sweep/" + std::to_string(sigma_index) + "/" +
                    std::to_string(repeat) + "/" + std::to_string(fold);
  return fnv1a64(tag) ^ master;
}

}  // namespace

void SimConfig::validate() const {
  if (num_users < 1) throw ValidationError("num_users must be >= 1");
  if (eval_fraction < 0 || eval_fraction >= 1) {
    throw ValidationError("eval_fraction must be in [0,1)");
  }
  train.validate();
  privacy.validate();
  double max_colluders =
      (1.0 - privacy.honest_fraction) * static_cast<double>(num_users);
  if (static_cast<double>(colluding_ids.size()) > max_colluders + 1e-12) {
    throw ValidationError(
        "colluding set of size " + std::to_string(colluding_ids.size()) +
        " exceeds (1-t)*|U| = " + std::to_string(max_colluders));
  }
  for (uint32_t id : dropout_ids) {
    if (id >= static_cast<uint32_t>(num_users)) {
      throw ValidationError("dropout id " + std::to_string(id) +
                            " out of range");
    }
  }
  for (uint32_t id : colluding_ids) {
    if (id >= static_cast<uint32_t>(num_users)) {
      throw ValidationError("colluding id " + std::to_string(id) +
                            " out of range");
    }
  }
}

void to_json(nlohmann::json& j, const SimConfig& config) {
  j = nlohmann::json{{"num_users", config.num_users},
                     {"eval_fraction", config.eval_fraction},
                     {"dropout_ids", config.dropout_ids},
                     {"colluding_ids", config.colluding_ids},
                     {"master_seed", config.master_seed},
                     {"hyperparams", config.train},
                     {"privacy", config.privacy},
                     {"sensitivity_mode", mode_name(config.mode)},
                     {"scale_bits", config.scale_bits}};
  if (config.points_per_user) {
    j["points_per_user"] = *config.points_per_user;
  }
}

void from_json(const nlohmann::json& j, SimConfig& config) {
  j.at("num_users").get_to(config.num_users);
  j.at("eval_fraction").get_to(config.eval_fraction);
  config.dropout_ids = j.value("dropout_ids", std::vector<uint32_t>{});
  config.colluding_ids = j.value("colluding_ids", std::vector<uint32_t>{});
  j.at("master_seed").get_to(config.master_seed);
  j.at("hyperparams").get_to(config.train);
  j.at("privacy").get_to(config.privacy);
  config.mode = mode_from_name(
      j.value("sensitivity_mode", std::string("pointwise")));
  config.scale_bits = j.value("scale_bits", 24);
  if (j.contains("points_per_user")) {
    config.points_per_user = j.at("points_per_user").get<int>();
  } else {
    config.points_per_user.reset();
  }
}

nlohmann::json RunReport::to_json() const {
  nlohmann::json j;
  j["aborted"] = aborted;
  if (aborted) j["abort_reason"] = abort_reason;
  j["sensitivity"] = sensitivity;
  j["per_user_noise_std"] = per_user_noise_std;
  j["accuracy"] = accuracy;
  if (!individual_accuracies.empty()) {
    j["individual_accuracies"] = individual_accuracies;
  }
  nlohmann::json acct;
  acct["delta"] = accounting.delta;
  if (std::isfinite(accounting.epsilon)) {
    acct["epsilon"] = accounting.epsilon;
  } else {
    acct["epsilon"] = "infinity";
  }
  acct["validity_warning"] = accounting.validity_warning;
  if (accounting.group_epsilon) acct["group_epsilon"] = *accounting.group_epsilon;
  if (accounting.user_level_epsilon) {
    acct["user_level_epsilon"] = *accounting.user_level_epsilon;
  }
  if (accounting.chosen_epsilon) {
    acct["chosen_epsilon"] = *accounting.chosen_epsilon;
    acct["chosen_rule"] = accounting.chosen_rule;
  }
  j["accounting"] = acct;
  j["transcript_digest"] = transcript_digest;
  j["transcript_messages"] = transcript_messages;
  j["transcript_aggregations"] = transcript_aggregations;
  j["config"] = config_echo;
  return j;
}

std::pair<Dataset, std::optional<Dataset>> stratified_split(
    const Dataset& dataset, double eval_fraction, Rng& rng) {
  if (eval_fraction < 0 || eval_fraction >= 1) {
    throw ValidationError("eval_fraction must be in [0,1)");
  }
  std::map<int32_t, std::vector<size_t>> by_class;
  for (size_t i = 0; i < dataset.size(); ++i) {
    by_class[dataset.points()[i].label].push_back(i);
  }
  std::vector<DataPoint> train_pts;
  std::vector<DataPoint> eval_pts;
  for (auto& [label, indices] : by_class) {
    rng.shuffle(indices);
    size_t eval_count = static_cast<size_t>(
        std::floor(eval_fraction * static_cast<double>(indices.size())));
    for (size_t i = 0; i < indices.size(); ++i) {
      const auto& pt = dataset.points()[indices[i]];
      if (i < eval_count) {
        eval_pts.push_back(pt);
      } else {
        train_pts.push_back(pt);
      }
    }
  }
  if (train_pts.empty()) throw ValidationError("split left no training data");
  Dataset train(std::move(train_pts), dataset.classes());
  if (eval_pts.empty()) {
    return {std::move(train), std::nullopt};
  }
  return {std::move(train), std::optional<Dataset>(Dataset(
                                std::move(eval_pts), dataset.classes()))};
}

RunReport run(const SimConfig& config, const Dataset& dataset) {
  config.validate();
  Rng rng = spawn_rng(config.master_seed, "sim");
  if (config.eval_fraction == 0) {
    return run_split(config, dataset, std::nullopt);
  }
  Rng split_rng = rng.substream("eval-split");
  auto [train_pool, eval_set] =
      stratified_split(dataset, config.eval_fraction, split_rng);
  return run_split(config, train_pool, eval_set);
}

RunReport run_split(const SimConfig& config, const Dataset& train_pool,
                    const std::optional<Dataset>& eval_set) {
  config.validate();
  bool has_eval = eval_set.has_value();

  Rng rng = spawn_rng(config.master_seed, "sim");
  data::PartitionPlan plan;
  plan.num_users = config.num_users;
  plan.points_per_user = config.points_per_user;
  Rng partition_rng = rng.substream("partition");
  auto shards = data::partition(train_pool, plan, partition_rng);

  size_t min_shard = shards.front().size();
  for (const auto& s : shards) min_shard = std::min(min_shard, s.size());

  double sensitivity =
      config.mode == protocol::SensitivityMode::kPointwise
          ? svm::sensitivity(config.train, min_shard)
          : dp::user_level_sensitivity(config.train.radius);

  protocol::ProtocolConfig proto;
  proto.num_users = config.num_users;
  proto.privacy = config.privacy;
  proto.mode = config.mode;
  proto.round_tag = config.master_seed;
  double noise_std = proto.per_user_noise_std(sensitivity);
  proto.codec = protocol::make_codec(config.train.radius, noise_std,
                                     config.num_users, config.scale_bits);

  std::vector<uint32_t> all_ids(static_cast<size_t>(config.num_users));
  for (size_t i = 0; i < all_ids.size(); ++i) {
    all_ids[i] = static_cast<uint32_t>(i);
  }
  Rng setup_rng = rng.substream("pairwise");
  auto seeds = secagg::PairwiseSeedDirectory::trusted_setup(all_ids, setup_rng);

  std::set<uint32_t> dropouts(config.dropout_ids.begin(),
                              config.dropout_ids.end());
  std::set<uint32_t> colluders(config.colluding_ids.begin(),
                               config.colluding_ids.end());

  RunReport report;
  report.sensitivity = sensitivity;
  report.per_user_noise_std = noise_std;
  to_json(report.config_echo, config);

  // All clients run their round; dropouts compute but never submit.
  std::vector<std::optional<secagg::MaskedShare>> submitted(all_ids.size());
  std::vector<double> individual_acc(all_ids.size(), -1.0);
  std::string client_error;
  std::mutex error_mutex;
  parallel_for(all_ids.size(), config.jobs, [&](size_t u) {
    uint32_t id = all_ids[u];
    Rng user_rng = rng.substream("user/" + std::to_string(id));
    protocol::ClientState state(id, shards[u], config.train);
    try {
      auto share = protocol::client_round(state, seeds, all_ids, proto,
                                          user_rng, !colluders.count(id));
      if (!dropouts.count(id)) submitted[u] = std::move(share);
      if (config.record_individual_accuracy && has_eval) {
        // Replay the client's training stream to score its local model.
        Rng replay = rng.substream("user/" + std::to_string(id))
                         .substream("sgd");
        ModelStack local = svm::train(shards[u], config.train, replay);
        individual_acc[u] = svm::accuracy(local, *eval_set, config.train.clip);
      }
    } catch (const Error& e) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (client_error.empty()) client_error = e.what();
    }
  });
  if (!client_error.empty()) throw ProtocolError(client_error);

  secagg::Transcript transcript;
  std::vector<secagg::MaskedShare> shares;
  for (const auto& s : submitted) {
    if (s) {
      transcript.append(*s);
      shares.push_back(*s);
    }
  }

  if (config.record_individual_accuracy && has_eval) {
    report.individual_accuracies.assign(individual_acc.begin(),
                                        individual_acc.end());
  }

  try {
    auto released = protocol::server_round(shares, all_ids, proto.codec,
                                           train_pool.classes(),
                                           train_pool.dim() + 1);
    transcript.note_aggregation(proto.round_tag, shares.size());
    report.released = std::move(released);
  } catch (const ProtocolError& e) {
    report.aborted = true;
    report.abort_reason = e.what();
    report.transcript_digest = transcript.digest();
    report.transcript_messages = transcript.num_messages();
    report.transcript_aggregations = transcript.num_aggregations();
    return report;
  }

  report.transcript_digest = transcript.digest();
  report.transcript_messages = transcript.num_messages();
  report.transcript_aggregations = transcript.num_aggregations();
  report.accounting = protocol::released_epsilon(
      config.privacy, sensitivity, config.train.radius,
      config.privacy.group_size);
  if (has_eval) {
    report.accuracy =
        svm::accuracy(*report.released, *eval_set, config.train.clip);
  }
  return report;
}

std::vector<SweepRow> sweep(const SweepConfig& config, const Dataset& dataset) {
  if (config.sigmas.empty()) throw ValidationError("sweep needs a sigma grid");
  if (config.repeats < 1 || config.folds < 2) {
    throw ValidationError("sweep needs repeats >= 1 and folds >= 2");
  }
  std::vector<double> lambdas =
      config.lambdas.empty() ? std::vector<double>{config.base.train.lambda}
                             : config.lambdas;
  std::vector<double> radii =
      config.radii.empty() ? std::vector<double>{config.base.train.radius}
                           : config.radii;

  // Fold assignment per repeat: stratified, seed-derived, shared by all
  // candidate hyperparameters so the comparison is paired.
  std::map<int32_t, std::vector<size_t>> by_class;
  for (size_t i = 0; i < dataset.size(); ++i) {
    by_class[dataset.points()[i].label].push_back(i);
  }

  std::vector<SweepRow> rows;
  for (size_t si = 0; si < config.sigmas.size(); ++si) {
    double sigma = config.sigmas[si];
    SweepRow best;
    bool have_best = false;
    for (double lambda : lambdas) {
      for (double radius : radii) {
        std::vector<double> accs;
        for (int repeat = 0; repeat < config.repeats; ++repeat) {
          // One shuffle per (repeat); folds slice it round-robin per class.
          Rng fold_rng = spawn_rng(config.base.master_seed,
                                   "folds/" + std::to_string(repeat));
          std::vector<int> fold_of(dataset.size(), 0);
          for (auto& [label, indices] : by_class) {
            auto shuffled = indices;
            fold_rng.shuffle(shuffled);
            for (size_t i = 0; i < shuffled.size(); ++i) {
              fold_of[shuffled[i]] = static_cast<int>(i % config.folds);
            }
          }
          for (int fold = 0; fold < config.folds; ++fold) {
            std::vector<DataPoint> train_pts, eval_pts;
            for (size_t i = 0; i < dataset.size(); ++i) {
              if (fold_of[i] == fold) {
                eval_pts.push_back(dataset.points()[i]);
              } else {
                train_pts.push_back(dataset.points()[i]);
              }
            }
            SimConfig cell = config.base;
            cell.train.lambda = lambda;
            cell.train.radius = radius;
            cell.privacy.sigma = sigma;
            cell.eval_fraction = 0.0;
            cell.master_seed = cell_seed(config.base.master_seed, si,
                                         static_cast<size_t>(repeat),
                                         static_cast<size_t>(fold));
            auto report = run_split(
                cell, Dataset(std::move(train_pts), dataset.classes()),
                Dataset(std::move(eval_pts), dataset.classes()));
            if (!report.aborted) accs.push_back(report.accuracy);
          }
        }
        double mean = 0;
        for (double a : accs) mean += a;
        mean /= accs.empty() ? 1.0 : static_cast<double>(accs.size());
        double var = 0;
        for (double a : accs) var += (a - mean) * (a - mean);
        double stddev = accs.size() > 1
                            ? std::sqrt(var / (static_cast<double>(accs.size()) - 1.0))
                            : 0.0;
        if (!have_best || mean > best.acc_mean) {
          have_best = true;
          best.sigma = sigma;
          best.epsilon =
              sigma > 0 ? dp::epsilon_of_sigma(sigma, config.base.privacy.delta)
                              .epsilon
                        : std::numeric_limits<double>::infinity();
          best.num_users = config.base.num_users;
          best.points_per_user =
              config.base.points_per_user
                  ? *config.base.points_per_user
                  : static_cast<int>(dataset.size() *
                                     (1.0 - 1.0 / config.folds) /
                                     config.base.num_users);
          best.lambda = lambda;
          best.radius = radius;
          best.acc_mean = mean;
          best.acc_std = stddev;
        }
      }
    }
    rows.push_back(best);
  }
  return rows;
}

void write_sweep_csv(const std::vector<SweepRow>& rows,
                     const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "sigma,epsilon,num_users,points_per_user,lambda,radius,acc_mean,"
         "acc_std\n";
  out.precision(12);
  for (const auto& r : rows) {
    out << r.sigma << ',';
    if (std::isfinite(r.epsilon)) {
      out << r.epsilon;
    } else {
      out << "inf";
    }
    out << ',' << r.num_users << ',' << r.points_per_user << ',' << r.lambda
        << ',' << r.radius << ',' << r.acc_mean << ',' << r.acc_std << '\n';
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

nlohmann::json sweep_manifest(const SweepConfig& config) {
  nlohmann::json j;
  to_json(j["base"], config.base);
  j["sigmas"] = config.sigmas;
  j["lambdas"] = config.lambdas;
  j["radii"] = config.radii;
  j["repeats"] = config.repeats;
  j["folds"] = config.folds;
  return j;
}

}  // namespace dphelmet::sim
