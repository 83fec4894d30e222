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

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dphelmet/data.hpp"
#include "dphelmet/learnability.hpp"
#include "dphelmet/serialize.hpp"
#include "dphelmet/sim.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Exit codes: 0 ok, 2 usage, 3 validation, 4 protocol abort, 5 IO.
constexpr int kExitUsage = 2;
constexpr int kExitValidation = 3;
constexpr int kExitProtocol = 4;
constexpr int kExitIo = 5;

// JSON config files; a manifest's nested "config" object is accepted too,
// so any run can be replayed with `--config manifest.json`.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool,
                        std::string) const override {
    return "{}\n";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json parsed = json::parse(input);
    if (parsed.contains("config") && parsed["config"].is_object()) {
      parsed = parsed["config"];
    }
    std::vector<CLI::ConfigItem> items;
    for (const auto& [key, value] : parsed.items()) {
      CLI::ConfigItem item;
      item.name = key;
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar(v));
      } else {
        item.inputs.push_back(scalar(value));
      }
      items.push_back(std::move(item));
    }
    return items;
  }

 private:
  static std::string scalar(const json& v) {
    return v.is_string() ? v.get<std::string>() : v.dump();
  }
};

std::string timestamp_utc() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

void write_json_file(const json& payload, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw dphelmet::IoError("cannot write '" + path.string() + "'");
  out << payload.dump(2) << '\n';
  if (!out) throw dphelmet::IoError("write failed for '" + path.string() + "'");
}

void write_manifest(const fs::path& out_dir, const std::string& command,
                    const json& config, uint64_t seed,
                    const std::vector<std::string>& artifacts,
                    const std::string& started) {
  json manifest;
  manifest["command"] = command;
  manifest["tool_version"] = std::string(dphelmet::kVersion);
  manifest["master_seed"] = seed;
  manifest["config"] = config;
  manifest["artifacts"] = artifacts;
  manifest["started"] = started;
  manifest["finished"] = timestamp_utc();
  write_json_file(manifest, out_dir / "manifest.json");
}

fs::path ensure_out_dir(const std::string& out) {
  fs::path dir(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw dphelmet::IoError("cannot create output directory '" + out +
                                  "': " + ec.message());
  return dir;
}

// DPHELMET_SEED beats --seed when present.
uint64_t effective_seed(uint64_t flag_seed) {
  if (const char* env = std::getenv("DPHELMET_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw dphelmet::ValidationError(
          "DPHELMET_SEED must be an unsigned integer");
    }
  }
  return flag_seed;
}

dphelmet::Dataset load_dataset(const std::string& path) {
  if (path.size() >= 5 && path.substr(path.size() - 5) == ".dphm") {
    return dphelmet::data::load_binary_dataset(path);
  }
  return dphelmet::data::load_csv(path, /*has_header=*/false);
}

// ---------------------------------------------------------------------------
// Shared flag groups
// ---------------------------------------------------------------------------

struct TrainFlags {
  double lambda = 2.0;
  double radius = 0.07;
  double clip = 1.0;
  double huber_h = 0.1;
  int batch = 20;
  std::string loss = "huber_hinge";
  int iters = 0;         // total SGD steps; 0 = use epochs
  int iters_epochs = 500;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--lambda", lambda, "Regularization weight")
        ->capture_default_str();
    cmd->add_option("--radius", radius, "Model norm bound R")
        ->capture_default_str();
    cmd->add_option("--clip", clip, "Input clipping bound c")
        ->capture_default_str();
    cmd->add_option("--huber-h", huber_h, "Huber smoothness h")
        ->capture_default_str();
    cmd->add_option("--batch", batch, "Mini-batch size")
        ->capture_default_str();
    cmd->add_option("--loss", loss, "Loss: huber_hinge or logistic")
        ->capture_default_str();
    cmd->add_option("--iters", iters,
                    "Total SGD steps M (overrides --iters-epochs)");
    cmd->add_option("--iters-epochs", iters_epochs,
                    "Training epochs; steps = epochs * ceil(N/batch)")
        ->capture_default_str();
  }

  dphelmet::Hyperparams hyperparams(size_t points_per_user) const {
    dphelmet::Hyperparams hp;
    hp.lambda = lambda;
    hp.radius = radius;
    hp.clip = clip;
    hp.huber_h = huber_h;
    hp.batch_size = batch;
    hp.loss = dphelmet::loss_from_name(loss);
    if (iters > 0) {
      hp.iterations = iters;
    } else {
      size_t steps_per_epoch =
          (points_per_user + static_cast<size_t>(batch) - 1) /
          static_cast<size_t>(batch);
      hp.iterations = iters_epochs * static_cast<int>(steps_per_epoch);
    }
    return hp;
  }

  json resolved() const {
    return json{{"lambda", lambda},     {"radius", radius},
                {"clip", clip},         {"huber-h", huber_h},
                {"batch", batch},       {"loss", loss},
                {"iters", iters},       {"iters-epochs", iters_epochs}};
  }
};

int default_jobs() {
  unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

// ---------------------------------------------------------------------------
// gen-data
// ---------------------------------------------------------------------------

struct GenDataCmd {
  int classes = 10;
  int dim = 32;
  int per_class = 500;
  double spread = 1.0;
  double separation = 4.0;
  uint64_t seed = 0;
  std::string out = "out";
  std::string name = "data";

  int run() {
    uint64_t master = effective_seed(seed);
    auto out_dir = ensure_out_dir(out);
    std::string started = timestamp_utc();
    dphelmet::Rng rng = dphelmet::spawn_rng(master, "gen-data");
    auto dataset = dphelmet::data::synth_blobs(rng, classes, dim, per_class,
                                               spread, separation);
    fs::path csv = out_dir / (name + ".csv");
    dphelmet::data::write_csv(dataset, csv.string());
    json config{{"classes", classes},       {"dim", dim},
                {"per-class", per_class},   {"spread", spread},
                {"separation", separation}, {"seed", master},
                {"out", out},               {"name", name}};
    write_manifest(out_dir, "gen-data", config, master, {csv.string()},
                   started);
    std::cout << "wrote " << dataset.size() << " points to " << csv.string()
              << "\n";
    return 0;
  }
};

// ---------------------------------------------------------------------------
// train-distributed
// ---------------------------------------------------------------------------

struct TrainDistributedCmd {
  std::string data_path;
  int users = 10;
  int points_per_user = 0;  // 0 = even split
  double sigma = 1.0;
  double delta = 1e-5;
  double honest_frac = 0.5;
  int upsilon = 1;
  bool user_level = false;
  double eval_frac = 0.2;
  std::vector<uint32_t> dropout_ids;
  std::vector<uint32_t> colluding_ids;
  int scale_bits = 24;
  uint64_t seed = 0;
  int jobs = default_jobs();
  std::string out = "out";
  TrainFlags train;

  json resolved(uint64_t master) const {
    json j = train.resolved();
    j["data"] = data_path;
    j["users"] = users;
    j["points-per-user"] = points_per_user;
    j["sigma"] = sigma;
    j["delta"] = delta;
    j["honest-frac"] = honest_frac;
    j["upsilon"] = upsilon;
    j["user-level"] = user_level;
    j["eval-frac"] = eval_frac;
    j["dropout"] = dropout_ids;
    j["collude"] = colluding_ids;
    j["scale-bits"] = scale_bits;
    j["seed"] = master;
    j["out"] = out;
    return j;
  }

  int run() {
    uint64_t master = effective_seed(seed);
    auto out_dir = ensure_out_dir(out);
    std::string started = timestamp_utc();
    auto dataset = load_dataset(data_path);

    dphelmet::sim::SimConfig config;
    config.num_users = users;
    if (points_per_user > 0) config.points_per_user = points_per_user;
    config.eval_fraction = eval_frac;
    config.dropout_ids = dropout_ids;
    config.colluding_ids = colluding_ids;
    config.master_seed = master;
    size_t per_user =
        points_per_user > 0
            ? static_cast<size_t>(points_per_user)
            : dataset.size() / static_cast<size_t>(std::max(users, 1));
    config.train = train.hyperparams(per_user);
    config.privacy.sigma = sigma;
    config.privacy.delta = delta;
    config.privacy.honest_fraction = honest_frac;
    config.privacy.group_size = upsilon;
    config.mode = user_level
                      ? dphelmet::protocol::SensitivityMode::kUserLevel
                      : dphelmet::protocol::SensitivityMode::kPointwise;
    config.scale_bits = scale_bits;
    config.jobs = jobs;

    auto report = dphelmet::sim::run(config, dataset);
    std::vector<std::string> artifacts;

    fs::path report_path = out_dir / "report.json";
    write_json_file(report.to_json(), report_path);
    artifacts.push_back(report_path.string());

    if (!report.aborted) {
      fs::path model_prefix = out_dir / "model";
      dphelmet::save_model(*report.released, config.train, master,
                           model_prefix.string());
      artifacts.push_back(model_prefix.string() + ".dphm");
      artifacts.push_back(model_prefix.string() + ".json");
    }
    write_manifest(out_dir, "train-distributed", resolved(master), master,
                   artifacts, started);

    if (report.aborted) {
      std::cerr << "protocol aborted: " << report.abort_reason << "\n";
      return kExitProtocol;
    }
    std::cout << "released model: accuracy=" << report.accuracy;
    if (sigma > 0) {
      std::cout << " epsilon=" << report.accounting.epsilon;
    } else {
      std::cout << " epsilon=infinity";
    }
    std::cout << " (delta=" << delta << ")\n";
    return 0;
  }
};

// ---------------------------------------------------------------------------
// account
// ---------------------------------------------------------------------------

struct AccountCmd {
  double sigma = 0.0;
  double epsilon = 0.0;
  double delta = 1e-5;
  double honest_frac = 0.5;
  int users = 1;
  int upsilon = 1;
  double sensitivity = 0.0;
  double clip = 0.0;
  double lambda = 0.0;
  double radius = 0.0;
  int n = 0;
  std::string out;

  int run() {
    if (sigma <= 0 && epsilon <= 0) {
      throw dphelmet::ValidationError("give either --sigma or --epsilon");
    }
    double sigma_value = sigma;
    if (sigma_value <= 0) {
      sigma_value = dphelmet::dp::sigma_of_epsilon(epsilon, delta);
    }
    // Sensitivity: direct flag, else derived from (c, lambda, radius, n).
    double s = sensitivity;
    if (s <= 0 && clip > 0 && lambda > 0 && radius > 0 && n > 0) {
      dphelmet::Hyperparams hp;
      hp.clip = clip;
      hp.lambda = lambda;
      hp.radius = radius;
      s = dphelmet::svm::sensitivity(hp, static_cast<size_t>(n));
    }
    if (s <= 0) s = 1.0;  // report per unit sensitivity

    dphelmet::PrivacySpec spec;
    spec.sigma = sigma_value;
    spec.delta = delta;
    spec.honest_fraction = honest_frac;
    spec.group_size = upsilon;

    auto mode = users >= 2 ? dphelmet::dp::NoiseMode::kDistributed
                           : dphelmet::dp::NoiseMode::kCentral;
    auto plan = dphelmet::dp::noise_plan(mode, s, spec, users);
    json report = dphelmet::dp::accounting_report(plan, delta, upsilon);
    if (radius > 0) {
      auto released = dphelmet::protocol::released_epsilon(spec, s, radius,
                                                           upsilon);
      report["user_level_epsilon"] = *released.user_level_epsilon;
      report["chosen_epsilon"] = *released.chosen_epsilon;
      report["chosen_rule"] = released.chosen_rule;
    }
    std::cout << report.dump(2) << "\n";
    if (!out.empty()) {
      auto out_dir = ensure_out_dir(out);
      std::string started = timestamp_utc();
      write_json_file(report, out_dir / "accounting.json");
      json config{{"sigma", sigma},     {"epsilon", epsilon},
                  {"delta", delta},     {"honest-frac", honest_frac},
                  {"users", users},     {"upsilon", upsilon},
                  {"sensitivity", s},   {"radius", radius},
                  {"out", out}};
      write_manifest(out_dir, "account", config, 0,
                     {(out_dir / "accounting.json").string()}, started);
    }
    return 0;
  }
};

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

struct SweepCmd {
  std::string data_path;
  int users = 10;
  int points_per_user = 0;
  std::vector<double> sigmas;
  std::vector<double> lambdas;
  std::vector<double> radii;
  int repeats = 5;
  int folds = 6;
  double delta = 1e-5;
  double honest_frac = 0.5;
  uint64_t seed = 0;
  int jobs = default_jobs();
  std::string out = "out";
  TrainFlags train;

  int run() {
    uint64_t master = effective_seed(seed);
    auto out_dir = ensure_out_dir(out);
    std::string started = timestamp_utc();
    auto dataset = load_dataset(data_path);

    dphelmet::sim::SweepConfig config;
    config.base.num_users = users;
    if (points_per_user > 0) config.base.points_per_user = points_per_user;
    config.base.master_seed = master;
    size_t per_user =
        points_per_user > 0
            ? static_cast<size_t>(points_per_user)
            : dataset.size() / static_cast<size_t>(std::max(users, 1));
    config.base.train = train.hyperparams(per_user);
    config.base.privacy.delta = delta;
    config.base.privacy.honest_fraction = honest_frac;
    config.base.jobs = jobs;
    config.sigmas = sigmas;
    config.lambdas = lambdas;
    config.radii = radii;
    config.repeats = repeats;
    config.folds = folds;

    auto rows = dphelmet::sim::sweep(config, dataset);
    fs::path csv = out_dir / "sweep.csv";
    dphelmet::sim::write_sweep_csv(rows, csv.string());
    fs::path manifest_json = out_dir / "sweep.json";
    write_json_file(dphelmet::sim::sweep_manifest(config), manifest_json);

    json flags = train.resolved();
    flags["data"] = data_path;
    flags["users"] = users;
    flags["points-per-user"] = points_per_user;
    flags["sigmas"] = sigmas;
    flags["lambdas"] = lambdas;
    flags["radii"] = radii;
    flags["repeats"] = repeats;
    flags["folds"] = folds;
    flags["delta"] = delta;
    flags["honest-frac"] = honest_frac;
    flags["seed"] = master;
    flags["out"] = out;
    write_manifest(out_dir, "sweep", flags, master,
                   {csv.string(), manifest_json.string()}, started);
    std::cout << "wrote " << rows.size() << " sweep rows to " << csv.string()
              << "\n";
    return 0;
  }
};

// ---------------------------------------------------------------------------
// stability
// ---------------------------------------------------------------------------

struct StabilityCmd {
  std::string data_path;
  int users = 10;
  int probes = 200;
  int probe_set = 1000;
  uint64_t seed = 0;
  int jobs = default_jobs();
  std::string out = "out";
  TrainFlags train;

  int run() {
    uint64_t master = effective_seed(seed);
    auto out_dir = ensure_out_dir(out);
    std::string started = timestamp_utc();
    auto dataset = load_dataset(data_path);
    auto hp = train.hyperparams(dataset.size() /
                                static_cast<size_t>(std::max(users, 1)));
    dphelmet::Rng rng = dphelmet::spawn_rng(master, "stability");
    auto report = dphelmet::learnability::stability_probe(
        dataset, hp, users, probes, rng, probe_set, jobs);
    fs::path path = out_dir / "stability.json";
    write_json_file(report.to_json(), path);

    json flags = train.resolved();
    flags["data"] = data_path;
    flags["users"] = users;
    flags["probes"] = probes;
    flags["probe-set"] = probe_set;
    flags["seed"] = master;
    flags["out"] = out;
    write_manifest(out_dir, "stability", flags, master, {path.string()},
                   started);
    std::cout << "bound=" << report.theoretical_bound
              << " observed=" << report.observed_max_gap
              << " violations=" << report.violations << "\n";
    return 0;
  }
};

// ---------------------------------------------------------------------------
// convergence
// ---------------------------------------------------------------------------

struct ConvergenceCmd {
  std::string data_path;
  int users = 4;
  std::vector<int> m_grid = {32, 64, 128, 256, 512, 1024, 2048, 4096};
  int seeds = 5;
  uint64_t seed = 0;
  int jobs = default_jobs();
  std::string out = "out";
  TrainFlags train;

  int run() {
    uint64_t master = effective_seed(seed);
    auto out_dir = ensure_out_dir(out);
    std::string started = timestamp_utc();
    auto dataset = load_dataset(data_path);
    auto hp = train.hyperparams(dataset.size() /
                                static_cast<size_t>(std::max(users, 1)));
    dphelmet::Rng rng = dphelmet::spawn_rng(master, "convergence");
    auto report = dphelmet::learnability::convergence_probe(
        dataset, hp, users, m_grid, rng, seeds, 4, jobs);
    fs::path json_path = out_dir / "convergence.json";
    fs::path csv_path = out_dir / "convergence.csv";
    write_json_file(report.to_json(), json_path);
    dphelmet::learnability::write_convergence_csv(report, csv_path.string());

    json flags = train.resolved();
    flags["data"] = data_path;
    flags["users"] = users;
    flags["m-grid"] = m_grid;
    flags["seeds"] = seeds;
    flags["seed"] = master;
    flags["out"] = out;
    write_manifest(out_dir, "convergence", flags, master,
                   {json_path.string(), csv_path.string()}, started);
    std::cout << "slope=" << report.fitted_slope << " gaps=[";
    for (size_t i = 0; i < report.gaps.size(); ++i) {
      std::cout << (i ? "," : "") << report.gaps[i];
    }
    std::cout << "]\n";
    return 0;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Secure distributed training of sensitivity-bounded convex "
               "models with single-shot masked aggregation"};
  app.require_subcommand(1);

  auto json_config = std::make_shared<JsonConfig>();

  GenDataCmd gen_data;
  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset");
  gen->config_formatter(json_config);
  gen->set_config("--config", "", "JSON config file (flags win)");
  gen->add_option("--classes", gen_data.classes, "Number of classes")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  gen->add_option("--dim", gen_data.dim, "Feature dimension p")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  gen->add_option("--per-class", gen_data.per_class, "Points per class")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  gen->add_option("--spread", gen_data.spread, "Per-class stddev")
      ->capture_default_str();
  gen->add_option("--separation", gen_data.separation,
                  "Minimum distance between class centers")
      ->capture_default_str();
  gen->add_option("--seed", gen_data.seed, "Master seed")
      ->capture_default_str();
  gen->add_option("--out", gen_data.out, "Output directory")
      ->capture_default_str();
  gen->add_option("--name", gen_data.name, "Dataset file stem")
      ->capture_default_str();

  TrainDistributedCmd train_cmd;
  auto* tr = app.add_subcommand("train-distributed",
                                "Run the full protocol once");
  tr->config_formatter(json_config);
  tr->set_config("--config", "", "JSON config file (flags win)");
  tr->add_option("--data", train_cmd.data_path, "Dataset (.csv or .dphm)")
      ->required();
  tr->add_option("--users", train_cmd.users, "Number of users")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  tr->add_option("--points-per-user", train_cmd.points_per_user,
                 "Points per user (0 = even split)")
      ->capture_default_str();
  tr->add_option("--sigma", train_cmd.sigma, "Noise multiplier (0 = none)")
      ->capture_default_str();
  tr->add_option("--delta", train_cmd.delta, "DP delta")
      ->capture_default_str();
  tr->add_option("--honest-frac", train_cmd.honest_frac,
                 "Assumed honest fraction t")
      ->capture_default_str();
  tr->add_option("--upsilon", train_cmd.upsilon, "Group size for accounting")
      ->capture_default_str();
  tr->add_flag("--user-level", train_cmd.user_level,
               "Calibrate noise to the 2R user-level sensitivity");
  tr->add_option("--eval-frac", train_cmd.eval_frac, "Held-out fraction")
      ->capture_default_str();
  tr->add_option("--dropout", train_cmd.dropout_ids,
                 "Client ids that never submit");
  tr->add_option("--collude", train_cmd.colluding_ids,
                 "Client ids that omit noise");
  tr->add_option("--scale-bits", train_cmd.scale_bits,
                 "Fixed-point fractional bits")
      ->capture_default_str();
  tr->add_option("--seed", train_cmd.seed, "Master seed")
      ->capture_default_str();
  tr->add_option("--jobs", train_cmd.jobs, "Worker threads")
      ->capture_default_str();
  tr->add_option("--out", train_cmd.out, "Output directory")
      ->capture_default_str();
  train_cmd.train.add_to(tr);

  AccountCmd account;
  auto* acct = app.add_subcommand("account", "Closed-form accounting report");
  acct->config_formatter(json_config);
  acct->set_config("--config", "", "JSON config file (flags win)");
  acct->add_option("--sigma", account.sigma, "Noise multiplier");
  acct->add_option("--epsilon", account.epsilon,
                   "Target epsilon in (0,1); derives sigma");
  acct->add_option("--delta", account.delta, "DP delta")
      ->capture_default_str();
  acct->add_option("--honest-frac", account.honest_frac, "Honest fraction t")
      ->capture_default_str();
  acct->add_option("--users", account.users, "Number of users")
      ->capture_default_str();
  acct->add_option("--upsilon", account.upsilon, "Group size")
      ->capture_default_str();
  acct->add_option("--sensitivity", account.sensitivity,
                   "Sensitivity s (direct)");
  acct->add_option("--clip", account.clip, "Input clipping bound c");
  acct->add_option("--lambda", account.lambda, "Regularization weight");
  acct->add_option("--radius", account.radius, "Model norm bound R");
  acct->add_option("--n", account.n, "Points per user N");
  acct->add_option("--out", account.out, "Optional output directory");

  SweepCmd sweep_cmd;
  auto* sw = app.add_subcommand("sweep", "Privacy-utility sweep over sigma");
  sw->config_formatter(json_config);
  sw->set_config("--config", "", "JSON config file (flags win)");
  sw->add_option("--data", sweep_cmd.data_path, "Dataset (.csv or .dphm)")
      ->required();
  sw->add_option("--users", sweep_cmd.users, "Number of users")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sw->add_option("--points-per-user", sweep_cmd.points_per_user,
                 "Points per user (0 = even split)")
      ->capture_default_str();
  sw->add_option("--sigmas", sweep_cmd.sigmas, "Sigma grid")->required();
  sw->add_option("--lambdas", sweep_cmd.lambdas,
                 "Candidate regularization weights");
  sw->add_option("--radii", sweep_cmd.radii, "Candidate model norm bounds");
  sw->add_option("--repeats", sweep_cmd.repeats, "CV repeats")
      ->capture_default_str();
  sw->add_option("--folds", sweep_cmd.folds, "CV folds")
      ->capture_default_str();
  sw->add_option("--delta", sweep_cmd.delta, "DP delta")
      ->capture_default_str();
  sw->add_option("--honest-frac", sweep_cmd.honest_frac, "Honest fraction t")
      ->capture_default_str();
  sw->add_option("--seed", sweep_cmd.seed, "Master seed")
      ->capture_default_str();
  sw->add_option("--jobs", sweep_cmd.jobs, "Worker threads")
      ->capture_default_str();
  sw->add_option("--out", sweep_cmd.out, "Output directory")
      ->capture_default_str();
  sweep_cmd.train.add_to(sw);

  StabilityCmd stability;
  auto* st = app.add_subcommand("stability", "Uniform-stability probe suite");
  st->config_formatter(json_config);
  st->set_config("--config", "", "JSON config file (flags win)");
  st->add_option("--data", stability.data_path, "Dataset (.csv or .dphm)")
      ->required();
  st->add_option("--users", stability.users, "Number of users")
      ->capture_default_str();
  st->add_option("--probes", stability.probes, "Neighbor-pair probes")
      ->capture_default_str();
  st->add_option("--probe-set", stability.probe_set,
                 "Held-out probe set size")
      ->capture_default_str();
  st->add_option("--seed", stability.seed, "Master seed")
      ->capture_default_str();
  st->add_option("--jobs", stability.jobs, "Worker threads")
      ->capture_default_str();
  st->add_option("--out", stability.out, "Output directory")
      ->capture_default_str();
  stability.train.add_to(st);

  ConvergenceCmd convergence;
  auto* cv = app.add_subcommand("convergence", "Convergence-rate probe suite");
  cv->config_formatter(json_config);
  cv->set_config("--config", "", "JSON config file (flags win)");
  cv->add_option("--data", convergence.data_path, "Dataset (.csv or .dphm)")
      ->required();
  cv->add_option("--users", convergence.users, "Number of users")
      ->capture_default_str();
  cv->add_option("--m-grid", convergence.m_grid, "Iteration grid (ascending)")
      ->capture_default_str();
  cv->add_option("--seeds", convergence.seeds, "Independent repeats")
      ->capture_default_str();
  cv->add_option("--seed", convergence.seed, "Master seed")
      ->capture_default_str();
  cv->add_option("--jobs", convergence.jobs, "Worker threads")
      ->capture_default_str();
  cv->add_option("--out", convergence.out, "Output directory")
      ->capture_default_str();
  convergence.train.add_to(cv);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : kExitUsage;
  }

  try {
    if (gen->parsed()) return gen_data.run();
    if (tr->parsed()) return train_cmd.run();
    if (acct->parsed()) return account.run();
    if (sw->parsed()) return sweep_cmd.run();
    if (st->parsed()) return stability.run();
    if (cv->parsed()) return convergence.run();
  } catch (const dphelmet::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const dphelmet::ProtocolError& e) {
    std::cerr << "protocol error: " << e.what() << "\n";
    return kExitProtocol;
  } catch (const dphelmet::ParseError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const dphelmet::ValidationError& e) {
    std::cerr << "invalid configuration: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
