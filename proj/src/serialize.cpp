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

#include "dphelmet/serialize.hpp"

#include <fstream>

#include "dphelmet/data.hpp"

namespace dphelmet {

void to_json(nlohmann::json& j, const Hyperparams& hp) {
  j = nlohmann::json{{"huber_h", hp.huber_h},
                     {"clip", hp.clip},
                     {"lambda", hp.lambda},
                     {"radius", hp.radius},
                     {"iterations", hp.iterations},
                     {"batch_size", hp.batch_size},
                     {"loss", std::string(loss_name(hp.loss))}};
}

void from_json(const nlohmann::json& j, Hyperparams& hp) {
  j.at("huber_h").get_to(hp.huber_h);
  j.at("clip").get_to(hp.clip);
  j.at("lambda").get_to(hp.lambda);
  j.at("radius").get_to(hp.radius);
  j.at("iterations").get_to(hp.iterations);
  j.at("batch_size").get_to(hp.batch_size);
  hp.loss = loss_from_name(j.at("loss").get<std::string>());
}

void to_json(nlohmann::json& j, const PrivacySpec& spec) {
  j = nlohmann::json{{"sigma", spec.sigma},
                     {"delta", spec.delta},
                     {"honest_fraction", spec.honest_fraction},
                     {"group_size", spec.group_size}};
}

void from_json(const nlohmann::json& j, PrivacySpec& spec) {
  j.at("sigma").get_to(spec.sigma);
  j.at("delta").get_to(spec.delta);
  j.at("honest_fraction").get_to(spec.honest_fraction);
  j.at("group_size").get_to(spec.group_size);
}

void save_model(const ModelStack& model, const Hyperparams& hp,
                uint64_t seed, const std::string& path_prefix) {
  data::Matrix m;
  m.rows = static_cast<uint32_t>(model.num_classes());
  m.cols = static_cast<uint32_t>(model.cols());
  m.values.reserve(model.weights().size());
  for (double w : model.weights()) m.values.push_back(static_cast<float>(w));
  data::save_matrix(m, path_prefix + ".dphm");

  nlohmann::json sidecar;
  sidecar["classes"] = model.classes();
  sidecar["hyperparams"] = hp;
  sidecar["seed"] = seed;
  std::ofstream out(path_prefix + ".json");
  if (!out) throw IoError("cannot write '" + path_prefix + ".json'");
  out << sidecar.dump(2) << '\n';
}

ModelStack load_model(const std::string& path_prefix) {
  data::Matrix m = data::load_matrix(path_prefix + ".dphm");
  std::ifstream in(path_prefix + ".json");
  if (!in) throw IoError("cannot open '" + path_prefix + ".json'");
  nlohmann::json sidecar = nlohmann::json::parse(in);
  auto classes = sidecar.at("classes").get<std::vector<int32_t>>();
  if (classes.size() != m.rows) {
    throw ParseError("model sidecar classes do not match the matrix");
  }
  std::vector<double> weights(m.values.begin(), m.values.end());
  return ModelStack(std::move(classes), static_cast<int>(m.cols),
                    std::move(weights));
}

}  // namespace dphelmet
