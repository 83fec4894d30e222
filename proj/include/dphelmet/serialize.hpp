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

#ifndef DPHELMET_SERIALIZE_HPP_
#define DPHELMET_SERIALIZE_HPP_

#include <string>

#include <json.hpp>

#include "dphelmet/core.hpp"

namespace dphelmet {

void to_json(nlohmann::json& j, const Hyperparams& hp);
void from_json(const nlohmann::json& j, Hyperparams& hp);

void to_json(nlohmann::json& j, const PrivacySpec& spec);
void from_json(const nlohmann::json& j, PrivacySpec& spec);

// Model files: `<prefix>.dphm` holds the weight matrix (|K| rows, p+1 cols,
// float32), `<prefix>.json` carries hyperparameters, class list, and seed.
void save_model(const ModelStack& model, const Hyperparams& hp,
                uint64_t seed, const std::string& path_prefix);
ModelStack load_model(const std::string& path_prefix);

}  // namespace dphelmet

#endif  // DPHELMET_SERIALIZE_HPP_
