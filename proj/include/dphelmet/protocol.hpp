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

#ifndef DPHELMET_PROTOCOL_HPP_
#define DPHELMET_PROTOCOL_HPP_

#include <optional>
#include <string>
#include <vector>

#include "dphelmet/dp.hpp"
#include "dphelmet/secagg.hpp"
#include "dphelmet/svm.hpp"

namespace dphelmet::protocol {

// Which sensitivity calibrates the per-user noise.
enum class SensitivityMode {
  kPointwise,  // Lemma-style replacement of one data point: 2(c+RL)/(NL)
  kUserLevel,  // whole-dataset replacement of one user: 2R
};

struct ProtocolConfig {
  int num_users = 1;
  PrivacySpec privacy;
  SensitivityMode mode = SensitivityMode::kPointwise;
  secagg::FixedPointCodec codec;
  uint64_t round_tag = 0;

  // Per-user noise std sigma~ * s with sigma~ = sigma / sqrt(t * |U|).
  double per_user_noise_std(double sensitivity) const;
};

// Clamp range sized from the model radius plus a 6-sigma noise allowance,
// for payloads of magnitude (R + noise)/|U|.
secagg::FixedPointCodec make_codec(double radius, double per_user_noise_std,
                                   int num_users, int scale_bits = 24);

enum class ClientPhase { kIdle, kTrained, kNoised, kSubmitted };

struct ClientState {
  uint32_t user_id = 0;
  Dataset dataset;
  Hyperparams params;
  ClientPhase phase = ClientPhase::kIdle;

  ClientState(uint32_t id, Dataset data, Hyperparams hp)
      : user_id(id), dataset(std::move(data)), params(std::move(hp)) {}
};

// One full client turn: train, add per-user Gaussian noise, scale by 1/|U|,
// encode, mask. Submits exactly once; the phase advances monotonically to
// kSubmitted. `add_noise = false` models a colluding (noise-omitting but
// otherwise conformant) client.
secagg::MaskedShare client_round(ClientState& state,
                                 const secagg::PairwiseSeedDirectory& seeds,
                                 const std::vector<uint32_t>& all_ids,
                                 const ProtocolConfig& config, Rng& rng,
                                 bool add_noise = true);

// Aggregate all shares and decode the released model. Division by |U| was
// applied client side, so the decode divisor is 1.
ModelStack server_round(const std::vector<secagg::MaskedShare>& shares,
                        const std::vector<uint32_t>& expected_ids,
                        const secagg::FixedPointCodec& codec,
                        const std::vector<int32_t>& classes, int cols);

struct EpsilonReport {
  double epsilon = 0.0;      // pointwise, one data point protected
  double delta = 0.0;
  bool validity_warning = false;
  // User-level view: min of the group-privacy bound Upsilon*epsilon and the
  // 2R-sensitivity bound epsilon*2R/s; only set in user-level accounting.
  std::optional<double> group_epsilon;
  std::optional<double> user_level_epsilon;
  std::optional<double> chosen_epsilon;
  std::string chosen_rule;
};

// Accounting for one protocol release. `sensitivity` is the pointwise bound
// actually used for noise calibration; `radius` feeds the 2R alternative.
EpsilonReport released_epsilon(const PrivacySpec& spec, double sensitivity,
                               double radius, int upsilon);

}  // namespace dphelmet::protocol

#endif  // DPHELMET_PROTOCOL_HPP_
