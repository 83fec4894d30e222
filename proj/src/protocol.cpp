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

#include "dphelmet/protocol.hpp"

#include <algorithm>
#include <cmath>

namespace dphelmet::protocol {

double ProtocolConfig::per_user_noise_std(double sensitivity) const {
  privacy.validate();
  if (num_users < 1) throw ValidationError("num_users must be >= 1");
  double sigma_tilde =
      privacy.sigma /
      std::sqrt(privacy.honest_fraction * static_cast<double>(num_users));
  return sigma_tilde * sensitivity;
}

secagg::FixedPointCodec make_codec(double radius, double per_user_noise_std,
                                   int num_users, int scale_bits) {
  if (radius <= 0) throw ValidationError("radius must be > 0");
  if (num_users < 1) throw ValidationError("num_users must be >= 1");
  secagg::FixedPointCodec codec;
  codec.scale_bits = scale_bits;
  codec.clamp_range = (radius + 6.0 * per_user_noise_std) /
                      static_cast<double>(num_users);
  secagg::validate_no_overflow(codec, num_users);
  return codec;
}

secagg::MaskedShare client_round(ClientState& state,
                                 const secagg::PairwiseSeedDirectory& seeds,
                                 const std::vector<uint32_t>& all_ids,
                                 const ProtocolConfig& config, Rng& rng,
                                 bool add_noise) {
  if (state.phase != ClientPhase::kIdle) {
    throw ProtocolError("client " + std::to_string(state.user_id) +
                        " already ran its round");
  }
  // |U| = 1 with t = 1 degenerates to the central Gaussian mechanism.
  if (config.num_users < 1) {
    throw ValidationError("the protocol needs >= 1 user");
  }
  if (config.privacy.honest_fraction * config.num_users < 1.0) {
    throw ValidationError("t * |U| must be >= 1");
  }

  Rng sgd_rng = rng.substream("sgd");
  ModelStack model = svm::train(state.dataset, state.params, sgd_rng);
  state.phase = ClientPhase::kTrained;

  double s = config.mode == SensitivityMode::kPointwise
                 ? svm::sensitivity(state.params, state.dataset.size())
                 : dp::user_level_sensitivity(state.params.radius);
  double noise_std = add_noise ? config.per_user_noise_std(s) : 0.0;
  Rng noise_rng = rng.substream("noise");
  ModelStack noised = dp::perturb(model, noise_std, noise_rng);
  state.phase = ClientPhase::kNoised;

  // Algorithm input to secure summation is M_priv / |U|.
  std::vector<double> payload = noised.weights();
  double inv_users = 1.0 / static_cast<double>(config.num_users);
  for (double& v : payload) v *= inv_users;

  std::vector<uint64_t> encoded;
  try {
    encoded = secagg::encode(payload, config.codec);
  } catch (const ValidationError& e) {
    throw ProtocolError(
        std::string("client ") + std::to_string(state.user_id) +
        " cannot encode its share: " + e.what() +
        " (check that R=" + std::to_string(state.params.radius) +
        ", sigma=" + std::to_string(config.privacy.sigma) +
        " and clamp B=" + std::to_string(config.codec.clamp_range) +
        " were planned together)");
  }

  secagg::MaskedShare share;
  share.user_id = state.user_id;
  share.round_tag = config.round_tag;
  share.payload =
      secagg::mask(encoded, state.user_id, seeds, all_ids, config.round_tag);
  state.phase = ClientPhase::kSubmitted;
  return share;
}

ModelStack server_round(const std::vector<secagg::MaskedShare>& shares,
                        const std::vector<uint32_t>& expected_ids,
                        const secagg::FixedPointCodec& codec,
                        const std::vector<int32_t>& classes, int cols) {
  auto ring_sum = secagg::aggregate(shares, expected_ids);
  auto values = secagg::decode(ring_sum, codec, 1);
  if (values.size() != classes.size() * static_cast<size_t>(cols)) {
    throw ProtocolError("aggregated payload does not match the model shape");
  }
  return ModelStack(classes, cols, std::move(values));
}

EpsilonReport released_epsilon(const PrivacySpec& spec, double sensitivity,
                               double radius, int upsilon) {
  spec.validate();
  if (sensitivity <= 0) throw ValidationError("sensitivity must be > 0");
  EpsilonReport report;
  report.delta = spec.delta;
  auto pointwise = dp::epsilon_of_sigma(spec.sigma, spec.delta);
  report.epsilon = pointwise.epsilon;
  report.validity_warning = pointwise.validity_warning;
  if (upsilon >= 1) {
    double group = dp::group_epsilon(pointwise.epsilon, upsilon);
    // The 2R route: same noise, sensitivity 2R instead of Upsilon s.
    double user_level =
        pointwise.epsilon * dp::user_level_sensitivity(radius) / sensitivity;
    report.group_epsilon = group;
    report.user_level_epsilon = user_level;
    report.chosen_epsilon = std::min(group, user_level);
    report.chosen_rule = group <= user_level ? "group" : "user_level";
    report.validity_warning =
        report.validity_warning || *report.chosen_epsilon >= 1.0;
  }
  return report;
}

}  // namespace dphelmet::protocol
