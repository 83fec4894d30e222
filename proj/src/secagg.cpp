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

#include "dphelmet/secagg.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

namespace dphelmet::secagg {
namespace {

std::pair<uint32_t, uint32_t> ordered(uint32_t a, uint32_t b) {
  return a < b ? std::pair{a, b} : std::pair{b, a};
}

// Pairwise mask stream for one (pair, round) combination.
std::vector<uint64_t> pair_mask(const Seed256& seed, uint64_t round_tag,
                                size_t len) {
  Rng prg(seed, "mask/round/" + std::to_string(round_tag));
  std::vector<uint64_t> out(len);
  for (uint64_t& v : out) v = prg.next_u64();
  return out;
}

void append_u32(std::vector<uint8_t>& buf, uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void append_u64(std::vector<uint8_t>& buf, uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

uint32_t read_u32(std::span<const uint8_t> bytes, size_t at) {
  uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | bytes[at + static_cast<size_t>(i)];
  return v;
}

uint64_t read_u64(std::span<const uint8_t> bytes, size_t at) {
  uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | bytes[at + static_cast<size_t>(i)];
  return v;
}

}  // namespace

double codec_error_bound(const FixedPointCodec& codec) {
  return std::ldexp(1.0, -codec.scale_bits - 1);
}

void validate_no_overflow(const FixedPointCodec& codec, int num_users) {
  if (codec.scale_bits < 1 || codec.scale_bits > 52) {
    throw ValidationError("scale_bits must be in [1, 52]");
  }
  if (codec.clamp_range <= 0) throw ValidationError("clamp range must be > 0");
  if (num_users < 1) throw ValidationError("num_users must be >= 1");
  // Worst case: every user contributes magnitude B; the running sum must stay
  // strictly inside the signed half of the ring.
  double worst = static_cast<double>(num_users) * codec.clamp_range *
                 std::ldexp(1.0, codec.scale_bits);
  if (!(worst < std::ldexp(1.0, 63))) {
    throw ValidationError(
        "fixed-point setup can overflow: num_users * B * 2^scale_bits = " +
        std::to_string(worst) + " >= 2^63");
  }
}

std::vector<uint64_t> encode(std::span<const double> values,
                             const FixedPointCodec& codec) {
  std::vector<uint64_t> out(values.size());
  double scale = std::ldexp(1.0, codec.scale_bits);
  for (size_t i = 0; i < values.size(); ++i) {
    double v = values[i];
    if (!std::isfinite(v) || std::abs(v) > codec.clamp_range) {
      throw ValidationError("encode saturation at coordinate " +
                            std::to_string(i) + ": |" + std::to_string(v) +
                            "| > clamp range " +
                            std::to_string(codec.clamp_range));
    }
    int64_t fixed = std::llround(v * scale);
    out[i] = static_cast<uint64_t>(fixed);
  }
  return out;
}

std::vector<double> decode(std::span<const uint64_t> ring_values,
                           const FixedPointCodec& codec, uint64_t divisor) {
  if (divisor < 1) throw ValidationError("divisor must be >= 1");
  std::vector<double> out(ring_values.size());
  double denom = std::ldexp(1.0, codec.scale_bits) *
                 static_cast<double>(divisor);
  for (size_t i = 0; i < ring_values.size(); ++i) {
    auto signed_value = static_cast<int64_t>(ring_values[i]);
    out[i] = static_cast<double>(signed_value) / denom;
  }
  return out;
}

PairwiseSeedDirectory PairwiseSeedDirectory::trusted_setup(
    const std::vector<uint32_t>& user_ids, Rng& rng) {
  PairwiseSeedDirectory dir;
  for (size_t i = 0; i < user_ids.size(); ++i) {
    for (size_t j = i + 1; j < user_ids.size(); ++j) {
      Seed256 s;
      Rng pair_rng = rng.substream("pair/" + std::to_string(user_ids[i]) +
                                   "/" + std::to_string(user_ids[j]));
      for (auto& w : s) w = static_cast<uint32_t>(pair_rng.next_u64());
      dir.set(user_ids[i], user_ids[j], s);
    }
  }
  return dir;
}

void PairwiseSeedDirectory::set(uint32_t a, uint32_t b, const Seed256& seed) {
  if (a == b) throw ValidationError("no pairwise seed for a user with itself");
  seeds_[ordered(a, b)] = seed;
}

const Seed256& PairwiseSeedDirectory::seed(uint32_t a, uint32_t b) const {
  auto it = seeds_.find(ordered(a, b));
  if (it == seeds_.end()) {
    throw ProtocolError("missing pairwise seed for users " +
                        std::to_string(a) + " and " + std::to_string(b));
  }
  return it->second;
}

bool PairwiseSeedDirectory::has(uint32_t a, uint32_t b) const {
  return seeds_.count(ordered(a, b)) != 0;
}

std::vector<uint64_t> mask(std::span<const uint64_t> share, uint32_t user_id,
                           const PairwiseSeedDirectory& directory,
                           const std::vector<uint32_t>& all_ids,
                           uint64_t round_tag) {
  std::vector<uint64_t> out(share.begin(), share.end());
  for (uint32_t other : all_ids) {
    if (other == user_id) continue;
    auto stream = pair_mask(directory.seed(user_id, other), round_tag,
                            out.size());
    if (user_id < other) {
      for (size_t i = 0; i < out.size(); ++i) out[i] += stream[i];
    } else {
      for (size_t i = 0; i < out.size(); ++i) out[i] -= stream[i];
    }
  }
  return out;
}

std::vector<uint64_t> aggregate(const std::vector<MaskedShare>& shares,
                                const std::vector<uint32_t>& expected_ids) {
  if (expected_ids.empty()) throw ValidationError("no expected ids");
  std::set<uint32_t> expected(expected_ids.begin(), expected_ids.end());
  if (expected.size() != expected_ids.size()) {
    throw ValidationError("expected id list contains duplicates");
  }
  std::set<uint32_t> seen;
  for (const auto& share : shares) {
    if (!expected.count(share.user_id)) {
      throw ProtocolError("share from unexpected user " +
                          std::to_string(share.user_id));
    }
    if (!seen.insert(share.user_id).second) {
      throw ProtocolError("duplicate share from user " +
                          std::to_string(share.user_id));
    }
  }
  if (seen.size() != expected.size()) {
    std::ostringstream msg;
    msg << "dropout detected; missing shares from users:";
    for (uint32_t id : expected) {
      if (!seen.count(id)) msg << ' ' << id;
    }
    throw ProtocolError(msg.str());
  }

  size_t len = shares.front().payload.size();
  uint64_t tag = shares.front().round_tag;
  std::vector<uint64_t> sum(len, 0);
  for (const auto& share : shares) {
    if (share.round_tag != tag) {
      throw ProtocolError("round tag mismatch in share from user " +
                          std::to_string(share.user_id));
    }
    if (share.payload.size() != len) {
      throw ProtocolError("payload length mismatch in share from user " +
                          std::to_string(share.user_id));
    }
    for (size_t i = 0; i < len; ++i) sum[i] += share.payload[i];
  }
  return sum;
}

std::vector<uint8_t> encode_message(const MaskedShare& share) {
  std::vector<uint8_t> buf;
  buf.reserve(16 + share.payload.size() * 8);
  append_u64(buf, share.round_tag);
  append_u32(buf, share.user_id);
  append_u32(buf, static_cast<uint32_t>(share.payload.size()));
  for (uint64_t v : share.payload) append_u64(buf, v);
  return buf;
}

MaskedShare decode_message(std::span<const uint8_t> bytes) {
  if (bytes.size() < 16) throw ParseError("message too short");
  MaskedShare share;
  share.round_tag = read_u64(bytes, 0);
  share.user_id = read_u32(bytes, 8);
  uint32_t len = read_u32(bytes, 12);
  if (bytes.size() != 16 + static_cast<size_t>(len) * 8) {
    throw ParseError("message length does not match header");
  }
  share.payload.resize(len);
  for (uint32_t i = 0; i < len; ++i) {
    share.payload[i] = read_u64(bytes, 16 + static_cast<size_t>(i) * 8);
  }
  return share;
}

void Transcript::append(const MaskedShare& share) {
  auto msg = encode_message(share);
  bytes_.insert(bytes_.end(), msg.begin(), msg.end());
  ++num_messages_;
}

void Transcript::note_aggregation(uint64_t round_tag, size_t num_shares) {
  // Aggregation marker: round_tag | sentinel id | zero-length payload.
  MaskedShare marker;
  marker.round_tag = round_tag;
  marker.user_id = 0xffffffffu;
  auto msg = encode_message(marker);
  bytes_.insert(bytes_.end(), msg.begin(), msg.end());
  append_u32(bytes_, static_cast<uint32_t>(num_shares));
  ++num_aggregations_;
}

std::string Transcript::digest() const {
  uint64_t h = fnv1a64(std::span<const uint8_t>(bytes_.data(), bytes_.size()));
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(h));
  return hex;
}

void Transcript::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out.write(reinterpret_cast<const char*>(bytes_.data()),
            static_cast<std::streamsize>(bytes_.size()));
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace dphelmet::secagg
