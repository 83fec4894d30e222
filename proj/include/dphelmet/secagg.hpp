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

#ifndef DPHELMET_SECAGG_HPP_
#define DPHELMET_SECAGG_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dphelmet/core.hpp"

namespace dphelmet::secagg {

// Fixed-point embedding of reals into the mod-2^64 ring: value * 2^scale_bits
// rounded to nearest, negatives in two's complement.
struct FixedPointCodec {
  int scale_bits = 24;
  double clamp_range = 1.0;  // B: largest encodable magnitude
};

// Per-coordinate quantization error bound: half an ulp of the encoding.
double codec_error_bound(const FixedPointCodec& codec);

// Fails when the worst-case accumulated magnitude could cross 2^63.
void validate_no_overflow(const FixedPointCodec& codec, int num_users);

std::vector<uint64_t> encode(std::span<const double> values,
                             const FixedPointCodec& codec);

// Signed reinterpretation, then division by 2^scale_bits * divisor.
std::vector<double> decode(std::span<const uint64_t> ring_values,
                           const FixedPointCodec& codec, uint64_t divisor);

// Pairwise 256-bit seeds provisioned by trusted setup; seed(i,j) == seed(j,i).
class PairwiseSeedDirectory {
 public:
  PairwiseSeedDirectory() = default;

  // Fresh random seed for every unordered pair in `user_ids`.
  static PairwiseSeedDirectory trusted_setup(
      const std::vector<uint32_t>& user_ids, Rng& rng);

  void set(uint32_t a, uint32_t b, const Seed256& seed);
  const Seed256& seed(uint32_t a, uint32_t b) const;
  bool has(uint32_t a, uint32_t b) const;

 private:
  std::map<std::pair<uint32_t, uint32_t>, Seed256> seeds_;
};

struct MaskedShare {
  uint32_t user_id = 0;
  uint64_t round_tag = 0;
  std::vector<uint64_t> payload;
};

// share + sum_{j>i} PRG(s_ij) - sum_{j<i} PRG(s_ij) (mod 2^64). The mask
// stream is determined by (pair seed, round_tag), so every pair's two masks
// cancel exactly in the ring.
std::vector<uint64_t> mask(std::span<const uint64_t> share, uint32_t user_id,
                           const PairwiseSeedDirectory& directory,
                           const std::vector<uint32_t>& all_ids,
                           uint64_t round_tag);

// Coordinate-wise modular sum over exactly one share per expected id.
// Missing ids raise a dropout error naming the absentees; duplicates,
// tag mismatches, and length mismatches are protocol errors.
std::vector<uint64_t> aggregate(const std::vector<MaskedShare>& shares,
                                const std::vector<uint32_t>& expected_ids);

// Wire encoding of one message:
// round_tag (u64) | user_id (u32) | payload length (u32) | payload u64s, LE.
std::vector<uint8_t> encode_message(const MaskedShare& share);
MaskedShare decode_message(std::span<const uint8_t> bytes);

// Append-only transcript of protocol messages in arrival order.
class Transcript {
 public:
  void append(const MaskedShare& share);
  void note_aggregation(uint64_t round_tag, size_t num_shares);

  size_t num_messages() const { return num_messages_; }
  size_t num_aggregations() const { return num_aggregations_; }
  const std::vector<uint8_t>& bytes() const { return bytes_; }

  // FNV-1a over the byte stream, hex encoded.
  std::string digest() const;

  void save(const std::string& path) const;

 private:
  std::vector<uint8_t> bytes_;
  size_t num_messages_ = 0;
  size_t num_aggregations_ = 0;
};

}  // namespace dphelmet::secagg

#endif  // DPHELMET_SECAGG_HPP_
