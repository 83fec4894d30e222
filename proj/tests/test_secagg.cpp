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

#include <cmath>
#include <set>

#include <doctest.h>

using namespace dphelmet;
using namespace dphelmet::secagg;

namespace {

std::vector<uint32_t> id_range(uint32_t n) {
  std::vector<uint32_t> ids(n);
  for (uint32_t i = 0; i < n; ++i) ids[i] = i;
  return ids;
}

std::vector<std::vector<uint64_t>> random_payloads(Rng& rng, size_t users,
                                                   size_t dim) {
  std::vector<std::vector<uint64_t>> payloads(users);
  for (auto& p : payloads) {
    p.resize(dim);
    for (auto& v : p) v = rng.next_u64();
  }
  return payloads;
}

}  // namespace

TEST_CASE("encode maps reals into the ring") {
  FixedPointCodec codec;
  codec.scale_bits = 24;
  codec.clamp_range = 2.0;
  CHECK(encode(std::vector<double>{0.0}, codec) ==
        std::vector<uint64_t>{0});
  CHECK(encode(std::vector<double>{1.0}, codec) ==
        std::vector<uint64_t>{16777216});
  // Two's complement embedding of -1.0.
  CHECK(encode(std::vector<double>{-1.0}, codec) ==
        std::vector<uint64_t>{0xffffffffffffffffull - 16777216ull + 1ull});
}

TEST_CASE("encode saturation names the coordinate") {
  FixedPointCodec codec;
  codec.clamp_range = 1.0;
  std::vector<double> v = {0.5, 3.0};
  CHECK_THROWS_WITH_AS(encode(v, codec), doctest::Contains("coordinate 1"),
                       ValidationError);
}

TEST_CASE("decode inverts encode within half an ulp") {
  FixedPointCodec codec;
  codec.scale_bits = 24;
  codec.clamp_range = 1.0;
  // Dyadic rational: exact.
  auto half = decode(encode(std::vector<double>{0.5}, codec), codec, 1);
  CHECK(half[0] == 0.5);
  // Non-dyadic: within 2^-25.
  auto tenth = decode(encode(std::vector<double>{0.1}, codec), codec, 1);
  CHECK(std::abs(tenth[0] - 0.1) <= std::ldexp(1.0, -25));
  CHECK(codec_error_bound(codec) == std::ldexp(1.0, -25));
}

TEST_CASE("sums of encodes decode to the mean") {
  FixedPointCodec codec;
  codec.clamp_range = 2.0;
  std::vector<uint64_t> sum(1, 0);
  for (int u = 0; u < 10; ++u) {
    auto e = encode(std::vector<double>{1.0}, codec);
    sum[0] += e[0];
  }
  auto mean = decode(sum, codec, 10);
  CHECK(mean[0] == 1.0);
}

TEST_CASE("codec round trip over random values") {
  FixedPointCodec codec;
  codec.scale_bits = 24;
  codec.clamp_range = 8.0;
  Rng rng = spawn_rng(21, "codec");
  double worst = 0.0;
  for (int i = 0; i < 20000; ++i) {
    double v = (2.0 * rng.uniform() - 1.0) * codec.clamp_range;
    auto round_tripped = decode(encode(std::vector<double>{v}, codec), codec, 1);
    worst = std::max(worst, std::abs(round_tripped[0] - v));
  }
  CHECK(worst <= codec_error_bound(codec));
}

TEST_CASE("overflow validation") {
  FixedPointCodec codec;
  codec.scale_bits = 24;
  codec.clamp_range = 1.0;
  CHECK_NOTHROW(validate_no_overflow(codec, 1000000));
  codec.clamp_range = 1e12;
  CHECK_THROWS_AS(validate_no_overflow(codec, 1000000), ValidationError);
  codec.scale_bits = 60;
  CHECK_THROWS_AS(validate_no_overflow(codec, 2), ValidationError);
}

TEST_CASE("two-user masks cancel exactly") {
  Rng rng = spawn_rng(1, "setup");
  auto ids = id_range(2);
  auto dir = PairwiseSeedDirectory::trusted_setup(ids, rng);
  Rng payload_rng = spawn_rng(2, "payload");
  auto payloads = random_payloads(payload_rng, 2, 16);
  auto m0 = mask(payloads[0], 0, dir, ids, 7);
  auto m1 = mask(payloads[1], 1, dir, ids, 7);
  for (size_t i = 0; i < 16; ++i) {
    REQUIRE(m0[i] + m1[i] == payloads[0][i] + payloads[1][i]);
  }
  // The individual masked share differs from its plaintext.
  CHECK(m0 != payloads[0]);
}

TEST_CASE("a single user has no pairs and no mask") {
  PairwiseSeedDirectory dir;
  std::vector<uint64_t> payload = {1, 2, 3};
  auto masked = mask(payload, 0, dir, {0}, 0);
  CHECK(masked == payload);
}

TEST_CASE("mask cancellation for user counts 2..64") {
  for (uint32_t users : {2u, 3u, 5u, 9u, 17u, 33u, 64u}) {
    Rng rng = spawn_rng(users, "setup");
    auto ids = id_range(users);
    auto dir = PairwiseSeedDirectory::trusted_setup(ids, rng);
    Rng payload_rng = spawn_rng(users, "payload");
    auto payloads = random_payloads(payload_rng, users, 32);
    std::vector<uint64_t> expected(32, 0);
    for (const auto& p : payloads) {
      for (size_t i = 0; i < 32; ++i) expected[i] += p[i];
    }
    std::vector<uint64_t> masked_sum(32, 0);
    for (uint32_t u = 0; u < users; ++u) {
      auto m = mask(payloads[u], u, dir, ids, 3);
      for (size_t i = 0; i < 32; ++i) masked_sum[i] += m[i];
    }
    REQUIRE(masked_sum == expected);
  }
}

TEST_CASE("masks are deterministic per (seed, round) and fresh per round") {
  Rng rng = spawn_rng(4, "setup");
  auto ids = id_range(3);
  auto dir = PairwiseSeedDirectory::trusted_setup(ids, rng);
  std::vector<uint64_t> payload(8, 0);
  auto a = mask(payload, 0, dir, ids, 1);
  auto b = mask(payload, 0, dir, ids, 1);
  CHECK(a == b);
  auto c = mask(payload, 0, dir, ids, 2);
  CHECK(a != c);
}

TEST_CASE("strict subsets of masked shares look uniform") {
  const uint32_t users = 4;
  const size_t dim = 4;
  size_t plaintext_hits = 0;
  size_t low_bit_ones = 0;
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    Rng rng = spawn_rng(static_cast<uint64_t>(t), "subset-setup");
    auto ids = id_range(users);
    auto dir = PairwiseSeedDirectory::trusted_setup(ids, rng);
    Rng payload_rng = spawn_rng(static_cast<uint64_t>(t), "subset-payload");
    auto payloads = random_payloads(payload_rng, users, dim);
    // Subset {0, 1}: masks toward users 2 and 3 do not cancel.
    std::vector<uint64_t> masked_sum(dim, 0), plain_sum(dim, 0);
    for (uint32_t u = 0; u < 2; ++u) {
      auto m = mask(payloads[u], u, dir, ids, 0);
      for (size_t i = 0; i < dim; ++i) {
        masked_sum[i] += m[i];
        plain_sum[i] += payloads[u][i];
      }
    }
    if (masked_sum == plain_sum) ++plaintext_hits;
    low_bit_ones += masked_sum[0] & 1u;
  }
  CHECK(plaintext_hits == 0);
  // Residual mask keeps the subset sum statistically scrambled.
  CHECK(std::abs(static_cast<double>(low_bit_ones) / trials - 0.5) < 0.02);
}

TEST_CASE("aggregate over the full id set") {
  const uint32_t users = 10;
  Rng rng = spawn_rng(6, "setup");
  auto ids = id_range(users);
  auto dir = PairwiseSeedDirectory::trusted_setup(ids, rng);
  FixedPointCodec codec;
  codec.clamp_range = 2.0;
  std::vector<MaskedShare> shares;
  for (uint32_t u = 0; u < users; ++u) {
    MaskedShare s;
    s.user_id = u;
    s.round_tag = 11;
    s.payload = mask(encode(std::vector<double>{1.0}, codec), u, dir, ids, 11);
    shares.push_back(std::move(s));
  }
  auto sum = aggregate(shares, ids);
  auto mean = decode(sum, codec, users);
  CHECK(mean[0] == 1.0);
}

TEST_CASE("aggregate error paths") {
  const uint32_t users = 4;
  Rng rng = spawn_rng(8, "setup");
  auto ids = id_range(users);
  auto dir = PairwiseSeedDirectory::trusted_setup(ids, rng);
  std::vector<MaskedShare> shares;
  for (uint32_t u = 0; u < users; ++u) {
    MaskedShare s;
    s.user_id = u;
    s.round_tag = 1;
    s.payload = mask(std::vector<uint64_t>(4, u), u, dir, ids, 1);
    shares.push_back(std::move(s));
  }

  // Dropout names the absentee.
  auto missing = shares;
  missing.erase(missing.begin() + 2);
  CHECK_THROWS_WITH_AS(aggregate(missing, ids), doctest::Contains("2"),
                       ProtocolError);

  // Duplicate id.
  auto dup = shares;
  dup[3].user_id = 0;
  CHECK_THROWS_WITH_AS(aggregate(dup, ids), doctest::Contains("duplicate"),
                       ProtocolError);

  // Round tag mismatch.
  auto tagged = shares;
  tagged[1].round_tag = 2;
  CHECK_THROWS_AS(aggregate(tagged, ids), ProtocolError);

  // Length mismatch.
  auto ragged = shares;
  ragged[1].payload.push_back(0);
  CHECK_THROWS_AS(aggregate(ragged, ids), ProtocolError);

  // Unexpected sender.
  auto stranger = shares;
  stranger[1].user_id = 99;
  CHECK_THROWS_AS(aggregate(stranger, ids), ProtocolError);
}

TEST_CASE("missing pairwise seed is a protocol error") {
  PairwiseSeedDirectory dir;
  std::vector<uint64_t> payload(4, 0);
  CHECK_THROWS_AS(mask(payload, 0, dir, {0, 1}, 0), ProtocolError);
}

TEST_CASE("message encoding round trips") {
  MaskedShare share;
  share.user_id = 42;
  share.round_tag = 0x0123456789abcdefull;
  share.payload = {1, 2, 0xffffffffffffffffull};
  auto bytes = encode_message(share);
  CHECK(bytes.size() == 16 + 3 * 8);
  auto back = decode_message(bytes);
  CHECK(back.user_id == share.user_id);
  CHECK(back.round_tag == share.round_tag);
  CHECK(back.payload == share.payload);

  bytes.pop_back();
  CHECK_THROWS_AS(decode_message(bytes), ParseError);
}

TEST_CASE("transcript counts and digest") {
  Transcript t;
  MaskedShare share;
  share.user_id = 1;
  share.payload = {5};
  t.append(share);
  t.append(share);
  t.note_aggregation(0, 2);
  CHECK(t.num_messages() == 2);
  CHECK(t.num_aggregations() == 1);
  CHECK(t.digest().size() == 16);

  Transcript other;
  other.append(share);
  CHECK(other.digest() != t.digest());
}
