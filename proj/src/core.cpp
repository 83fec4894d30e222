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

#include "dphelmet/core.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <numbers>
#include <thread>

namespace dphelmet {
namespace {

inline uint32_t rotl32(uint32_t x, int n) {
  return (x << n) | (x >> (32 - n));
}

inline void quarter_round(uint32_t& a, uint32_t& b, uint32_t& c, uint32_t& d) {
  a += b; d ^= a; d = rotl32(d, 16);
  c += d; b ^= c; b = rotl32(b, 12);
  a += b; d ^= a; d = rotl32(d, 8);
  c += d; b ^= c; b = rotl32(b, 7);
}

// Label -> 96-bit nonce for key derivation. FNV over the label plus its
// length; collisions among the short structured labels used here are not a
// concern, and any collision would still be deterministic.
std::array<uint32_t, 3> label_nonce(std::string_view label) {
  uint64_t h = fnv1a64(label);
  return {static_cast<uint32_t>(h), static_cast<uint32_t>(h >> 32),
          static_cast<uint32_t>(label.size())};
}

// Nonce reserved for keystream output, distinct from derivation nonces by
// construction (derivation always mixes the label length as word 2; the
// stream nonce uses the sentinel below).
constexpr std::array<uint32_t, 3> kStreamNonce = {0x73747265u, 0x616d0001u,
                                                  0xffffffffu};

}  // namespace

namespace detail {

std::array<uint32_t, 16> chacha20_block(const Seed256& key, uint32_t counter,
                                        const std::array<uint32_t, 3>& nonce) {
  std::array<uint32_t, 16> state = {
      0x61707865u, 0x3320646eu, 0x79622d32u, 0x6b206574u,
      key[0], key[1], key[2], key[3], key[4], key[5], key[6], key[7],
      counter, nonce[0], nonce[1], nonce[2]};
  std::array<uint32_t, 16> x = state;
  for (int round = 0; round < 10; ++round) {
    quarter_round(x[0], x[4], x[8], x[12]);
    quarter_round(x[1], x[5], x[9], x[13]);
    quarter_round(x[2], x[6], x[10], x[14]);
    quarter_round(x[3], x[7], x[11], x[15]);
    quarter_round(x[0], x[5], x[10], x[15]);
    quarter_round(x[1], x[6], x[11], x[12]);
    quarter_round(x[2], x[7], x[8], x[13]);
    quarter_round(x[3], x[4], x[9], x[14]);
  }
  for (int i = 0; i < 16; ++i) x[i] += state[i];
  return x;
}

}  // namespace detail

Seed256 seed_from_u64(uint64_t seed) {
  Seed256 s{};
  s[0] = static_cast<uint32_t>(seed);
  s[1] = static_cast<uint32_t>(seed >> 32);
  return s;
}

Rng::Rng(const Seed256& seed, std::string_view label) {
  auto block = detail::chacha20_block(seed, 0, label_nonce(label));
  for (int i = 0; i < 8; ++i) key_[i] = block[i];
}

Rng Rng::substream(std::string_view label) const {
  return Rng(key_, label);
}

void Rng::refill() {
  // 32-bit block counter per key; 2^32 blocks (256 GiB) per stream is far
  // beyond any use here.
  block_ = detail::chacha20_block(key_, static_cast<uint32_t>(counter_),
                                  kStreamNonce);
  ++counter_;
  word_ = 0;
}

uint64_t Rng::next_u64() {
  // Words are always consumed in pairs, low word first.
  if (word_ >= 16) refill();
  uint64_t lo = block_[static_cast<size_t>(word_)];
  uint64_t hi = block_[static_cast<size_t>(word_) + 1];
  word_ += 2;
  return lo | (hi << 32);
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

uint64_t Rng::next_below(uint64_t bound) {
  if (bound == 0) throw ValidationError("next_below: bound must be positive");
  // Rejection sampling to avoid modulo bias.
  uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % bound;
}

double Rng::gaussian() {
  // Box-Muller, cosine branch. u1 in (0, 1] so the log is finite.
  double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

Rng spawn_rng(const Seed256& seed, std::string_view label) {
  return Rng(seed, label);
}

Rng spawn_rng(uint64_t seed, std::string_view label) {
  return Rng(seed_from_u64(seed), label);
}

std::vector<double> gaussian_vector(Rng& rng, size_t dim, double std_dev) {
  if (std_dev < 0) {
    throw ValidationError("gaussian_vector: std_dev must be >= 0");
  }
  std::vector<double> out(dim, 0.0);
  if (std_dev == 0) return out;
  for (double& v : out) v = std_dev * rng.gaussian();
  return out;
}

// ---------------------------------------------------------------------------

Dataset::Dataset(std::vector<DataPoint> points) : points_(std::move(points)) {
  validate_points();
  for (const auto& pt : points_) classes_.push_back(pt.label);
  std::sort(classes_.begin(), classes_.end());
  classes_.erase(std::unique(classes_.begin(), classes_.end()),
                 classes_.end());
}

Dataset::Dataset(std::vector<DataPoint> points, std::vector<int32_t> classes)
    : points_(std::move(points)), classes_(std::move(classes)) {
  validate_points();
  std::sort(classes_.begin(), classes_.end());
  classes_.erase(std::unique(classes_.begin(), classes_.end()),
                 classes_.end());
  if (classes_.empty()) throw ValidationError("class set must be nonempty");
  for (size_t i = 0; i < points_.size(); ++i) {
    if (!std::binary_search(classes_.begin(), classes_.end(),
                            points_[i].label)) {
      throw ValidationError("dataset point " + std::to_string(i) +
                            " has a label outside the class set");
    }
  }
}

void Dataset::validate_points() {
  if (points_.empty()) throw ValidationError("dataset must be nonempty");
  size_t width = points_[0].features.size();
  if (width < 2) throw ValidationError("dataset points need a bias slot");
  dim_ = static_cast<int>(width) - 1;
  for (size_t i = 0; i < points_.size(); ++i) {
    const auto& pt = points_[i];
    if (pt.features.size() != width) {
      throw ValidationError("dataset point " + std::to_string(i) +
                            " has inconsistent dimension");
    }
    if (pt.features[0] != 1.0) {
      throw ValidationError("dataset point " + std::to_string(i) +
                            " is missing the bias slot");
    }
  }
}

std::string_view loss_name(LossKind kind) {
  return kind == LossKind::kHuberHinge ? "huber_hinge" : "logistic";
}

LossKind loss_from_name(std::string_view name) {
  if (name == "huber_hinge") return LossKind::kHuberHinge;
  if (name == "logistic") return LossKind::kLogistic;
  throw ValidationError("unknown loss '" + std::string(name) + "'");
}

void Hyperparams::validate() const {
  if (loss == LossKind::kHuberHinge && huber_h <= 0) {
    throw ValidationError("huber_h must be > 0");
  }
  if (clip <= 0) throw ValidationError("clip bound must be > 0");
  if (lambda <= 0) throw ValidationError("lambda must be > 0");
  if (radius <= 0) throw ValidationError("radius must be > 0");
  if (iterations < 1) throw ValidationError("iterations must be >= 1");
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
}

ModelStack::ModelStack(std::vector<int32_t> classes, int cols)
    : classes_(std::move(classes)),
      cols_(cols),
      weights_(classes_.size() * static_cast<size_t>(cols), 0.0) {
  if (classes_.empty() || cols_ < 1) {
    throw ValidationError("model stack needs classes and columns");
  }
}

ModelStack::ModelStack(std::vector<int32_t> classes, int cols,
                       std::vector<double> weights)
    : classes_(std::move(classes)), cols_(cols), weights_(std::move(weights)) {
  if (classes_.empty() || cols_ < 1 ||
      weights_.size() != classes_.size() * static_cast<size_t>(cols_)) {
    throw ValidationError("model stack shape mismatch");
  }
}

std::span<double> ModelStack::row(size_t k) {
  return {weights_.data() + k * static_cast<size_t>(cols_),
          static_cast<size_t>(cols_)};
}

std::span<const double> ModelStack::row(size_t k) const {
  return {weights_.data() + k * static_cast<size_t>(cols_),
          static_cast<size_t>(cols_)};
}

double ModelStack::max_row_norm() const {
  double worst = 0.0;
  for (size_t k = 0; k < num_classes(); ++k) {
    worst = std::max(worst, l2_norm(row(k)));
  }
  return worst;
}

void PrivacySpec::validate() const {
  if (sigma < 0) throw ValidationError("sigma must be >= 0");
  if (delta <= 0 || delta >= 1) throw ValidationError("delta must be in (0,1)");
  if (honest_fraction <= 0 || honest_fraction > 1) {
    throw ValidationError("honest_fraction must be in (0,1]");
  }
  if (group_size < 1) throw ValidationError("group_size must be >= 1");
}

// ---------------------------------------------------------------------------

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ValidationError("dot: dimension mismatch");
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double l2_norm(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

uint64_t fnv1a64(std::span<const uint8_t> bytes, uint64_t state) {
  for (uint8_t b : bytes) {
    state ^= b;
    state *= 1099511628211ull;
  }
  return state;
}

uint64_t fnv1a64(std::string_view text) {
  return fnv1a64(
      std::span(reinterpret_cast<const uint8_t*>(text.data()), text.size()));
}

void parallel_for(size_t n, int jobs, const std::function<void(size_t)>& fn) {
  if (n == 0) return;
  size_t workers = std::min<size_t>(std::max(jobs, 1), n);
  if (workers <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace dphelmet
