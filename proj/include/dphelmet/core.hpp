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

#ifndef DPHELMET_CORE_HPP_
#define DPHELMET_CORE_HPP_

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dphelmet {

inline constexpr std::string_view kVersion = "0.1.0";

// Error taxonomy. The CLI maps these onto distinct exit codes.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ValidationError : Error {
  using Error::Error;
};
struct ParseError : Error {
  using Error::Error;
};
struct ProtocolError : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};

// 256-bit seed, stored as eight little-endian 32-bit words.
using Seed256 = std::array<uint32_t, 8>;

Seed256 seed_from_u64(uint64_t seed);

namespace detail {
// ChaCha20 block function (RFC 8439): 32-bit counter, 96-bit nonce, output
// as sixteen little-endian words.
std::array<uint32_t, 16> chacha20_block(const Seed256& key, uint32_t counter,
                                        const std::array<uint32_t, 3>& nonce);
}  // namespace detail

// Deterministic counter-based generator (ChaCha20 keystream).
//
// Streams are addressed by (seed, label): the same pair always replays the
// same draws, distinct labels or seeds give independent streams. Substreams
// derive a fresh key from the parent key and a label, so the draw position
// of the parent never influences a child stream. An Rng instance is confined
// to one logical actor; instances are independent and movable across threads.
class Rng {
 public:
  Rng(const Seed256& seed, std::string_view label);

  // Derived stream addressed by `label` relative to this stream's key.
  Rng substream(std::string_view label) const;

  uint64_t next_u64();

  // Uniform on [0, 1), 53-bit resolution.
  double uniform();

  // Uniform integer in [0, bound). bound must be > 0.
  uint64_t next_below(uint64_t bound);

  // Standard normal via Box-Muller; two uniforms per draw, no carry state.
  double gaussian();

  // Fisher-Yates shuffle of `items`.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (size_t i = items.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(next_below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  const Seed256& key() const { return key_; }

 private:
  Rng() = default;
  void refill();

  Seed256 key_{};
  uint64_t counter_ = 0;              // next block index
  std::array<uint32_t, 16> block_{};  // current keystream block
  int word_ = 16;                     // words consumed from block_
};

Rng spawn_rng(const Seed256& seed, std::string_view label);
Rng spawn_rng(uint64_t seed, std::string_view label);

// i.i.d. N(0, std_dev^2) per coordinate; std_dev == 0 yields zeros without
// consuming draws. Negative std_dev is a parameter error.
std::vector<double> gaussian_vector(Rng& rng, size_t dim, double std_dev);

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

// One labeled, bias-augmented feature vector: [1, x_1, ..., x_p].
struct DataPoint {
  std::vector<double> features;
  int32_t label = 0;
};

// Ordered collection of points sharing a dimension and a finite class set.
// Classes are kept sorted ascending; OVR row order follows this sort.
class Dataset {
 public:
  // Classes inferred from the labels present.
  explicit Dataset(std::vector<DataPoint> points);

  // Explicit class set (a superset of the labels present); shards of a
  // larger dataset keep the parent's classes this way even when a class has
  // no local points.
  Dataset(std::vector<DataPoint> points, std::vector<int32_t> classes);

  const std::vector<DataPoint>& points() const { return points_; }
  size_t size() const { return points_.size(); }
  int dim() const { return dim_; }  // p, excluding the bias slot
  const std::vector<int32_t>& classes() const { return classes_; }

 private:
  void validate_points();

  std::vector<DataPoint> points_;
  int dim_ = 0;
  std::vector<int32_t> classes_;
};

enum class LossKind { kHuberHinge, kLogistic };

std::string_view loss_name(LossKind kind);
LossKind loss_from_name(std::string_view name);

// The xi tuple (h, c, Lambda, R, M) plus batch size and loss choice.
struct Hyperparams {
  double huber_h = 0.1;  // Huber smoothness h
  double clip = 1.0;     // input clipping bound c
  double lambda = 2.0;   // regularization Lambda
  double radius = 0.07;  // model clipping bound R
  int iterations = 1500; // SGD steps M
  int batch_size = 20;
  LossKind loss = LossKind::kHuberHinge;

  void validate() const;
};

// |K| x (p+1) matrix of OVR hyperplanes, row k belongs to classes()[k].
class ModelStack {
 public:
  ModelStack(std::vector<int32_t> classes, int cols);
  ModelStack(std::vector<int32_t> classes, int cols, std::vector<double> weights);

  size_t num_classes() const { return classes_.size(); }
  int cols() const { return cols_; }
  const std::vector<int32_t>& classes() const { return classes_; }

  std::span<double> row(size_t k);
  std::span<const double> row(size_t k) const;

  std::vector<double>& weights() { return weights_; }
  const std::vector<double>& weights() const { return weights_; }

  // Largest row norm; the post-training invariant is max_row_norm() <= R + 1e-9.
  double max_row_norm() const;

 private:
  std::vector<int32_t> classes_;
  int cols_ = 0;
  std::vector<double> weights_;  // row-major |K| x cols
};

// Accounting state: noise multiplier, slack, honest fraction, group size.
struct PrivacySpec {
  double sigma = 1.0;
  double delta = 1e-5;
  double honest_fraction = 0.5;  // t
  int group_size = 1;            // Upsilon

  void validate() const;
};

// ---------------------------------------------------------------------------
// Small shared utilities
// ---------------------------------------------------------------------------

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);

uint64_t fnv1a64(std::span<const uint8_t> bytes,
                 uint64_t state = 1469598103934665603ull);
uint64_t fnv1a64(std::string_view text);

// Runs fn(0..n-1) on up to `jobs` threads. jobs <= 1 runs inline.
void parallel_for(size_t n, int jobs, const std::function<void(size_t)>& fn);

}  // namespace dphelmet

#endif  // DPHELMET_CORE_HPP_
