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

#ifndef DPHELMET_DATA_HPP_
#define DPHELMET_DATA_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dphelmet/core.hpp"

namespace dphelmet::data {

struct PartitionPlan {
  int num_users = 1;
  // Points handed to each user; default splits the dataset evenly.
  std::optional<int> points_per_user;
};

// clipped(x) = c * x / max(c, ||x||). The bias slot participates in the norm
// and is scaled like any other coordinate.
std::vector<double> clip_point(std::span<const double> x, double c);

// CSV rows are `label,feat_1,...,feat_p`; a bias slot 1 is prepended.
Dataset load_csv(const std::string& path, bool has_header);
void write_csv(const Dataset& dataset, const std::string& path);

// Raw matrix container: magic "DPHM" | u32 rows | u32 cols | row-major
// float32 payload, little-endian.
struct Matrix {
  uint32_t rows = 0;
  uint32_t cols = 0;
  std::vector<float> values;  // row-major
};

Matrix load_matrix(const std::string& path);
void save_matrix(const Matrix& m, const std::string& path);

// Dataset in the matrix container: column 0 is the label, columns 1..p are
// features (same layout as CSV rows).
Dataset load_binary_dataset(const std::string& path);

// Gaussian class blobs with pairwise center distance >= separation.
Dataset synth_blobs(Rng& rng, int num_classes, int dim, int per_class,
                    double spread, double separation);

// Seed-deterministic shuffle, then disjoint per-user shards.
std::vector<Dataset> partition(const Dataset& dataset,
                               const PartitionPlan& plan, Rng& rng);

// q-quantile (type-7 linear interpolation) of the feature-vector norms.
// Meant to run on a public surrogate dataset.
double quantile_clip_bound(const Dataset& dataset, double q);

}  // namespace dphelmet::data

#endif  // DPHELMET_DATA_HPP_
