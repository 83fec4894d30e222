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

#include "dphelmet/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace dphelmet::data {
namespace {

double parse_double(const std::string& token, size_t row, size_t col) {
  size_t pos = 0;
  double value;
  try {
    value = std::stod(token, &pos);
  } catch (const std::exception&) {
    throw ParseError("row " + std::to_string(row) + ", field " +
                     std::to_string(col) + ": not a number: '" + token + "'");
  }
  if (pos != token.size()) {
    throw ParseError("row " + std::to_string(row) + ", field " +
                     std::to_string(col) + ": trailing junk in '" + token +
                     "'");
  }
  return value;
}

std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string tok;
  while (std::getline(ss, tok, ',')) fields.push_back(tok);
  return fields;
}

}  // namespace

std::vector<double> clip_point(std::span<const double> x, double c) {
  if (c <= 0) throw ValidationError("clip bound must be > 0");
  std::vector<double> out(x.begin(), x.end());
  double norm = l2_norm(x);
  if (norm > c) {
    double scale = c / norm;
    for (double& v : out) v *= scale;
  }
  return out;
}

Dataset load_csv(const std::string& path, bool has_header) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::vector<DataPoint> points;
  std::string line;
  size_t row = 0;
  size_t width = 0;
  while (std::getline(in, line)) {
    ++row;
    if (row == 1 && has_header) continue;
    if (line.empty()) continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto fields = split_csv_row(line);
    if (fields.size() < 2) {
      throw ParseError("row " + std::to_string(row) +
                       ": need a label and at least one feature");
    }
    if (width == 0) {
      width = fields.size();
    } else if (fields.size() != width) {
      throw ParseError("row " + std::to_string(row) + ": expected " +
                       std::to_string(width) + " fields, got " +
                       std::to_string(fields.size()));
    }
    double label_value = parse_double(fields[0], row, 0);
    auto label = static_cast<int32_t>(std::llround(label_value));
    if (static_cast<double>(label) != label_value) {
      throw ParseError("row " + std::to_string(row) +
                       ": label must be an integer");
    }
    DataPoint pt;
    pt.label = label;
    pt.features.reserve(fields.size());
    pt.features.push_back(1.0);  // bias slot
    for (size_t i = 1; i < fields.size(); ++i) {
      pt.features.push_back(parse_double(fields[i], row, i));
    }
    points.push_back(std::move(pt));
  }
  if (points.empty()) throw ParseError("empty dataset in '" + path + "'");
  return Dataset(std::move(points));
}

void write_csv(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out.precision(17);
  for (const auto& pt : dataset.points()) {
    out << pt.label;
    for (size_t i = 1; i < pt.features.size(); ++i) {
      out << ',' << pt.features[i];
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

Matrix load_matrix(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "DPHM", 4) != 0) {
    throw ParseError("'" + path + "' is not a DPHM matrix file");
  }
  uint32_t rows = 0, cols = 0;
  in.read(reinterpret_cast<char*>(&rows), 4);
  in.read(reinterpret_cast<char*>(&cols), 4);
  if (!in) throw ParseError("truncated DPHM header in '" + path + "'");
  Matrix m;
  m.rows = rows;
  m.cols = cols;
  m.values.resize(static_cast<size_t>(rows) * cols);
  in.read(reinterpret_cast<char*>(m.values.data()),
          static_cast<std::streamsize>(m.values.size() * sizeof(float)));
  if (!in) throw ParseError("truncated DPHM payload in '" + path + "'");
  return m;
}

void save_matrix(const Matrix& m, const std::string& path) {
  if (m.values.size() != static_cast<size_t>(m.rows) * m.cols) {
    throw ValidationError("matrix payload does not match its header");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out.write("DPHM", 4);
  out.write(reinterpret_cast<const char*>(&m.rows), 4);
  out.write(reinterpret_cast<const char*>(&m.cols), 4);
  out.write(reinterpret_cast<const char*>(m.values.data()),
            static_cast<std::streamsize>(m.values.size() * sizeof(float)));
  if (!out) throw IoError("write failed for '" + path + "'");
}

Dataset load_binary_dataset(const std::string& path) {
  Matrix m = load_matrix(path);
  if (m.rows == 0 || m.cols < 2) {
    throw ParseError("dataset matrix needs >= 1 row and >= 2 columns");
  }
  std::vector<DataPoint> points;
  points.reserve(m.rows);
  for (uint32_t r = 0; r < m.rows; ++r) {
    const float* row = m.values.data() + static_cast<size_t>(r) * m.cols;
    DataPoint pt;
    pt.label = static_cast<int32_t>(std::llround(static_cast<double>(row[0])));
    pt.features.reserve(m.cols);
    pt.features.push_back(1.0);
    for (uint32_t c = 1; c < m.cols; ++c) {
      pt.features.push_back(static_cast<double>(row[c]));
    }
    points.push_back(std::move(pt));
  }
  return Dataset(std::move(points));
}

Dataset synth_blobs(Rng& rng, int num_classes, int dim, int per_class,
                    double spread, double separation) {
  if (num_classes < 1 || dim < 1 || per_class < 1) {
    throw ValidationError("synth_blobs: counts must be >= 1");
  }
  if (spread < 0 || separation < 0) {
    throw ValidationError("synth_blobs: spread and separation must be >= 0");
  }
  Rng center_rng = rng.substream("centers");
  // Rejection-sample centers; widen the shell if a placement keeps failing.
  std::vector<std::vector<double>> centers;
  double shell = std::max(separation, 1.0);
  for (int k = 0; k < num_classes; ++k) {
    for (int attempt = 0;; ++attempt) {
      std::vector<double> cand(static_cast<size_t>(dim));
      for (double& v : cand) v = shell * center_rng.gaussian();
      bool ok = true;
      for (const auto& c : centers) {
        double d2 = 0;
        for (int i = 0; i < dim; ++i) {
          double diff = cand[static_cast<size_t>(i)] - c[static_cast<size_t>(i)];
          d2 += diff * diff;
        }
        if (d2 < separation * separation) {
          ok = false;
          break;
        }
      }
      if (ok) {
        centers.push_back(std::move(cand));
        break;
      }
      if (attempt > 0 && attempt % 64 == 0) shell *= 1.3;
    }
  }
  Rng point_rng = rng.substream("points");
  std::vector<DataPoint> points;
  points.reserve(static_cast<size_t>(num_classes) * per_class);
  for (int k = 0; k < num_classes; ++k) {
    for (int n = 0; n < per_class; ++n) {
      DataPoint pt;
      pt.label = k;
      pt.features.reserve(static_cast<size_t>(dim) + 1);
      pt.features.push_back(1.0);
      for (int i = 0; i < dim; ++i) {
        pt.features.push_back(centers[static_cast<size_t>(k)][static_cast<size_t>(i)] +
                              spread * point_rng.gaussian());
      }
      points.push_back(std::move(pt));
    }
  }
  return Dataset(std::move(points));
}

std::vector<Dataset> partition(const Dataset& dataset,
                               const PartitionPlan& plan, Rng& rng) {
  if (plan.num_users < 1) throw ValidationError("num_users must be >= 1");
  size_t total = dataset.size();
  size_t users = static_cast<size_t>(plan.num_users);
  // Shard sizes: fixed when points_per_user is set (surplus points are left
  // out), else an even split where the first `total % users` shards take one
  // extra point so the union is the whole dataset.
  std::vector<size_t> sizes(users);
  if (plan.points_per_user) {
    if (*plan.points_per_user < 1) {
      throw ValidationError("points_per_user must be >= 1");
    }
    size_t per_user = static_cast<size_t>(*plan.points_per_user);
    if (users * per_user > total) {
      throw ValidationError("partition needs " +
                            std::to_string(users * per_user) + " points, have " +
                            std::to_string(total));
    }
    std::fill(sizes.begin(), sizes.end(), per_user);
  } else {
    if (users > total) {
      throw ValidationError("more users than data points");
    }
    for (size_t u = 0; u < users; ++u) {
      sizes[u] = total / users + (u < total % users ? 1 : 0);
    }
  }
  std::vector<size_t> order(total);
  for (size_t i = 0; i < total; ++i) order[i] = i;
  rng.shuffle(order);
  std::vector<Dataset> shards;
  shards.reserve(users);
  size_t cursor = 0;
  for (size_t u = 0; u < users; ++u) {
    std::vector<DataPoint> pts;
    pts.reserve(sizes[u]);
    for (size_t j = 0; j < sizes[u]; ++j) {
      pts.push_back(dataset.points()[order[cursor++]]);
    }
    // Shards keep the parent class set; a small shard may miss a class but
    // must still train one hyperplane per global class.
    shards.emplace_back(std::move(pts), dataset.classes());
  }
  return shards;
}

double quantile_clip_bound(const Dataset& dataset, double q) {
  if (q <= 0 || q >= 1) throw ValidationError("quantile must be in (0,1)");
  std::vector<double> norms;
  norms.reserve(dataset.size());
  for (const auto& pt : dataset.points()) norms.push_back(l2_norm(pt.features));
  std::sort(norms.begin(), norms.end());
  // Type-7: h = (n-1) q, interpolate between floor(h) and floor(h)+1.
  double h = static_cast<double>(norms.size() - 1) * q;
  size_t lo = static_cast<size_t>(h);
  double frac = h - static_cast<double>(lo);
  if (lo + 1 >= norms.size()) return norms.back();
  return norms[lo] + frac * (norms[lo + 1] - norms[lo]);
}

}  // namespace dphelmet::data
