/*
 * Copyright 2026 The cfclust Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Model fitting: Lloyd's k-means with k-means++ seeding and EM for Gaussian
// mixtures with full, diagonal or spherical covariances.

#ifndef CFCLUST_FIT_H_
#define CFCLUST_FIT_H_

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cfclust/types.h"

namespace cfclust {

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Dataset {
  Matrix rows;  // N x d
  std::vector<std::string> feature_names;
  // Values of an excluded label column, when one was named at load time.
  std::vector<std::string> labels;

  int size() const { return static_cast<int>(rows.rows()); }
  int dim() const { return static_cast<int>(rows.cols()); }
  Vector row(int i) const { return rows.row(i).transpose(); }
};

enum class FitAlgorithm { kKMeans, kGmm };

struct FitConfig {
  FitAlgorithm algorithm = FitAlgorithm::kKMeans;
  CovarianceKind covariance = CovarianceKind::kFull;
  int num_clusters = 2;
  int max_iter = 300;
  double rel_tol = 1e-6;
  std::uint64_t seed = 0;
  int restarts = 1;
  bool standardize = true;

  void Validate() const;
};

struct KMeansFit {
  std::vector<Vector> centers;  // model space
  std::vector<int> labels;
  double inertia = 0.0;
  int iterations = 0;
  // Inertia after every assignment/update round of the winning restart.
  std::vector<double> inertia_history;
};

struct GmmFit {
  std::vector<GaussianComponent> components;  // model space
  double log_likelihood = 0.0;
  int iterations = 0;
  std::vector<double> log_likelihood_history;
  int jitter_events = 0;
};

// Per-feature z-score parameters of the data; zero spreads map to scale 1.
Standardization ComputeStandardization(const Matrix& rows);

// Raw solvers on model-space rows. Valid for any num_clusters >= 1.
KMeansFit RunKMeans(const Matrix& rows, const FitConfig& config);
GmmFit RunEm(const Matrix& rows, const FitConfig& config);

// Wrap the raw solvers into validated cluster models, applying
// standardization first when config.standardize is set.
ClusterModel FitKMeans(const Dataset& data, const FitConfig& config,
                       KMeansFit* details = nullptr);
ClusterModel FitGmm(const Dataset& data, const FitConfig& config, GmmFit* details = nullptr);

enum class PriorPolicy { kFrequency, kUniform };

// Replaces Gaussian priors by hard-assignment frequencies of `data` (raw
// units) or by 1/M. A k-means model is returned unchanged.
ClusterModel ApplyPriorPolicy(const ClusterModel& model, PriorPolicy policy,
                              const Dataset* data = nullptr);

}  // namespace cfclust

#endif  // CFCLUST_FIT_H_
