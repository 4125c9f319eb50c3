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

// Core domain types shared by every counterfactual solver: covariance
// representations, Gaussian components, cluster models, actionability masks,
// requests and results, plus the cluster-assignment rule and the distance /
// preference primitives.
//
// All types are immutable after construction and safe to share between
// threads.

#ifndef CFCLUST_TYPES_H_
#define CFCLUST_TYPES_H_

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cfclust {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using ClusterId = int;

// Raised when an input violates a documented invariant (dimension mismatch,
// non-finite values, invalid covariance, ...).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Throws InvalidArgument unless `v` is non-empty and every entry is finite.
void CheckFinite(const Vector& v, std::string_view what);

enum class CovarianceKind { kFull, kDiagonal, kSpherical };

std::string_view ToString(CovarianceKind kind);
CovarianceKind CovarianceKindFromString(std::string_view name);

// A covariance matrix in one of three parameterisations. The Cholesky factor
// (full) or the reciprocal variances (diagonal / spherical) and the
// log-determinant are computed once at construction; a non positive-definite
// matrix is a construction error.
class CovarianceSpec {
 public:
  static CovarianceSpec Full(const Matrix& matrix);
  static CovarianceSpec Diagonal(const Vector& variances);
  static CovarianceSpec Spherical(double variance, int dim);

  CovarianceKind kind() const { return kind_; }
  int dim() const { return dim_; }

  // Variances along the diagonal (all kinds).
  Vector Variances() const;
  // Single variance; only meaningful for the spherical kind.
  double spherical_variance() const { return variances_(0); }
  // Per-feature variances for diagonal/spherical kinds.
  const Vector& diagonal_variances() const { return variances_; }

  // Dense d x d covariance matrix.
  Matrix Dense() const;
  // Dense d x d inverse (precision) matrix.
  Matrix Precision() const;
  double log_det() const { return log_det_; }

  // (x)^T S^{-1} (x) for a centred vector x.
  double MahalanobisSq(const Vector& centred) const;

 private:
  CovarianceSpec() = default;

  CovarianceKind kind_ = CovarianceKind::kSpherical;
  int dim_ = 0;
  // Full kind: the matrix and its lower Cholesky factor.
  Matrix matrix_;
  Eigen::LLT<Matrix> llt_;
  // Diagonal/spherical kinds: per-feature variances (spherical replicates).
  Vector variances_;
  double log_det_ = 0.0;
};

struct GaussianComponent {
  Vector mean;
  CovarianceSpec covariance;
  double prior = 1.0;
};

// log N(x; mean, S). Exact component-wise sums for diagonal/spherical kinds.
double LogDensity(const GaussianComponent& component, const Vector& x);

// Per-feature z-score parameters applied once at ingestion.
struct Standardization {
  Vector mean;
  Vector scale;

  Vector Apply(const Vector& raw) const;
  Vector Invert(const Vector& standardized) const;
};

enum class ModelKind { kKMeans, kGaussian };

std::string_view ToString(ModelKind kind);

// A fitted clustering solution. Centers / component parameters live in the
// (optionally) standardized feature space; raw inputs must be passed through
// ToModelSpace() before being compared with them.
class ClusterModel {
 public:
  static ClusterModel KMeans(std::vector<Vector> centers,
                             std::optional<Standardization> standardization = {});
  static ClusterModel Gaussian(std::vector<GaussianComponent> components,
                               std::optional<Standardization> standardization = {});

  ModelKind kind() const { return kind_; }
  int dim() const { return dim_; }
  int num_clusters() const { return static_cast<int>(means_.size()); }

  // Center (k-means) or mean (Gaussian) of cluster k in model space.
  const Vector& mean(ClusterId k) const { return means_.at(k); }
  const std::vector<Vector>& centers() const { return means_; }
  const std::vector<GaussianComponent>& components() const { return components_; }
  const GaussianComponent& component(ClusterId k) const { return components_.at(k); }
  const std::optional<Standardization>& standardization() const {
    return standardization_;
  }

  Vector ToModelSpace(const Vector& raw) const;
  Vector ToRawSpace(const Vector& model_space) const;

  // Returns a copy with every prior replaced; re-validates the sum.
  ClusterModel WithPriors(const std::vector<double>& priors) const;

 private:
  ClusterModel() = default;
  void Validate() const;

  ModelKind kind_ = ModelKind::kKMeans;
  int dim_ = 0;
  std::vector<Vector> means_;
  std::vector<GaussianComponent> components_;
  std::optional<Standardization> standardization_;
};

// Per-feature actionability: true = free (may change), false = fixed.
class Mask {
 public:
  Mask() = default;
  explicit Mask(std::vector<bool> bits);
  static Mask AllFree(int dim);
  // Parses "1,0,1".
  static Mask Parse(std::string_view text);

  int size() const { return static_cast<int>(bits_.size()); }
  bool is_free(int i) const { return bits_.at(i); }
  const std::vector<int>& free_indices() const { return free_; }
  const std::vector<int>& fixed_indices() const { return fixed_; }
  const std::vector<bool>& bits() const { return bits_; }
  std::string ToString() const;

 private:
  std::vector<bool> bits_;
  std::vector<int> free_;
  std::vector<int> fixed_;
};

// Default plausibility factor when none is given: places counterfactuals just
// inside the target cluster.
inline constexpr double kDefaultEpsilon = 1e-5;

struct CfRequest {
  Vector factual;
  std::optional<ClusterId> source;
  ClusterId target = 0;
  Mask mask;
  double epsilon = kDefaultEpsilon;
};

enum class CfStatus { kOk, kDegenerateIdentity, kNoFeasibleSolution, kNoRootFound };

std::string_view ToString(CfStatus status);
CfStatus CfStatusFromString(std::string_view name);

enum class Uniqueness { kUnique, kIndeterminate };

std::string_view ToString(Uniqueness u);

struct CfResult {
  // Counterfactual in raw (original) units; fixed features copied verbatim
  // from the factual.
  Vector counterfactual;
  // Counterfactual in model space (standardized when the model is).
  Vector counterfactual_model;
  // Squared Euclidean distance to the factual, in model space.
  double distance_sq = 0.0;
  std::optional<double> lambda;
  // Constraint value at the counterfactual (plane equation for k-means,
  // log-density constraint for Gaussians).
  double residual = 0.0;
  int roots_found = 0;
  CfStatus status = CfStatus::kOk;
  std::chrono::nanoseconds elapsed{0};

  ClusterId source = -1;
  ClusterId target = -1;
  bool member_strict = false;
  bool member_tolerant = false;
  std::optional<Uniqueness> uniqueness;
  std::string detail;

  bool succeeded() const {
    return status == CfStatus::kOk || status == CfStatus::kDegenerateIdentity;
  }
};

// |a - b|^2.
double DistanceSq(const Vector& a, const Vector& b);
// exp(-|a - b|^2).
double Preference(const Vector& a, const Vector& b);

// Per-cluster assignment score in model space: log(pi_k) + log p_k(x) for
// Gaussian models, -|x - m_k|^2 for k-means.
double AssignmentScore(const ClusterModel& model, ClusterId k, const Vector& x);

// Index of the maximal assignment score for a model-space point. Ties are
// broken toward the lowest cluster id.
ClusterId AssignCluster(const ClusterModel& model, const Vector& x);

}  // namespace cfclust

#endif  // CFCLUST_TYPES_H_
