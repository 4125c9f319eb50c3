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

#include "cfclust/types.h"

#include <cmath>
#include <sstream>

namespace cfclust {
namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;  // log(2*pi)
constexpr double kSymmetryTol = 1e-12;
constexpr double kPriorSumTol = 1e-9;
constexpr double kDistinctMeansTol = 1e-20;

std::string DimError(std::string_view what, int got, int want) {
  std::ostringstream os;
  os << what << ": dimension " << got << " does not match " << want;
  return os.str();
}

}  // namespace

void CheckFinite(const Vector& v, std::string_view what) {
  if (v.size() == 0) throw InvalidArgument(std::string(what) + ": empty vector");
  if (!v.allFinite()) {
    throw InvalidArgument(std::string(what) + ": non-finite entry");
  }
}

std::string_view ToString(CovarianceKind kind) {
  switch (kind) {
    case CovarianceKind::kFull: return "full";
    case CovarianceKind::kDiagonal: return "diagonal";
    case CovarianceKind::kSpherical: return "spherical";
  }
  return "?";
}

CovarianceKind CovarianceKindFromString(std::string_view name) {
  if (name == "full") return CovarianceKind::kFull;
  if (name == "diagonal" || name == "diag") return CovarianceKind::kDiagonal;
  if (name == "spherical") return CovarianceKind::kSpherical;
  throw InvalidArgument("unknown covariance kind '" + std::string(name) + "'");
}

CovarianceSpec CovarianceSpec::Full(const Matrix& matrix) {
  if (matrix.rows() == 0 || matrix.rows() != matrix.cols()) {
    throw InvalidArgument("full covariance must be a non-empty square matrix");
  }
  if (!matrix.allFinite()) throw InvalidArgument("full covariance: non-finite entry");
  const double scale = std::max(1.0, matrix.cwiseAbs().maxCoeff());
  if ((matrix - matrix.transpose()).cwiseAbs().maxCoeff() > kSymmetryTol * scale) {
    throw InvalidArgument("full covariance is not symmetric");
  }
  CovarianceSpec spec;
  spec.kind_ = CovarianceKind::kFull;
  spec.dim_ = static_cast<int>(matrix.rows());
  spec.matrix_ = 0.5 * (matrix + matrix.transpose());
  spec.llt_.compute(spec.matrix_);
  if (spec.llt_.info() != Eigen::Success) {
    throw InvalidArgument("full covariance is not positive definite");
  }
  const Matrix& l = spec.llt_.matrixLLT();
  for (int i = 0; i < spec.dim_; ++i) {
    if (!(l(i, i) > 0.0)) throw InvalidArgument("full covariance is not positive definite");
  }
  spec.log_det_ = 2.0 * l.diagonal().array().log().sum();
  spec.variances_ = spec.matrix_.diagonal();
  return spec;
}

CovarianceSpec CovarianceSpec::Diagonal(const Vector& variances) {
  CheckFinite(variances, "diagonal covariance");
  if ((variances.array() <= 0.0).any()) {
    throw InvalidArgument("diagonal covariance: variances must be positive");
  }
  CovarianceSpec spec;
  spec.kind_ = CovarianceKind::kDiagonal;
  spec.dim_ = static_cast<int>(variances.size());
  spec.variances_ = variances;
  spec.log_det_ = variances.array().log().sum();
  return spec;
}

CovarianceSpec CovarianceSpec::Spherical(double variance, int dim) {
  if (dim < 1) throw InvalidArgument("spherical covariance: dimension must be >= 1");
  if (!std::isfinite(variance) || variance <= 0.0) {
    throw InvalidArgument("spherical covariance: variance must be positive");
  }
  CovarianceSpec spec;
  spec.kind_ = CovarianceKind::kSpherical;
  spec.dim_ = dim;
  spec.variances_ = Vector::Constant(dim, variance);
  spec.log_det_ = dim * std::log(variance);
  return spec;
}

Vector CovarianceSpec::Variances() const { return variances_; }

Matrix CovarianceSpec::Dense() const {
  if (kind_ == CovarianceKind::kFull) return matrix_;
  return variances_.asDiagonal();
}

Matrix CovarianceSpec::Precision() const {
  if (kind_ == CovarianceKind::kFull) {
    Matrix inv = llt_.solve(Matrix::Identity(dim_, dim_));
    return 0.5 * (inv + inv.transpose());
  }
  return variances_.cwiseInverse().asDiagonal();
}

double CovarianceSpec::MahalanobisSq(const Vector& centred) const {
  if (kind_ == CovarianceKind::kFull) {
    const Vector w = llt_.matrixL().solve(centred);
    return w.squaredNorm();
  }
  return (centred.array().square() / variances_.array()).sum();
}

double LogDensity(const GaussianComponent& component, const Vector& x) {
  const int d = static_cast<int>(component.mean.size());
  if (x.size() != d) throw InvalidArgument(DimError("log_density", x.size(), d));
  const double maha = component.covariance.MahalanobisSq(x - component.mean);
  return -0.5 * (maha + component.covariance.log_det() + d * kLog2Pi);
}

Vector Standardization::Apply(const Vector& raw) const {
  if (raw.size() != mean.size()) {
    throw InvalidArgument(DimError("standardization", raw.size(), mean.size()));
  }
  return (raw - mean).cwiseQuotient(scale);
}

Vector Standardization::Invert(const Vector& standardized) const {
  if (standardized.size() != mean.size()) {
    throw InvalidArgument(DimError("standardization", standardized.size(), mean.size()));
  }
  return standardized.cwiseProduct(scale) + mean;
}

std::string_view ToString(ModelKind kind) {
  return kind == ModelKind::kKMeans ? "kmeans" : "gaussian";
}

ClusterModel ClusterModel::KMeans(std::vector<Vector> centers,
                                  std::optional<Standardization> standardization) {
  ClusterModel model;
  model.kind_ = ModelKind::kKMeans;
  model.dim_ = centers.empty() ? 0 : static_cast<int>(centers.front().size());
  model.means_ = std::move(centers);
  model.standardization_ = std::move(standardization);
  model.Validate();
  return model;
}

ClusterModel ClusterModel::Gaussian(std::vector<GaussianComponent> components,
                                    std::optional<Standardization> standardization) {
  ClusterModel model;
  model.kind_ = ModelKind::kGaussian;
  model.dim_ = components.empty() ? 0 : static_cast<int>(components.front().mean.size());
  for (const auto& c : components) model.means_.push_back(c.mean);
  model.components_ = std::move(components);
  model.standardization_ = std::move(standardization);
  model.Validate();
  return model;
}

void ClusterModel::Validate() const {
  const int m = num_clusters();
  if (m < 2) throw InvalidArgument("cluster model needs at least 2 clusters");
  if (dim_ < 1) throw InvalidArgument("cluster model dimension must be >= 1");
  for (int k = 0; k < m; ++k) {
    if (means_[k].size() != dim_) {
      throw InvalidArgument(DimError("cluster " + std::to_string(k) + " mean",
                                     means_[k].size(), dim_));
    }
    CheckFinite(means_[k], "cluster mean");
  }
  for (int a = 0; a < m; ++a) {
    for (int b = a + 1; b < m; ++b) {
      if ((means_[a] - means_[b]).squaredNorm() <= kDistinctMeansTol) {
        throw InvalidArgument("clusters " + std::to_string(a) + " and " +
                              std::to_string(b) + " have identical means");
      }
    }
  }
  if (kind_ == ModelKind::kGaussian) {
    double sum = 0.0;
    for (int k = 0; k < m; ++k) {
      const auto& c = components_[k];
      if (c.covariance.dim() != dim_) {
        throw InvalidArgument(DimError("component " + std::to_string(k) + " covariance",
                                       c.covariance.dim(), dim_));
      }
      if (!(c.prior > 0.0 && c.prior <= 1.0)) {
        throw InvalidArgument("component " + std::to_string(k) + " prior outside (0,1]");
      }
      sum += c.prior;
    }
    if (std::abs(sum - 1.0) > kPriorSumTol) {
      throw InvalidArgument("component priors sum to " + std::to_string(sum) + ", not 1");
    }
  }
  if (standardization_) {
    const auto& s = *standardization_;
    if (s.mean.size() != dim_ || s.scale.size() != dim_) {
      throw InvalidArgument("standardization dimension mismatch");
    }
    CheckFinite(s.mean, "standardization mean");
    CheckFinite(s.scale, "standardization scale");
    if ((s.scale.array() <= 0.0).any()) {
      throw InvalidArgument("standardization scale must be positive");
    }
  }
}

Vector ClusterModel::ToModelSpace(const Vector& raw) const {
  if (raw.size() != dim_) throw InvalidArgument(DimError("input", raw.size(), dim_));
  return standardization_ ? standardization_->Apply(raw) : raw;
}

Vector ClusterModel::ToRawSpace(const Vector& model_space) const {
  if (model_space.size() != dim_) {
    throw InvalidArgument(DimError("input", model_space.size(), dim_));
  }
  return standardization_ ? standardization_->Invert(model_space) : model_space;
}

ClusterModel ClusterModel::WithPriors(const std::vector<double>& priors) const {
  if (static_cast<int>(priors.size()) != num_clusters()) {
    throw InvalidArgument("prior count does not match cluster count");
  }
  ClusterModel copy = *this;
  if (kind_ == ModelKind::kGaussian) {
    for (int k = 0; k < num_clusters(); ++k) copy.components_[k].prior = priors[k];
    copy.Validate();
  }
  return copy;
}

Mask::Mask(std::vector<bool> bits) : bits_(std::move(bits)) {
  for (int i = 0; i < static_cast<int>(bits_.size()); ++i) {
    (bits_[i] ? free_ : fixed_).push_back(i);
  }
}

Mask Mask::AllFree(int dim) { return Mask(std::vector<bool>(dim, true)); }

Mask Mask::Parse(std::string_view text) {
  std::vector<bool> bits;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = text.find(',', pos);
    std::string_view tok =
        text.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
    while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
    while (!tok.empty() && tok.back() == ' ') tok.remove_suffix(1);
    if (tok == "1") {
      bits.push_back(true);
    } else if (tok == "0") {
      bits.push_back(false);
    } else {
      throw InvalidArgument("mask entries must be 0 or 1, got '" + std::string(tok) + "'");
    }
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return Mask(std::move(bits));
}

std::string Mask::ToString() const {
  std::string out;
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    if (i) out += ',';
    out += bits_[i] ? '1' : '0';
  }
  return out;
}

std::string_view ToString(CfStatus status) {
  switch (status) {
    case CfStatus::kOk: return "ok";
    case CfStatus::kDegenerateIdentity: return "degenerate_identity";
    case CfStatus::kNoFeasibleSolution: return "no_feasible_solution";
    case CfStatus::kNoRootFound: return "no_root_found";
  }
  return "?";
}

CfStatus CfStatusFromString(std::string_view name) {
  if (name == "ok") return CfStatus::kOk;
  if (name == "degenerate_identity") return CfStatus::kDegenerateIdentity;
  if (name == "no_feasible_solution") return CfStatus::kNoFeasibleSolution;
  if (name == "no_root_found") return CfStatus::kNoRootFound;
  throw InvalidArgument("unknown status '" + std::string(name) + "'");
}

std::string_view ToString(Uniqueness u) {
  return u == Uniqueness::kUnique ? "unique" : "indeterminate";
}

double DistanceSq(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw InvalidArgument(DimError("distance_sq", b.size(), a.size()));
  return (a - b).squaredNorm();
}

double Preference(const Vector& a, const Vector& b) { return std::exp(-DistanceSq(a, b)); }

double AssignmentScore(const ClusterModel& model, ClusterId k, const Vector& x) {
  if (model.kind() == ModelKind::kKMeans) return -DistanceSq(x, model.mean(k));
  const auto& c = model.component(k);
  return std::log(c.prior) + LogDensity(c, x);
}

ClusterId AssignCluster(const ClusterModel& model, const Vector& x) {
  if (x.size() != model.dim()) throw InvalidArgument(DimError("assign_cluster", x.size(), model.dim()));
  CheckFinite(x, "assign_cluster input");
  ClusterId best = 0;
  double best_score = AssignmentScore(model, 0, x);
  for (ClusterId k = 1; k < model.num_clusters(); ++k) {
    const double s = AssignmentScore(model, k, x);
    if (s > best_score) {
      best = k;
      best_score = s;
    }
  }
  return best;
}

}  // namespace cfclust
