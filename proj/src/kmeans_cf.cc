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

#include "cfclust/kmeans_cf.h"

#include <cmath>

namespace cfclust {
namespace {

// Scale-relative tolerance shared by the degenerate test and plane membership.
constexpr double kPlaneTol = 1e-9;

Vector Select(const Vector& x, const std::vector<int>& idx) {
  Vector out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out(i) = x(idx[i]);
  return out;
}

}  // namespace

KmeansConstraint BuildKmeansConstraint(const Vector& source_center,
                                       const Vector& target_center, double epsilon,
                                       const Mask& mask) {
  const auto d = source_center.size();
  if (target_center.size() != d || mask.size() != d) {
    throw InvalidArgument("k-means constraint: dimension mismatch");
  }
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw InvalidArgument("plausibility factor must be finite and >= 0");
  }
  KmeansConstraint out;
  out.v = source_center - target_center;
  const double gap = out.v.squaredNorm();
  if (gap == 0.0) throw InvalidArgument("k-means constraint: identical centers");
  out.d_eps = epsilon * gap;
  out.c = 0.5 * (source_center.squaredNorm() - target_center.squaredNorm() - out.d_eps);
  out.v_free = Select(out.v, mask.free_indices());
  out.v_fixed = Select(out.v, mask.fixed_indices());
  return out;
}

double PlaneResidual(const KmeansConstraint& constraint, const Vector& z) {
  return z.dot(constraint.v) - constraint.c;
}

CfResult SolveKmeansCf(const Vector& factual, const KmeansConstraint& constraint,
                       const Mask& mask) {
  if (factual.size() != constraint.v.size() || mask.size() != factual.size()) {
    throw InvalidArgument("k-means solve: dimension mismatch");
  }
  CheckFinite(factual, "factual");
  const auto& free = mask.free_indices();
  const auto& fixed = mask.fixed_indices();

  const Vector y_free = Select(factual, free);
  const Vector y_fixed = Select(factual, fixed);
  const double c_reduced = constraint.c - y_fixed.dot(constraint.v_fixed);
  const double tol = kPlaneTol * (1.0 + std::abs(constraint.c));

  CfResult result;
  result.counterfactual_model = factual;
  const double v_free_sq = constraint.v_free.squaredNorm();
  if (v_free_sq == 0.0) {
    result.residual = PlaneResidual(constraint, factual);
    if (std::abs(c_reduced) <= tol) {
      result.status = CfStatus::kDegenerateIdentity;
      result.detail = "factual already satisfies the constraint; no free direction";
    } else {
      result.status = CfStatus::kNoFeasibleSolution;
      result.detail = "free coordinates cannot move along m_s - m_t";
    }
    return result;
  }

  const double step = (y_free.dot(constraint.v_free) - c_reduced) / v_free_sq;
  for (std::size_t i = 0; i < free.size(); ++i) {
    result.counterfactual_model(free[i]) = y_free(i) - step * constraint.v_free(i);
  }
  result.distance_sq = DistanceSq(result.counterfactual_model, factual);
  result.residual = PlaneResidual(constraint, result.counterfactual_model);
  result.roots_found = 1;
  result.status = CfStatus::kOk;
  return result;
}

}  // namespace cfclust
