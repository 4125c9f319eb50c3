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

// Closed-form counterfactuals for a pair of k-means centers.
//
// The constraint set |z - m_s|^2 = |z - m_t|^2 + eps |m_t - m_s|^2 is the
// hyperplane z^T v = c with v = m_s - m_t. Restricting z to the free
// coordinates turns the problem into an orthogonal projection of y_F onto a
// hyperplane of the free subspace.

#ifndef CFCLUST_KMEANS_CF_H_
#define CFCLUST_KMEANS_CF_H_

#include "cfclust/types.h"

namespace cfclust {

struct KmeansConstraint {
  Vector v;           // m_s - m_t
  double c = 0.0;     // (|m_s|^2 - |m_t|^2 - d_eps) / 2
  double d_eps = 0.0;  // eps |m_t - m_s|^2
  Vector v_free;
  Vector v_fixed;
};

KmeansConstraint BuildKmeansConstraint(const Vector& source_center,
                                       const Vector& target_center, double epsilon,
                                       const Mask& mask);

// z^T v - c.
double PlaneResidual(const KmeansConstraint& constraint, const Vector& z);

// Nearest point of the constraint plane that keeps the fixed coordinates of
// `factual`. `elapsed`, verdicts and raw-space fields are left to the caller.
CfResult SolveKmeansCf(const Vector& factual, const KmeansConstraint& constraint,
                       const Mask& mask);

}  // namespace cfclust

#endif  // CFCLUST_KMEANS_CF_H_
