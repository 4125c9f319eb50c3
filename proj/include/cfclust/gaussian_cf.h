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

// Counterfactuals for a pair of Gaussian clusters.
//
// The counterfactual minimises |z_F - y_F|^2 subject to
//
//   g(z) = (z-m_t)^T S_t^-1 (z-m_t) - (z-m_s)^T S_s^-1 (z-m_s) + c_alpha = 0,
//   c_alpha = ln(|S_t|/|S_s|) - 2 ln(pi_t/pi_s) + 2 ln(1+eps),
//
// with z_G = y_G for the fixed coordinates. Stationarity of the Lagrangian
// |z_F - y_F|^2 - lambda g(z) gives the one-parameter family
//
//   z_F(lambda) = (I - lambda D)^-1 (y_F - lambda d),
//   D = S_t^-1,FF - S_s^-1,FF,
//   d = S_t^-1,FF m_tF - S_s^-1,FF m_sF
//       - (S_t^-1,FG (y_G - m_tG) - S_s^-1,FG (y_G - m_sG)),
//
// and the solver looks for the real roots of g(z_F(lambda)). The same sign
// convention is used for every covariance kind; for diagonal covariances the
// map reduces to z_i = (y_i - lambda d_i) / (1 - lambda D_i).
//
// Root search: in the eigenbasis of D (D = Q diag(mu) Q^T) and with
// h = D y_F - d, the residual along the family is the rational function
//
//   g(lambda) = g(y) + sum_j mu_j u_j^2 + 2 h~_j u_j,
//   u_j = lambda h~_j / (1 - lambda mu_j),   h~ = Q^T h,
//
// which is smooth between the poles 1/mu_j and monotone increasing on the
// interval containing lambda = 0. Every interval between consecutive poles
// is sampled densely, sign changes are bisected, and the candidate with the
// smallest distance to the factual wins. Candidates are re-evaluated with the
// direct z(lambda) map and the direct residual before being accepted.

#ifndef CFCLUST_GAUSSIAN_CF_H_
#define CFCLUST_GAUSSIAN_CF_H_

#include <stdexcept>
#include <vector>

#include "cfclust/types.h"

namespace cfclust {

// Raised by ZOfLambda when (I - lambda D) is singular at working precision.
class PoleError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Which algebra the solver uses. Mixed-kind pairs fall back to the most
// general kind of the two.
enum class SolverPath { kFull, kDiagonal, kSpherical };

std::string_view ToString(SolverPath path);

// Blocks of a precision matrix partitioned by the free (F) and fixed (G)
// index sets.
struct PrecisionBlocks {
  Matrix ff;
  Matrix fg;
  Matrix gg;
};

class GaussianPairProblem {
 public:
  GaussianPairProblem(const GaussianComponent& source, const GaussianComponent& target,
                      const Vector& factual, const Mask& mask, double epsilon);

  SolverPath path() const { return path_; }
  const GaussianComponent& source() const { return source_; }
  const GaussianComponent& target() const { return target_; }
  const Vector& factual() const { return factual_; }
  const Mask& mask() const { return mask_; }
  double epsilon() const { return epsilon_; }
  int num_free() const { return static_cast<int>(mask_.free_indices().size()); }

  double c_alpha() const { return c_alpha_; }
  // |F| x |F|; diagonal for the diagonal/spherical paths.
  const Matrix& D() const { return d_matrix_; }
  // The linear term d of the stationarity map, length |F|.
  const Vector& d_vec() const { return d_vec_; }
  // Only populated on the full path.
  const PrecisionBlocks& source_blocks() const { return source_blocks_; }
  const PrecisionBlocks& target_blocks() const { return target_blocks_; }

  // Eigenvalues of D (ascending for the full path, in free-index order
  // otherwise) with |mu| <= 1e-12 snapped to zero.
  const Vector& eigenvalues() const { return mu_; }
  const Matrix& eigenvectors() const { return q_; }
  // Sorted, de-duplicated lambda values where z(lambda) is undefined.
  const std::vector<double>& poles() const { return poles_; }
  // True when D vanishes and the constraint is affine in z_F.
  bool affine() const { return affine_; }

  // g(y): residual at the factual.
  double residual_at_factual() const { return g0_; }
  // Residual along the stationary family via the eigenbasis form. Cheap
  // (O(|F|) per call); used for the root scan.
  double ResidualAlongFamily(double lambda) const;
  // |z(lambda) - y|^2 via the eigenbasis form.
  double DistanceAlongFamily(double lambda) const;
  // Distance from lambda to the nearest pole, or +inf without poles.
  double DistanceToNearestPole(double lambda) const;

  // Half of the gradient of g with respect to z_F at z.
  Vector HalfGradientFree(const Vector& z) const;

 private:
  friend Vector ZOfLambda(const GaussianPairProblem&, double);
  friend CfResult SolveGaussianCf(const GaussianPairProblem&);

  Vector SpectralStep(double lambda) const;

  GaussianComponent source_;
  GaussianComponent target_;
  Vector factual_;
  Mask mask_;
  double epsilon_ = 0.0;
  SolverPath path_ = SolverPath::kFull;

  double c_alpha_ = 0.0;
  Matrix d_matrix_;
  Vector d_vec_;
  PrecisionBlocks source_blocks_;
  PrecisionBlocks target_blocks_;

  Vector mu_;
  Matrix q_;
  Vector h_tilde_;
  double g0_ = 0.0;
  std::vector<double> poles_;
  bool affine_ = false;
};

// Pole-exclusion radius around a pole p.
double PoleExclusionRadius(double pole);

// g(z): zero iff pi_t p_t(z) = (1 + eps) pi_s p_s(z).
double ConstraintResidual(const GaussianPairProblem& problem, const Vector& z);

// Stationarity map z(lambda), fixed coordinates copied from the factual.
// Throws PoleError within the exclusion radius of a pole.
Vector ZOfLambda(const GaussianPairProblem& problem, double lambda);

// Full solve: scan, bracket, bisect, select the minimum-distance root.
CfResult SolveGaussianCf(const GaussianPairProblem& problem);

Uniqueness ClassifyUniqueness(const GaussianPairProblem& problem);

}  // namespace cfclust

#endif  // CFCLUST_GAUSSIAN_CF_H_
