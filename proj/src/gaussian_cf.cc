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

#include "cfclust/gaussian_cf.h"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <sstream>

namespace cfclust {
namespace {

constexpr double kZeroEigen = 1e-12;
constexpr double kDefiniteEigen = 1e-10;
constexpr double kAcceptTol = 1e-8;
constexpr double kBisectTol = 1e-10;
constexpr int kMaxBisect = 200;
constexpr double kDomainFactor = 1e6;
constexpr int kUniformSamples = 256;
constexpr int kGeometricSamples = 128;
constexpr double kTieTol = 1e-12;
// Relative size of h~_j below which the pole 1/mu_j is treated as removable.
constexpr double kHardCaseTol = 1e-10;

Vector Select(const Vector& x, const std::vector<int>& idx) {
  Vector out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out(i) = x(idx[i]);
  return out;
}

Matrix SelectBlock(const Matrix& m, const std::vector<int>& rows,
                   const std::vector<int>& cols) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) out(r, c) = m(rows[r], cols[c]);
  }
  return out;
}

PrecisionBlocks Partition(const Matrix& precision, const Mask& mask) {
  return {SelectBlock(precision, mask.free_indices(), mask.free_indices()),
          SelectBlock(precision, mask.free_indices(), mask.fixed_indices()),
          SelectBlock(precision, mask.fixed_indices(), mask.fixed_indices())};
}

SolverPath PathFor(CovarianceKind a, CovarianceKind b) {
  if (a == CovarianceKind::kFull || b == CovarianceKind::kFull) return SolverPath::kFull;
  if (a == CovarianceKind::kDiagonal || b == CovarianceKind::kDiagonal) {
    return SolverPath::kDiagonal;
  }
  return SolverPath::kSpherical;
}

// Monotone sample grid for one open interval between consecutive poles (or
// the domain bounds): uniform points, geometric clusters next to each end,
// and geometric clusters around zero when the interval contains it.
std::vector<double> IntervalSamples(double lo, bool lo_is_pole, double hi, bool hi_is_pole) {
  const double a = lo_is_pole ? lo + 2.0 * PoleExclusionRadius(lo) : lo;
  const double b = hi_is_pole ? hi - 2.0 * PoleExclusionRadius(hi) : hi;
  std::vector<double> pts;
  if (!(a < b)) return pts;
  const double width = b - a;
  pts.reserve(kUniformSamples + 4 * kGeometricSamples + 1);
  for (int i = 0; i < kUniformSamples; ++i) {
    pts.push_back(a + width * i / (kUniformSamples - 1));
  }
  // Offsets from each end spanning width * [1e-13, 0.5].
  for (int i = 0; i < kGeometricSamples; ++i) {
    const double t = -13.0 + (13.0 + std::log10(0.5)) * i / (kGeometricSamples - 1);
    const double off = width * std::pow(10.0, t);
    pts.push_back(a + off);
    pts.push_back(b - off);
  }
  if (a < 0.0 && 0.0 < b) {
    pts.push_back(0.0);
    const double top = std::log10(std::max(-a, b));
    for (int i = 0; i < kGeometricSamples; ++i) {
      const double t = -12.0 + (top + 12.0) * i / (kGeometricSamples - 1);
      const double off = std::pow(10.0, t);
      if (off < b) pts.push_back(off);
      if (-off > a) pts.push_back(-off);
    }
  }
  std::erase_if(pts, [&](double x) { return !(x >= a && x <= b); });
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

template <typename F>
double Bisect(const F& g, double lo, double glo, double hi, double ghi, double tol) {
  for (int it = 0; it < kMaxBisect; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double gm = g(mid);
    if (std::abs(gm) <= tol) return mid;
    if ((gm < 0.0) == (glo < 0.0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
      ghi = gm;
    }
  }
  return std::abs(glo) <= std::abs(ghi) ? lo : hi;
}

struct Candidate {
  double lambda;
  Vector z;
  double residual;
  double distance_sq;
};

}  // namespace

std::string_view ToString(SolverPath path) {
  switch (path) {
    case SolverPath::kFull: return "full";
    case SolverPath::kDiagonal: return "diagonal";
    case SolverPath::kSpherical: return "spherical";
  }
  return "?";
}

double PoleExclusionRadius(double pole) { return 1e-12 * (1.0 + std::abs(pole)); }

GaussianPairProblem::GaussianPairProblem(const GaussianComponent& source,
                                         const GaussianComponent& target,
                                         const Vector& factual, const Mask& mask,
                                         double epsilon)
    : source_(source), target_(target), factual_(factual), mask_(mask), epsilon_(epsilon) {
  const auto d = factual.size();
  if (source.mean.size() != d || target.mean.size() != d || mask.size() != d ||
      source.covariance.dim() != d || target.covariance.dim() != d) {
    throw InvalidArgument("gaussian pair problem: dimension mismatch");
  }
  CheckFinite(factual, "factual");
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw InvalidArgument("plausibility factor must be finite and >= 0");
  }
  path_ = PathFor(source.covariance.kind(), target.covariance.kind());
  c_alpha_ = (target.covariance.log_det() - source.covariance.log_det()) -
             2.0 * (std::log(target.prior) - std::log(source.prior)) +
             2.0 * std::log1p(epsilon);

  const auto& free = mask.free_indices();
  const auto& fixed = mask.fixed_indices();
  const Vector y_free = Select(factual, free);
  const Eigen::Index nf = static_cast<Eigen::Index>(free.size());

  if (path_ == SolverPath::kFull) {
    source_blocks_ = Partition(source.covariance.Precision(), mask);
    target_blocks_ = Partition(target.covariance.Precision(), mask);
    d_matrix_ = target_blocks_.ff - source_blocks_.ff;
    d_matrix_ = 0.5 * (d_matrix_ + d_matrix_.transpose());
    const Vector ut = Select(factual, fixed) - Select(target.mean, fixed);
    const Vector us = Select(factual, fixed) - Select(source.mean, fixed);
    d_vec_ = target_blocks_.ff * Select(target.mean, free) -
             source_blocks_.ff * Select(source.mean, free) -
             (target_blocks_.fg * ut - source_blocks_.fg * us);
    if (nf > 0) {
      Eigen::SelfAdjointEigenSolver<Matrix> eig(d_matrix_);
      mu_ = eig.eigenvalues();
      q_ = eig.eigenvectors();
    }
  } else {
    const Vector inv_s = Select(source.covariance.diagonal_variances(), free).cwiseInverse();
    const Vector inv_t = Select(target.covariance.diagonal_variances(), free).cwiseInverse();
    const Vector diag = inv_t - inv_s;
    d_matrix_ = diag.asDiagonal();
    d_vec_ = Select(target.mean, free).cwiseProduct(inv_t) -
             Select(source.mean, free).cwiseProduct(inv_s);
    mu_ = diag;
  }
  if (mu_.size() != nf) mu_ = Vector::Zero(nf);
  for (Eigen::Index j = 0; j < nf; ++j) {
    if (std::abs(mu_(j)) <= kZeroEigen) mu_(j) = 0.0;
  }

  const Vector h = d_matrix_ * y_free - d_vec_;
  h_tilde_ = q_.size() ? Vector(q_.transpose() * h) : h;
  g0_ = ConstraintResidual(*this, factual);

  affine_ = true;
  for (Eigen::Index j = 0; j < nf; ++j) {
    if (mu_(j) != 0.0) {
      affine_ = false;
      poles_.push_back(1.0 / mu_(j));
    }
  }
  std::sort(poles_.begin(), poles_.end());
  std::vector<double> unique_poles;
  for (double p : poles_) {
    if (unique_poles.empty() || p - unique_poles.back() > PoleExclusionRadius(p)) {
      unique_poles.push_back(p);
    }
  }
  poles_ = std::move(unique_poles);
}

double GaussianPairProblem::ResidualAlongFamily(double lambda) const {
  double g = g0_;
  for (Eigen::Index j = 0; j < mu_.size(); ++j) {
    const double u = lambda * h_tilde_(j) / (1.0 - lambda * mu_(j));
    g += u * (mu_(j) * u + 2.0 * h_tilde_(j));
  }
  return g;
}

double GaussianPairProblem::DistanceAlongFamily(double lambda) const {
  double dist = 0.0;
  for (Eigen::Index j = 0; j < mu_.size(); ++j) {
    const double u = lambda * h_tilde_(j) / (1.0 - lambda * mu_(j));
    dist += u * u;
  }
  return dist;
}

Vector GaussianPairProblem::SpectralStep(double lambda) const {
  Vector u(mu_.size());
  for (Eigen::Index j = 0; j < mu_.size(); ++j) {
    u(j) = lambda * h_tilde_(j) / (1.0 - lambda * mu_(j));
  }
  return q_.size() ? Vector(q_ * u) : u;
}

double GaussianPairProblem::DistanceToNearestPole(double lambda) const {
  double best = std::numeric_limits<double>::infinity();
  for (double p : poles_) best = std::min(best, std::abs(lambda - p));
  return best;
}

Vector GaussianPairProblem::HalfGradientFree(const Vector& z) const {
  const Vector full = target_.covariance.Precision() * (z - target_.mean) -
                      source_.covariance.Precision() * (z - source_.mean);
  return Select(full, mask_.free_indices());
}

double ConstraintResidual(const GaussianPairProblem& problem, const Vector& z) {
  if (z.size() != problem.factual().size()) {
    throw InvalidArgument("constraint_residual: dimension mismatch");
  }
  const auto& s = problem.source();
  const auto& t = problem.target();
  return t.covariance.MahalanobisSq(z - t.mean) - s.covariance.MahalanobisSq(z - s.mean) +
         problem.c_alpha();
}

Vector ZOfLambda(const GaussianPairProblem& problem, double lambda) {
  for (double p : problem.poles_) {
    if (std::abs(lambda - p) <= PoleExclusionRadius(p)) {
      std::ostringstream os;
      os << "lambda " << lambda << " is within the exclusion radius of pole " << p;
      throw PoleError(os.str());
    }
  }
  const auto& free = problem.mask().free_indices();
  const Vector y_free = Select(problem.factual(), free);
  Vector z_free;
  if (problem.path() == SolverPath::kFull) {
    const Eigen::Index nf = y_free.size();
    const Matrix system = Matrix::Identity(nf, nf) - lambda * problem.D();
    z_free = system.partialPivLu().solve(y_free - lambda * problem.d_vec());
  } else {
    const Vector diag = problem.D().diagonal();
    z_free = (y_free - lambda * problem.d_vec()).array() / (1.0 - lambda * diag.array());
  }
  Vector z = problem.factual();
  for (std::size_t i = 0; i < free.size(); ++i) z(free[i]) = z_free(i);
  return z;
}

Uniqueness ClassifyUniqueness(const GaussianPairProblem& problem) {
  if (problem.path() == SolverPath::kSpherical) return Uniqueness::kUnique;
  const Vector& mu = problem.path() == SolverPath::kFull
                         ? problem.eigenvalues()
                         : Vector(problem.D().diagonal());
  bool pos = false;
  bool neg = false;
  bool zero = false;
  for (Eigen::Index j = 0; j < mu.size(); ++j) {
    if (mu(j) > kDefiniteEigen) {
      pos = true;
    } else if (mu(j) < -kDefiniteEigen) {
      neg = true;
    } else {
      zero = true;
    }
  }
  if (problem.path() == SolverPath::kFull) {
    // Definite iff every eigenvalue is bounded away from zero with one sign.
    return ((pos != neg) && !zero) ? Uniqueness::kUnique : Uniqueness::kIndeterminate;
  }
  return (pos && neg) ? Uniqueness::kIndeterminate : Uniqueness::kUnique;
}

CfResult SolveGaussianCf(const GaussianPairProblem& problem) {
  CfResult result;
  result.counterfactual_model = problem.factual();
  result.uniqueness = ClassifyUniqueness(problem);
  const double scale = 1.0 + std::abs(problem.c_alpha());
  const double accept_tol = kAcceptTol * scale;
  const double bisect_tol = kBisectTol * scale;
  const Vector& y = problem.factual();
  const auto& free = problem.mask().free_indices();

  if (free.empty() || (problem.affine() && problem.h_tilde_.squaredNorm() == 0.0)) {
    result.residual = problem.residual_at_factual();
    if (std::abs(result.residual) <= accept_tol) {
      result.status = CfStatus::kDegenerateIdentity;
      result.detail = "factual already satisfies the constraint; no free direction";
    } else {
      result.status = CfStatus::kNoFeasibleSolution;
      result.detail = free.empty() ? "no free features"
                                   : "constraint does not depend on the free features";
    }
    return result;
  }

  auto with_step = [&](const Vector& step) {
    Vector z = y;
    for (std::size_t i = 0; i < free.size(); ++i) z(free[i]) = y(free[i]) + step(i);
    return z;
  };
  auto make_candidate = [&](double lambda, const Vector& z) {
    return Candidate{lambda, z, ConstraintResidual(problem, z), DistanceSq(z, y)};
  };

  std::vector<Candidate> candidates;
  int rejected = 0;
  int brackets = 0;
  const auto g = [&](double lambda) { return problem.ResidualAlongFamily(lambda); };
  const double max_pole = problem.poles().empty()
                              ? 0.0
                              : std::max(std::abs(problem.poles().front()),
                                         std::abs(problem.poles().back()));
  const double domain = kDomainFactor * (1.0 + max_pole);

  if (problem.affine()) {
    // g(y + u) = g(y) + 2 h^T u: project y_F onto the hyperplane.
    const double lambda =
        -problem.residual_at_factual() / (2.0 * problem.h_tilde_.squaredNorm());
    candidates.push_back(make_candidate(lambda, with_step(problem.SpectralStep(lambda))));
  } else {
    std::vector<double> roots;
    std::vector<double> ends{-domain};
    for (double p : problem.poles()) {
      if (p > -domain && p < domain) ends.push_back(p);
    }
    ends.push_back(domain);
    [[maybe_unused]] int zero_interval_roots = 0;
    for (std::size_t k = 0; k + 1 < ends.size(); ++k) {
      const bool lo_pole = k > 0;
      const bool hi_pole = k + 2 < ends.size();
      const auto pts = IntervalSamples(ends[k], lo_pole, ends[k + 1], hi_pole);
      const bool has_zero = ends[k] < 0.0 && 0.0 < ends[k + 1];
      double prev_x = 0.0;
      double prev_g = std::numeric_limits<double>::quiet_NaN();
      for (double x : pts) {
        const double gx = g(x);
        if (!std::isfinite(gx)) {
          prev_g = std::numeric_limits<double>::quiet_NaN();
          continue;
        }
        if (gx == 0.0) {
          roots.push_back(x);
          if (has_zero) ++zero_interval_roots;
        } else if (std::isfinite(prev_g) && prev_g != 0.0 && ((gx < 0.0) != (prev_g < 0.0))) {
          ++brackets;
          roots.push_back(Bisect(g, prev_x, prev_g, x, gx, bisect_tol));
          if (has_zero) ++zero_interval_roots;
        }
        prev_x = x;
        prev_g = gx;
      }
    }
    // g increases strictly on the interval containing zero.
    assert(zero_interval_roots <= 1);

    for (double lambda : roots) {
      Candidate best_form = make_candidate(lambda, with_step(problem.SpectralStep(lambda)));
      try {
        Candidate direct = make_candidate(lambda, ZOfLambda(problem, lambda));
        if (std::abs(direct.residual) <= std::abs(best_form.residual)) best_form = direct;
      } catch (const PoleError&) {
      }
      candidates.push_back(std::move(best_form));
    }

    // Removable poles: when h~ has no component along an eigenvector, the
    // family can leave the curve at lambda = 1/mu_j along that eigenvector.
    const Vector& mu = problem.eigenvalues();
    const double h_norm = problem.h_tilde_.norm();
    for (double pole : problem.poles()) {
      Vector u = Vector::Zero(mu.size());
      double null_coeff = 0.0;
      std::vector<Eigen::Index> null_dirs;
      bool removable = true;
      for (Eigen::Index j = 0; j < mu.size(); ++j) {
        if (mu(j) != 0.0 && std::abs(1.0 / mu(j) - pole) <= PoleExclusionRadius(pole)) {
          if (std::abs(problem.h_tilde_(j)) > kHardCaseTol * (1.0 + h_norm)) removable = false;
          null_dirs.push_back(j);
          null_coeff = mu(j);
        } else {
          u(j) = pole * problem.h_tilde_(j) / (1.0 - pole * mu(j));
        }
      }
      if (!removable || null_dirs.empty()) continue;
      double g_pole = problem.residual_at_factual();
      for (Eigen::Index j = 0; j < mu.size(); ++j) {
        g_pole += u(j) * (mu(j) * u(j) + 2.0 * problem.h_tilde_(j));
      }
      const double t_sq = -g_pole / null_coeff;
      if (!(t_sq >= 0.0)) continue;
      u(null_dirs.front()) = std::sqrt(t_sq);
      const Vector step = problem.q_.size() ? Vector(problem.q_ * u) : u;
      candidates.push_back(make_candidate(pole, with_step(step)));
    }
  }

  const Candidate* best = nullptr;
  int accepted = 0;
  for (const auto& c : candidates) {
    if (!(std::abs(c.residual) <= accept_tol)) {
      ++rejected;
      continue;
    }
    ++accepted;
    if (best == nullptr || c.distance_sq < best->distance_sq - kTieTol ||
        (std::abs(c.distance_sq - best->distance_sq) <= kTieTol &&
         std::abs(c.lambda) < std::abs(best->lambda))) {
      best = &c;
    }
  }
  result.roots_found = accepted;
  if (best == nullptr) {
    std::ostringstream os;
    os << "no root found: brackets=" << brackets << " rejected=" << rejected
       << " domain=[" << -domain << "," << domain << "] g(-domain)=" << g(-domain)
       << " g(domain)=" << g(domain);
    result.status = CfStatus::kNoRootFound;
    result.residual = problem.residual_at_factual();
    result.detail = os.str();
    return result;
  }
  result.status = CfStatus::kOk;
  result.counterfactual_model = best->z;
  result.distance_sq = best->distance_sq;
  result.lambda = best->lambda;
  result.residual = best->residual;
  return result;
}

}  // namespace cfclust
