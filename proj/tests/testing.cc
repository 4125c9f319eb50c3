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

#include "testing.h"

#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Dense>

namespace cfclust::testing {

double Uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

Vector RandomVector(Rng& rng, int d, double scale) {
  std::normal_distribution<double> n(0.0, scale);
  Vector v(d);
  for (int i = 0; i < d; ++i) v(i) = n(rng);
  return v;
}

Matrix RandomSpd(Rng& rng, int d, double lo, double hi) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix a(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) a(i, j) = n(rng);
  }
  const Matrix q = Eigen::HouseholderQR<Matrix>(a).householderQ();
  Vector spectrum(d);
  for (int i = 0; i < d; ++i) spectrum(i) = std::exp(Uniform(rng, std::log(lo), std::log(hi)));
  Matrix s = q * spectrum.asDiagonal() * q.transpose();
  return 0.5 * (s + s.transpose());
}

CovarianceSpec RandomCovariance(Rng& rng, CovarianceKind kind, int d) {
  switch (kind) {
    case CovarianceKind::kFull:
      return CovarianceSpec::Full(RandomSpd(rng, d));
    case CovarianceKind::kDiagonal: {
      Vector v(d);
      for (int i = 0; i < d; ++i) v(i) = std::exp(Uniform(rng, std::log(0.3), std::log(3.0)));
      return CovarianceSpec::Diagonal(v);
    }
    case CovarianceKind::kSpherical:
      break;
  }
  return CovarianceSpec::Spherical(std::exp(Uniform(rng, std::log(0.3), std::log(3.0))), d);
}

GaussianComponent RandomComponent(Rng& rng, CovarianceKind kind, int d, double mean_scale,
                                  double prior) {
  return {RandomVector(rng, d, mean_scale), RandomCovariance(rng, kind, d), prior};
}

Mask RandomMask(Rng& rng, int d) {
  std::vector<bool> bits(d);
  for (int i = 0; i < d; ++i) bits[i] = Uniform(rng, 0.0, 1.0) < 0.6;
  bits[std::uniform_int_distribution<int>(0, d - 1)(rng)] = true;
  return Mask(bits);
}

Matrix Blobs(Rng& rng, const std::vector<Vector>& centers, double sigma, int per_blob) {
  const int d = static_cast<int>(centers.front().size());
  Matrix rows(static_cast<Eigen::Index>(centers.size()) * per_blob, d);
  for (std::size_t k = 0; k < centers.size(); ++k) {
    for (int i = 0; i < per_blob; ++i) {
      rows.row(k * per_blob + i) = (centers[k] + RandomVector(rng, d, sigma)).transpose();
    }
  }
  return rows;
}

Dataset MakeDataset(Matrix rows) {
  Dataset data;
  data.rows = std::move(rows);
  return data;
}

std::filesystem::path TempDir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("cfclust_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

double ReferenceLogDensity(const Vector& mean, const Matrix& cov, const Vector& x) {
  const Vector c = x - mean;
  const double quad = c.dot(cov.inverse() * c);
  return -0.5 * (quad + std::log(cov.determinant()) +
                 static_cast<double>(x.size()) * std::log(2.0 * std::numbers::pi));
}

double ReferenceResidual(const GaussianComponent& s, const GaussianComponent& t, double epsilon,
                         const Vector& z) {
  const Matrix ss = s.covariance.Dense();
  const Matrix st = t.covariance.Dense();
  const Vector ct = z - t.mean;
  const Vector cs = z - s.mean;
  return ct.dot(st.inverse() * ct) - cs.dot(ss.inverse() * cs) +
         std::log(st.determinant() / ss.determinant()) - 2.0 * std::log(t.prior / s.prior) +
         2.0 * std::log(1.0 + epsilon);
}

double ExpandedLambdaEquation(const GaussianComponent& s, const GaussianComponent& t,
                              const Vector& y, const Mask& mask, double epsilon, double lambda) {
  const auto& f = mask.free_indices();
  const auto& g = mask.fixed_indices();
  const Matrix ps = s.covariance.Dense().inverse();
  const Matrix pt = t.covariance.Dense().inverse();
  auto block = [](const Matrix& m, const std::vector<int>& r, const std::vector<int>& c) {
    Matrix out(r.size(), c.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
      for (std::size_t j = 0; j < c.size(); ++j) out(i, j) = m(r[i], c[j]);
    }
    return out;
  };
  auto sub = [](const Vector& v, const std::vector<int>& idx) {
    Vector out(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) out(i) = v(idx[i]);
    return out;
  };
  const Vector yf = sub(y, f), zg = sub(y, g);
  const Vector msf = sub(s.mean, f), mtf = sub(t.mean, f);
  const Vector msg = sub(s.mean, g), mtg = sub(t.mean, g);
  const Matrix pt_ff = block(pt, f, f), ps_ff = block(ps, f, f);
  const Matrix pt_fg = block(pt, f, g), ps_fg = block(ps, f, g);
  const Matrix pt_gg = block(pt, g, g), ps_gg = block(ps, g, g);

  const Matrix dmat = pt_ff - ps_ff;
  const Vector e = pt_ff * mtf - ps_ff * msf;
  const Vector dvec = e - (pt_fg * (zg - mtg) - ps_fg * (zg - msg));
  const Matrix b = Matrix::Identity(f.size(), f.size()) - lambda * dmat;
  const Vector c = yf - lambda * dvec;
  const Vector binv_c = b.inverse() * c;
  const Vector zf = binv_c;
  const double c_f = mtf.dot(pt_ff * mtf) - msf.dot(ps_ff * msf);
  const double c_g = (zg - mtg).dot(pt_gg * (zg - mtg)) - (zg - msg).dot(ps_gg * (zg - msg));
  const double c_l = 2 * (zf - mtf).dot(pt_fg * (zg - mtg)) - 2 * (zf - msf).dot(ps_fg * (zg - msg));
  const double c_alpha = std::log(t.covariance.Dense().determinant() /
                                  s.covariance.Dense().determinant()) -
                         2 * std::log(t.prior / s.prior) + 2 * std::log1p(epsilon);
  return binv_c.dot(dmat * binv_c) - 2 * binv_c.dot(e) + c_f + c_l + c_g + c_alpha;
}

GridOracle LevelSetGridOracle(const GaussianComponent& s, const GaussianComponent& t,
                              double epsilon, const Vector& y, const Mask& mask, const Vector& lo,
                              const Vector& hi, int n) {
  GridOracle out;
  out.distance_sq = std::numeric_limits<double>::infinity();
  const double hx = (hi(0) - lo(0)) / (n - 1);
  const double hy = (hi(1) - lo(1)) / (n - 1);
  out.cell_diagonal = std::hypot(hx, hy);
  const Eigen::Matrix2d ps = s.covariance.Dense().inverse();
  const Eigen::Matrix2d pt = t.covariance.Dense().inverse();
  const double c_alpha = std::log(t.covariance.Dense().determinant() /
                                  s.covariance.Dense().determinant()) -
                         2.0 * std::log(t.prior / s.prior) + 2.0 * std::log(1.0 + epsilon);
  const Eigen::Vector2d ms = s.mean;
  const Eigen::Vector2d mt = t.mean;
  auto g = [&](double a, double b) {
    const Eigen::Vector2d z(a, b);
    return (z - mt).dot(pt * (z - mt)) - (z - ms).dot(ps * (z - ms)) + c_alpha;
  };
  auto consider = [&](double a, double b) {
    const double dist = (a - y(0)) * (a - y(0)) + (b - y(1)) * (b - y(1));
    if (dist < out.distance_sq) {
      out.distance_sq = dist;
      out.found = true;
    }
  };
  // Zero crossing along a segment by linear interpolation of g.
  auto crossing = [&](double a0, double b0, double g0, double a1, double b1, double g1) {
    if (g0 == 0.0) consider(a0, b0);
    if ((g0 < 0.0) != (g1 < 0.0) && g1 != 0.0) {
      const double w = g0 / (g0 - g1);
      consider(a0 + w * (a1 - a0), b0 + w * (b1 - b0));
    }
  };

  if (mask.is_free(0) && mask.is_free(1)) {
    std::vector<double> prev(n), cur(n);
    for (int i = 0; i < n; ++i) {
      const double a = lo(0) + i * hx;
      for (int j = 0; j < n; ++j) {
        const double b = lo(1) + j * hy;
        cur[j] = g(a, b);
        if (j > 0) crossing(a, b - hy, cur[j - 1], a, b, cur[j]);
        if (i > 0) crossing(a - hx, b, prev[j], a, b, cur[j]);
      }
      std::swap(prev, cur);
    }
  } else if (mask.is_free(0) || mask.is_free(1)) {
    // A frozen coordinate reduces the level set to points on a line; a
    // finer 1-D scan stands in for the grid column through y.
    const int free = mask.is_free(0) ? 0 : 1;
    const int m = 50 * n;
    const double h = (hi(free) - lo(free)) / (m - 1);
    Vector p = y;
    double prev_g = 0.0;
    for (int i = 0; i < m; ++i) {
      p(free) = lo(free) + i * h;
      const double cur = g(p(0), p(1));
      if (i > 0) {
        Vector q = p;
        q(free) -= h;
        crossing(q(0), q(1), prev_g, p(0), p(1), cur);
      }
      prev_g = cur;
    }
  }
  return out;
}

}  // namespace cfclust::testing
