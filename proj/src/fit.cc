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

#include "cfclust/fit.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace cfclust {
namespace {

constexpr double kJitterBase = 1e-6;
constexpr int kJitterRounds = 3;
constexpr double kJitterGrowth = 10.0;
constexpr std::uint64_t kRestartStride = 0x9E3779B97F4A7C15ULL;

void CheckData(const Matrix& rows, int num_clusters) {
  if (rows.rows() == 0 || rows.cols() == 0) throw FitError("empty dataset");
  if (!rows.allFinite()) throw FitError("dataset contains non-finite values");
  if (rows.rows() < num_clusters) {
    throw FitError("dataset has " + std::to_string(rows.rows()) + " rows, fewer than " +
                   std::to_string(num_clusters) + " clusters");
  }
  bool all_same = true;
  for (Eigen::Index i = 1; i < rows.rows() && all_same; ++i) {
    all_same = rows.row(i) == rows.row(0);
  }
  if (all_same && rows.rows() > 1) throw FitError("degenerate dataset: all rows identical");
}

double Uniform01(std::mt19937_64& rng) {
  // 53 random mantissa bits; identical across standard libraries.
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::vector<Vector> SeedPlusPlus(const Matrix& rows, int k, std::mt19937_64& rng) {
  const Eigen::Index n = rows.rows();
  std::vector<Vector> centers;
  centers.push_back(rows.row(static_cast<Eigen::Index>(Uniform01(rng) * n)).transpose());
  Vector d2(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    d2(i) = (rows.row(i).transpose() - centers[0]).squaredNorm();
  }
  while (static_cast<int>(centers.size()) < k) {
    const double total = d2.sum();
    if (!(total > 0.0)) throw FitError("fewer distinct rows than clusters");
    double target = Uniform01(rng) * total;
    Eigen::Index pick = n - 1;
    for (Eigen::Index i = 0; i < n; ++i) {
      target -= d2(i);
      if (target < 0.0 && d2(i) > 0.0) {
        pick = i;
        break;
      }
    }
    if (d2(pick) == 0.0) {
      // Rounding left the cursor on a duplicate of an existing center.
      d2.maxCoeff(&pick);
    }
    centers.push_back(rows.row(pick).transpose());
    for (Eigen::Index i = 0; i < n; ++i) {
      d2(i) = std::min(d2(i), (rows.row(i).transpose() - centers.back()).squaredNorm());
    }
  }
  return centers;
}

double Assign(const Matrix& rows, const std::vector<Vector>& centers, std::vector<int>& labels,
              Vector& dist) {
  const Eigen::Index n = rows.rows();
  labels.assign(n, 0);
  dist.resize(n);
  double inertia = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < centers.size(); ++k) {
      const double d = (rows.row(i).transpose() - centers[k]).squaredNorm();
      if (d < best) {
        best = d;
        labels[i] = static_cast<int>(k);
      }
    }
    dist(i) = best;
    inertia += best;
  }
  return inertia;
}

KMeansFit LloydOnce(const Matrix& rows, const FitConfig& config, std::mt19937_64& rng) {
  const int k = config.num_clusters;
  KMeansFit fit;
  fit.centers = SeedPlusPlus(rows, k, rng);
  Vector dist;
  double prev = std::numeric_limits<double>::infinity();
  for (int iter = 1; iter <= config.max_iter; ++iter) {
    fit.inertia = Assign(rows, fit.centers, fit.labels, dist);
    fit.inertia_history.push_back(fit.inertia);
    fit.iterations = iter;
    if (std::isfinite(prev) && prev - fit.inertia <= config.rel_tol * prev) break;
    prev = fit.inertia;

    std::vector<Vector> sums(k, Vector::Zero(rows.cols()));
    std::vector<int> counts(k, 0);
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
      sums[fit.labels[i]] += rows.row(i).transpose();
      ++counts[fit.labels[i]];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        fit.centers[c] = sums[c] / counts[c];
      } else {
        Eigen::Index far = 0;
        dist.maxCoeff(&far);
        fit.centers[c] = rows.row(far).transpose();
        dist(far) = 0.0;
      }
    }
    if (iter == config.max_iter) {
      fit.inertia = Assign(rows, fit.centers, fit.labels, dist);
    }
  }
  return fit;
}

struct Moments {
  std::vector<double> weight;
  std::vector<Vector> mean;
  std::vector<Matrix> scatter;  // weighted, about the mean, divided by weight
};

Moments ComputeMoments(const Matrix& rows, const Matrix& resp) {
  const Eigen::Index m = resp.cols();
  Moments mo;
  for (Eigen::Index k = 0; k < m; ++k) {
    const double w = resp.col(k).sum();
    if (!(w > 0.0)) throw FitError("mixture component " + std::to_string(k) + " collapsed");
    const Vector mean = (rows.transpose() * resp.col(k)) / w;
    const Matrix centred = rows.rowwise() - mean.transpose();
    Matrix scatter = (centred.transpose() * resp.col(k).asDiagonal() * centred) / w;
    scatter = 0.5 * (scatter + scatter.transpose());
    mo.weight.push_back(w);
    mo.mean.push_back(mean);
    mo.scatter.push_back(scatter);
  }
  return mo;
}

CovarianceSpec BuildCovariance(const Matrix& scatter, CovarianceKind kind, int* jitter_events) {
  const Eigen::Index d = scatter.rows();
  const double trace = scatter.trace();
  double jitter = kJitterBase * std::max(trace / d, std::numeric_limits<double>::min());
  Matrix work = scatter;
  for (int round = 0; round <= kJitterRounds; ++round) {
    try {
      switch (kind) {
        case CovarianceKind::kFull:
          return CovarianceSpec::Full(work);
        case CovarianceKind::kDiagonal:
          return CovarianceSpec::Diagonal(work.diagonal());
        case CovarianceKind::kSpherical:
          return CovarianceSpec::Spherical(work.trace() / d, static_cast<int>(d));
      }
    } catch (const InvalidArgument&) {
      if (round == kJitterRounds) break;
      ++*jitter_events;
      work = scatter;
      work.diagonal().array() += jitter;
      jitter *= kJitterGrowth;
    }
  }
  throw FitError("covariance stayed singular after jitter");
}

std::vector<GaussianComponent> MStep(const Matrix& rows, const Matrix& resp,
                                     CovarianceKind kind, int* jitter_events) {
  const Moments mo = ComputeMoments(rows, resp);
  const double n = static_cast<double>(rows.rows());
  std::vector<GaussianComponent> out;
  for (std::size_t k = 0; k < mo.mean.size(); ++k) {
    out.push_back({mo.mean[k], BuildCovariance(mo.scatter[k], kind, jitter_events),
                   mo.weight[k] / n});
  }
  return out;
}

// Returns the log-likelihood and fills normalised responsibilities.
double EStep(const Matrix& rows, const std::vector<GaussianComponent>& comps, Matrix& resp) {
  const Eigen::Index n = rows.rows();
  const Eigen::Index m = static_cast<Eigen::Index>(comps.size());
  resp.resize(n, m);
  double ll = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector x = rows.row(i).transpose();
    double top = -std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < m; ++k) {
      resp(i, k) = std::log(comps[k].prior) + LogDensity(comps[k], x);
      top = std::max(top, resp(i, k));
    }
    double sum = 0.0;
    for (Eigen::Index k = 0; k < m; ++k) {
      resp(i, k) = std::exp(resp(i, k) - top);
      sum += resp(i, k);
    }
    resp.row(i) /= sum;
    ll += top + std::log(sum);
  }
  return ll;
}

GmmFit EmOnce(const Matrix& rows, const FitConfig& config, std::mt19937_64& rng) {
  FitConfig seed_config = config;
  seed_config.restarts = 1;
  const KMeansFit init = LloydOnce(rows, seed_config, rng);
  const Eigen::Index n = rows.rows();
  Matrix resp = Matrix::Zero(n, config.num_clusters);
  for (Eigen::Index i = 0; i < n; ++i) resp(i, init.labels[i]) = 1.0;

  GmmFit fit;
  fit.components = MStep(rows, resp, config.covariance, &fit.jitter_events);
  double prev = -std::numeric_limits<double>::infinity();
  for (int iter = 1; iter <= config.max_iter; ++iter) {
    fit.log_likelihood = EStep(rows, fit.components, resp);
    fit.log_likelihood_history.push_back(fit.log_likelihood);
    fit.iterations = iter;
    if (std::isfinite(prev) &&
        std::abs(fit.log_likelihood - prev) <= config.rel_tol * std::abs(prev)) {
      break;
    }
    prev = fit.log_likelihood;
    fit.components = MStep(rows, resp, config.covariance, &fit.jitter_events);
    if (iter == config.max_iter) fit.log_likelihood = EStep(rows, fit.components, resp);
  }
  return fit;
}

Matrix StandardizedRows(const Dataset& data, const FitConfig& config,
                        std::optional<Standardization>& standardization) {
  if (!config.standardize) return data.rows;
  standardization = ComputeStandardization(data.rows);
  const Matrix centred = data.rows.rowwise() - standardization->mean.transpose();
  return centred.array().rowwise() / standardization->scale.transpose().array();
}

}  // namespace

void FitConfig::Validate() const {
  if (num_clusters < 1) throw InvalidArgument("number of clusters must be >= 1");
  if (max_iter < 1) throw InvalidArgument("max_iter must be >= 1");
  if (!(rel_tol > 0.0)) throw InvalidArgument("rel_tol must be > 0");
  if (restarts < 1) throw InvalidArgument("restarts must be >= 1");
}

Standardization ComputeStandardization(const Matrix& rows) {
  if (rows.rows() == 0) throw FitError("empty dataset");
  Standardization s;
  s.mean = rows.colwise().mean().transpose();
  const Matrix centred = rows.rowwise() - s.mean.transpose();
  s.scale = (centred.array().square().colwise().sum() / static_cast<double>(rows.rows()))
                .sqrt()
                .transpose();
  for (Eigen::Index j = 0; j < s.scale.size(); ++j) {
    if (!(s.scale(j) > 0.0)) s.scale(j) = 1.0;
  }
  return s;
}

KMeansFit RunKMeans(const Matrix& rows, const FitConfig& config) {
  config.Validate();
  CheckData(rows, config.num_clusters);
  KMeansFit best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < config.restarts; ++r) {
    std::mt19937_64 rng(config.seed + kRestartStride * static_cast<std::uint64_t>(r));
    KMeansFit fit = LloydOnce(rows, config, rng);
    if (fit.inertia < best.inertia) best = std::move(fit);
  }
  return best;
}

GmmFit RunEm(const Matrix& rows, const FitConfig& config) {
  config.Validate();
  CheckData(rows, config.num_clusters);
  GmmFit best;
  best.log_likelihood = -std::numeric_limits<double>::infinity();
  for (int r = 0; r < config.restarts; ++r) {
    std::mt19937_64 rng(config.seed + kRestartStride * static_cast<std::uint64_t>(r));
    GmmFit fit = EmOnce(rows, config, rng);
    if (fit.log_likelihood > best.log_likelihood) best = std::move(fit);
  }
  return best;
}

ClusterModel FitKMeans(const Dataset& data, const FitConfig& config, KMeansFit* details) {
  std::optional<Standardization> standardization;
  const Matrix rows = StandardizedRows(data, config, standardization);
  KMeansFit fit = RunKMeans(rows, config);
  try {
    ClusterModel model = ClusterModel::KMeans(fit.centers, standardization);
    if (details) *details = std::move(fit);
    return model;
  } catch (const InvalidArgument& e) {
    throw FitError(std::string("fitted k-means model is invalid: ") + e.what());
  }
}

ClusterModel FitGmm(const Dataset& data, const FitConfig& config, GmmFit* details) {
  std::optional<Standardization> standardization;
  const Matrix rows = StandardizedRows(data, config, standardization);
  GmmFit fit = RunEm(rows, config);
  // Renormalise so the priors sum to one to the last bit we can manage.
  double sum = 0.0;
  for (const auto& c : fit.components) sum += c.prior;
  for (auto& c : fit.components) c.prior /= sum;
  try {
    ClusterModel model = ClusterModel::Gaussian(fit.components, standardization);
    if (details) *details = std::move(fit);
    return model;
  } catch (const InvalidArgument& e) {
    throw FitError(std::string("fitted mixture is invalid: ") + e.what());
  }
}

ClusterModel ApplyPriorPolicy(const ClusterModel& model, PriorPolicy policy,
                              const Dataset* data) {
  if (model.kind() == ModelKind::kKMeans) return model;
  const int m = model.num_clusters();
  std::vector<double> priors(m, 1.0 / m);
  if (policy == PriorPolicy::kFrequency) {
    if (data == nullptr || data->size() == 0) {
      throw InvalidArgument("frequency priors need a non-empty dataset");
    }
    std::vector<int> counts(m, 0);
    for (int i = 0; i < data->size(); ++i) {
      ++counts[AssignCluster(model, model.ToModelSpace(data->row(i)))];
    }
    for (int k = 0; k < m; ++k) {
      priors[k] = static_cast<double>(counts[k]) / data->size();
    }
  }
  return model.WithPriors(priors);
}

}  // namespace cfclust
