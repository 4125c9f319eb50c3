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

#include "cfclust/orchestrator.h"

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "cfclust/gaussian_cf.h"
#include "cfclust/kmeans_cf.h"

namespace cfclust {
namespace {

void CheckCluster(const ClusterModel& model, ClusterId k, std::string_view what) {
  if (k < 0 || k >= model.num_clusters()) {
    throw InvalidArgument(std::string(what) + " cluster " + std::to_string(k) +
                          " out of range [0, " + std::to_string(model.num_clusters()) + ")");
  }
}

}  // namespace

MembershipVerdict JudgeMembership(const ClusterModel& model, const Vector& z_model,
                                  ClusterId target) {
  MembershipVerdict verdict;
  if (!z_model.allFinite()) return verdict;
  verdict.strict = AssignCluster(model, z_model) == target;
  const double own = AssignmentScore(model, target, z_model);
  double rival = -std::numeric_limits<double>::infinity();
  for (ClusterId k = 0; k < model.num_clusters(); ++k) {
    if (k != target) rival = std::max(rival, AssignmentScore(model, k, z_model));
  }
  verdict.tolerant = verdict.strict || own >= rival - kMembershipTieTol;
  return verdict;
}

CfResult Explain(const ClusterModel& model, const CfRequest& request) {
  if (request.factual.size() != model.dim()) {
    throw InvalidArgument("factual has dimension " + std::to_string(request.factual.size()) +
                          ", model has " + std::to_string(model.dim()));
  }
  if (request.mask.size() != model.dim()) {
    throw InvalidArgument("mask length " + std::to_string(request.mask.size()) +
                          " does not match dimension " + std::to_string(model.dim()));
  }
  CheckFinite(request.factual, "factual");
  if (!(request.epsilon >= 0.0) || !std::isfinite(request.epsilon)) {
    throw InvalidArgument("plausibility factor must be finite and >= 0");
  }
  CheckCluster(model, request.target, "target");

  const Vector y = model.ToModelSpace(request.factual);
  const ClusterId assigned = AssignCluster(model, y);
  const ClusterId source = request.source.value_or(assigned);
  CheckCluster(model, source, "source");
  if (source == request.target) throw InvalidArgument("source and target clusters coincide");

  const auto start = std::chrono::steady_clock::now();
  CfResult result;
  if (model.kind() == ModelKind::kKMeans) {
    const KmeansConstraint constraint = BuildKmeansConstraint(
        model.mean(source), model.mean(request.target), request.epsilon, request.mask);
    result = SolveKmeansCf(y, constraint, request.mask);
  } else {
    const GaussianPairProblem problem(model.component(source),
                                      model.component(request.target), y, request.mask,
                                      request.epsilon);
    result = SolveGaussianCf(problem);
  }
  result.elapsed = std::chrono::duration_cast<std::chrono::nanoseconds>(
      std::chrono::steady_clock::now() - start);

  result.source = source;
  result.target = request.target;
  if (assigned != source) {
    std::ostringstream os;
    os << "warning: factual is assigned to cluster " << assigned << ", not source " << source;
    result.detail = result.detail.empty() ? os.str() : result.detail + "; " + os.str();
  }

  result.counterfactual = model.ToRawSpace(result.counterfactual_model);
  for (int i : request.mask.fixed_indices()) result.counterfactual(i) = request.factual(i);
  if (result.succeeded()) {
    const MembershipVerdict verdict =
        JudgeMembership(model, result.counterfactual_model, request.target);
    result.member_strict = verdict.strict;
    result.member_tolerant = verdict.tolerant;
  }
  return result;
}

BestResult ExplainBest(const ClusterModel& model, const Vector& factual, const Mask& mask,
                       double epsilon,
                       const std::optional<std::vector<ClusterId>>& candidate_targets,
                       std::optional<ClusterId> source) {
  const ClusterId src = source.value_or(AssignCluster(model, model.ToModelSpace(factual)));
  std::vector<ClusterId> targets;
  if (candidate_targets) {
    targets = *candidate_targets;
  } else {
    for (ClusterId k = 0; k < model.num_clusters(); ++k) {
      if (k != src) targets.push_back(k);
    }
  }
  if (targets.empty()) throw InvalidArgument("no candidate targets");

  BestResult best;
  for (ClusterId t : targets) {
    CfRequest request{factual, src, t, mask, epsilon};
    best.per_target.push_back(Explain(model, request));
  }
  const CfResult* winner = nullptr;
  for (const auto& r : best.per_target) {
    if (r.status != CfStatus::kOk) continue;
    if (winner == nullptr || r.distance_sq < winner->distance_sq ||
        (r.distance_sq == winner->distance_sq && r.target < winner->target)) {
      winner = &r;
    }
  }
  if (winner == nullptr) {
    std::ostringstream os;
    os << "no target produced a counterfactual:";
    for (const auto& r : best.per_target) os << " " << r.target << "=" << ToString(r.status);
    throw AllTargetsFailed(os.str(), best.per_target);
  }
  best.result = *winner;
  best.chosen_target = winner->target;
  return best;
}

bool PlausibilityCheck(const ClusterModel& model, const Vector& z, ClusterId target,
                       double delta) {
  if (!(delta >= 0.0)) throw InvalidArgument("density threshold must be >= 0");
  CheckCluster(model, target, "target");
  const Vector x = model.ToModelSpace(z);
  double log_density;
  if (model.kind() == ModelKind::kGaussian) {
    log_density = LogDensity(model.component(target), x);
  } else {
    const GaussianComponent unit{model.mean(target), CovarianceSpec::Spherical(1.0, model.dim()),
                                 1.0};
    log_density = LogDensity(unit, x);
  }
  return log_density > std::log(delta);
}

}  // namespace cfclust
