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

// End-to-end counterfactual requests: source detection, dispatch to the
// k-means or Gaussian solver, best-of-targets selection and the membership
// verdicts.

#ifndef CFCLUST_ORCHESTRATOR_H_
#define CFCLUST_ORCHESTRATOR_H_

#include <optional>
#include <stdexcept>
#include <vector>

#include "cfclust/types.h"

namespace cfclust {

// Assignment-score gap (log-density or squared distance) within which a
// boundary point still counts as a member of the target cluster.
inline constexpr double kMembershipTieTol = 1e-7;

struct MembershipVerdict {
  bool strict = false;
  bool tolerant = false;
};

// Verdict for a model-space point.
MembershipVerdict JudgeMembership(const ClusterModel& model, const Vector& z_model,
                                  ClusterId target);

// Solves one (source, target) pair. The factual is in raw units; the result
// carries both raw and model-space counterfactuals. A factual that is not
// assigned to an explicitly given source is solved anyway and flagged in
// `detail`.
CfResult Explain(const ClusterModel& model, const CfRequest& request);

struct BestResult {
  CfResult result;
  ClusterId chosen_target = -1;
  std::vector<CfResult> per_target;
};

class AllTargetsFailed : public std::runtime_error {
 public:
  AllTargetsFailed(const std::string& what, std::vector<CfResult> per_target)
      : std::runtime_error(what), per_target_(std::move(per_target)) {}
  const std::vector<CfResult>& per_target() const { return per_target_; }

 private:
  std::vector<CfResult> per_target_;
};

// Runs Explain for every candidate target (default: all clusters except the
// source) and keeps the ok result closest to the factual. Throws
// AllTargetsFailed when no target yields an ok result.
BestResult ExplainBest(const ClusterModel& model, const Vector& factual, const Mask& mask,
                       double epsilon,
                       const std::optional<std::vector<ClusterId>>& candidate_targets = {},
                       std::optional<ClusterId> source = {});

// p_target(z) > delta, with z in raw units. k-means clusters are scored with
// a unit-variance spherical Gaussian around the center.
bool PlausibilityCheck(const ClusterModel& model, const Vector& z, ClusterId target,
                       double delta);

}  // namespace cfclust

#endif  // CFCLUST_ORCHESTRATOR_H_
