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

// Evaluation harness: sample factuals from a source cluster, generate
// counterfactuals toward a target cluster, and summarise distances,
// membership success and timing. Counterfactuals produced by other tools can
// be ingested from CSV and compared on the subset of factuals for which
// every method landed in the target cluster.
//
// Timing covers the solver call only; model loading and file I/O are
// excluded.

#ifndef CFCLUST_EVAL_H_
#define CFCLUST_EVAL_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cfclust/fit.h"
#include "cfclust/types.h"

namespace cfclust {

inline constexpr int kReportSchemaVersion = 1;
inline constexpr char kSamplerName[] = "mt19937_64/partial-fisher-yates";
inline constexpr char kOwnMethodName[] = "cfclust";

struct BaselineSpec {
  std::string name;
  std::filesystem::path path;
};

struct EvalConfig {
  ClusterId source = 0;
  ClusterId target = 1;
  int n_factuals = 50;
  std::uint64_t seed = 0;
  double epsilon = kDefaultEpsilon;
  Mask mask;
  std::vector<BaselineSpec> baselines;
  int jobs = 1;

  void Validate(const ClusterModel& model) const;
};

struct EvalRecord {
  int factual_id = 0;  // row index in the dataset
  CfStatus status = CfStatus::kOk;
  double distance_sq = 0.0;
  bool member_strict = false;
  bool member_tolerant = false;
  double elapsed_s = 0.0;
  std::optional<double> lambda;
  Vector factual;         // raw units
  Vector counterfactual;  // raw units

  bool operator==(const EvalRecord&) const = default;
};

struct DistanceSummary {
  int count = 0;
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double mean = 0.0;
  double q3 = 0.0;
  double max = 0.0;

  bool operator==(const DistanceSummary&) const = default;
};

struct EvalAggregates {
  DistanceSummary distance;  // over records with status ok
  double success_strict_pct = 0.0;
  double success_tolerant_pct = 0.0;
  double mean_elapsed_s = 0.0;
  double median_elapsed_s = 0.0;

  bool operator==(const EvalAggregates&) const = default;
};

// Counterfactuals produced by an external method, keyed by factual id.
struct BaselineTable {
  std::string name;
  std::map<int, Vector> counterfactuals;  // raw units
};

struct BaselineResult {
  std::string name;
  // Strict target membership over the evaluated factuals, in percent.
  double success_pct = 0.0;
  std::map<int, double> distance_sq;  // model space
  std::map<int, bool> member;

  bool operator==(const BaselineResult&) const = default;
};

// Paired distances on the factuals where every method reached the target.
struct Comparison {
  std::vector<int> common_ids;
  std::map<std::string, std::vector<double>> distances;
  std::map<std::string, DistanceSummary> summaries;

  bool operator==(const Comparison&) const = default;
};

struct EvalReport {
  int schema_version = kReportSchemaVersion;
  std::string sampler = kSamplerName;
  std::uint64_t seed = 0;
  ClusterId source = 0;
  ClusterId target = 1;
  double epsilon = 0.0;
  std::string mask;
  int n_requested = 0;
  std::vector<std::string> warnings;
  std::vector<EvalRecord> records;
  EvalAggregates aggregates;
  std::vector<BaselineResult> baselines;
  std::optional<Comparison> comparison;

  bool operator==(const EvalReport&) const = default;
};

// Quartiles by linear interpolation between order statistics.
DistanceSummary Summarize(std::vector<double> values);
EvalAggregates ComputeAggregates(const std::vector<EvalRecord>& records);

// Deterministic sample of `n` ids (without replacement, ascending order).
std::vector<int> SampleWithoutReplacement(const std::vector<int>& pool, int n,
                                          std::uint64_t seed);

EvalReport RunEval(const ClusterModel& model, const Dataset& data, const EvalConfig& config);

// CSV with header `factual_id,<d feature columns>`.
BaselineTable IngestBaseline(const std::filesystem::path& path, const std::string& name,
                             int dim);
BaselineTable ParseBaseline(const std::string& text, const std::string& name, int dim);

// Scores the baselines against the report's factuals and fills
// report.baselines and report.comparison.
void CompareBaselines(const ClusterModel& model, const std::vector<BaselineTable>& baselines,
                      EvalReport& report);

nlohmann::json ReportToJson(const EvalReport& report);
EvalReport ReportFromJson(const nlohmann::json& j);
std::string RecordsToCsv(const EvalReport& report);
// Re-exports our own counterfactuals in the baseline CSV format.
std::string RecordsToBaselineCsv(const EvalReport& report);

struct SweepResult {
  std::vector<double> epsilons;
  std::vector<CfResult> results;
  // z - y per feature in raw units, one row per epsilon.
  std::vector<Vector> deltas;
};

// One counterfactual per plausibility factor (ascending, >= 0). Solver
// failures are kept as per-epsilon statuses.
SweepResult SweepEpsilon(const ClusterModel& model, const Vector& factual, const Mask& mask,
                         ClusterId target, const std::vector<double>& epsilons,
                         std::optional<ClusterId> source = {});

nlohmann::json SweepToJson(const SweepResult& sweep);
std::string SweepDeltasToCsv(const SweepResult& sweep);

}  // namespace cfclust

#endif  // CFCLUST_EVAL_H_
