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

#include "cfclust/cli.h"

#include <CLI11.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cfclust/eval.h"
#include "cfclust/fit.h"
#include "cfclust/model_io.h"
#include "cfclust/orchestrator.h"
#include "cfclust/types.h"

namespace cfclust {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// Raised for flag combinations CLI11 cannot express.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FitArgs {
  std::string algo = "kmeans";
  std::string cov = "full";
  int k = 2;
  std::uint64_t seed = 0;
  int restarts = 1;
  int max_iter = 300;
  bool no_standardize = false;
  std::string priors = "fit";
  std::string label_col;
  std::string data;
  std::string out;
};

// Factual selection shared by explain and sweep.
struct FactualArgs {
  std::string model;
  std::optional<int> row;
  std::string data;
  std::string factual;
  std::string label_col;
  std::optional<int> source;
  std::string mask;
};

struct ExplainArgs {
  FactualArgs f;
  std::string target;
  double epsilon = kDefaultEpsilon;
  std::string out;
};

struct SweepArgs {
  FactualArgs f;
  int target = 1;
  std::string epsilons;
  std::string out;
  std::string deltas;
};

struct EvalArgs {
  std::string model;
  std::string data;
  std::string label_col;
  int n = 50;
  std::uint64_t seed = 0;
  int source = 0;
  int target = 1;
  std::string mask;
  double epsilon = kDefaultEpsilon;
  std::vector<std::string> baselines;
  int jobs = 1;
  std::string out;
  std::string csv;
  std::string export_baseline;
};

void AddFactualOptions(CLI::App* cmd, FactualArgs& a) {
  cmd->add_option("--model", a.model, "Model file")->required();
  auto* row = cmd->add_option("--factual-row", a.row, "Row index into DATA");
  auto* vec = cmd->add_option("--factual", a.factual, "Comma-separated factual (raw units)");
  row->excludes(vec);
  cmd->add_option("data", a.data, "CSV data file (with --factual-row)");
  cmd->add_option("--label-col", a.label_col, "Label column to drop from DATA");
  cmd->add_option("--source", a.source, "Source cluster (default: assigned cluster)");
  cmd->add_option("--mask", a.mask, "Actionability mask, 1=free 0=frozen (default: all free)");
}

std::optional<std::string> OptionalString(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return s;
}

Vector ResolveFactual(const FactualArgs& a, int dim) {
  if (a.row) {
    if (a.data.empty()) throw UsageError("--factual-row requires a DATA file");
    const Dataset data = LoadDataset(a.data, OptionalString(a.label_col));
    if (*a.row < 0 || *a.row >= data.size()) {
      throw UsageError("--factual-row " + std::to_string(*a.row) + " out of range [0, " +
                       std::to_string(data.size()) + ")");
    }
    return data.row(*a.row);
  }
  if (a.factual.empty()) throw UsageError("one of --factual or --factual-row is required");
  Vector y;
  try {
    y = ParseVector(a.factual);
  } catch (const InvalidArgument& e) {
    throw UsageError(std::string("--factual: ") + e.what());
  }
  if (y.size() != dim) {
    throw UsageError("--factual has " + std::to_string(y.size()) + " values, model has " +
                     std::to_string(dim));
  }
  return y;
}

Mask ResolveMask(const std::string& text, int dim) {
  if (text.empty()) return Mask::AllFree(dim);
  Mask mask;
  try {
    mask = Mask::Parse(text);
  } catch (const InvalidArgument& e) {
    throw UsageError(std::string("--mask: ") + e.what());
  }
  if (mask.size() != dim) {
    throw UsageError("--mask has " + std::to_string(mask.size()) + " entries, model has " +
                     std::to_string(dim));
  }
  return mask;
}

void PrintLine(std::ostream& out, const json& j) { out << j.dump() << '\n'; }

bool Solved(CfStatus s) { return s == CfStatus::kOk || s == CfStatus::kDegenerateIdentity; }

int CmdFit(const FitArgs& a, std::ostream& out) {
  FitConfig config;
  if (a.algo == "kmeans") {
    config.algorithm = FitAlgorithm::kKMeans;
  } else if (a.algo == "gmm") {
    config.algorithm = FitAlgorithm::kGmm;
  } else {
    throw UsageError("--algo must be kmeans or gmm");
  }
  try {
    config.covariance = CovarianceKindFromString(a.cov);
  } catch (const InvalidArgument&) {
    throw UsageError("--cov must be full, diag or spherical");
  }
  if (a.k < 2) throw UsageError("--k must be >= 2");
  config.num_clusters = a.k;
  config.seed = a.seed;
  config.restarts = a.restarts;
  config.max_iter = a.max_iter;
  config.standardize = !a.no_standardize;
  try {
    config.Validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  if (a.priors != "fit" && a.priors != "frequency" && a.priors != "uniform") {
    throw UsageError("--priors must be fit, frequency or uniform");
  }

  const Dataset data = LoadDataset(a.data, OptionalString(a.label_col));
  json provenance = {{"algo", a.algo},
                     {"k", a.k},
                     {"seed", a.seed},
                     {"restarts", a.restarts},
                     {"max_iter", a.max_iter},
                     {"standardize", config.standardize},
                     {"data", fs::path(a.data).filename().string()},
                     {"n_rows", data.size()}};
  json summary = {{"command", "fit"}, {"algo", a.algo}, {"k", a.k}, {"dim", data.dim()}};
  std::optional<ClusterModel> model;
  if (config.algorithm == FitAlgorithm::kKMeans) {
    KMeansFit details;
    model = FitKMeans(data, config, &details);
    summary["inertia"] = details.inertia;
    summary["iterations"] = details.iterations;
  } else {
    GmmFit details;
    model = FitGmm(data, config, &details);
    provenance["cov"] = ToString(config.covariance);
    summary["cov"] = ToString(config.covariance);
    summary["log_likelihood"] = details.log_likelihood;
    summary["iterations"] = details.iterations;
    summary["jitter_events"] = details.jitter_events;
    if (a.priors != "fit") {
      const PriorPolicy policy =
          a.priors == "uniform" ? PriorPolicy::kUniform : PriorPolicy::kFrequency;
      model = ApplyPriorPolicy(*model, policy, &data);
      provenance["priors"] = a.priors;
    }
  }
  SaveModel(*model, a.out, provenance);
  summary["output"] = a.out;
  PrintLine(out, summary);
  return kExitOk;
}

int CmdExplain(const ExplainArgs& a, std::ostream& out) {
  const ClusterModel model = LoadModel(a.f.model);
  const Vector y = ResolveFactual(a.f, model.dim());
  const Mask mask = ResolveMask(a.f.mask, model.dim());
  if (!(a.epsilon >= 0.0)) throw UsageError("--epsilon must be >= 0");

  json doc;
  CfStatus status;
  if (a.target == "best") {
    try {
      const BestResult best = ExplainBest(model, y, mask, a.epsilon, std::nullopt, a.f.source);
      doc = ResultToJson(best.result);
      doc["chosen_target"] = best.chosen_target;
      status = best.result.status;
      json per_target = json::array();
      for (const auto& r : best.per_target) per_target.push_back(ResultToJson(r));
      doc["per_target"] = per_target;
    } catch (const AllTargetsFailed& e) {
      json per_target = json::array();
      for (const auto& r : e.per_target()) per_target.push_back(ResultToJson(r));
      doc = {{"status", "no_target_succeeded"},
             {"detail", e.what()},
             {"chosen_target", nullptr},
             {"per_target", per_target}};
      WriteTextFile(a.out, doc.dump(2) + "\n");
      PrintLine(out, {{"command", "explain"}, {"status", "no_target_succeeded"}, {"output", a.out}});
      return kExitSolve;
    }
  } else {
    int target;
    const auto parsed = ParseNumber(a.target);
    if (!parsed || *parsed != static_cast<int>(*parsed)) {
      throw UsageError("--target must be an integer or 'best'");
    }
    target = static_cast<int>(*parsed);
    const CfResult r = Explain(model, CfRequest{y, a.f.source, target, mask, a.epsilon});
    doc = ResultToJson(r);
    status = r.status;
  }
  doc["factual"] = VectorToJson(y);
  doc["mask"] = mask.ToString();
  doc["epsilon"] = a.epsilon;
  WriteTextFile(a.out, doc.dump(2) + "\n");
  json summary = {{"command", "explain"},
                  {"status", doc["status"]},
                  {"distance_sq", doc["distance_sq"]},
                  {"target", doc["target"]},
                  {"member_tolerant", doc["member_tolerant"]},
                  {"output", a.out}};
  if (doc.contains("chosen_target")) summary["chosen_target"] = doc["chosen_target"];
  PrintLine(out, summary);
  return Solved(status) ? kExitOk : kExitSolve;
}

std::string DefaultSibling(const std::string& path, const std::string& suffix) {
  fs::path p(path);
  return (p.parent_path() / (p.stem().string() + suffix)).string();
}

int CmdSweep(const SweepArgs& a, std::ostream& out) {
  const ClusterModel model = LoadModel(a.f.model);
  const Vector y = ResolveFactual(a.f, model.dim());
  const Mask mask = ResolveMask(a.f.mask, model.dim());
  std::vector<double> epsilons;
  try {
    const Vector e = ParseVector(a.epsilons);
    epsilons.assign(e.data(), e.data() + e.size());
  } catch (const InvalidArgument& e) {
    throw UsageError(std::string("--epsilons: ") + e.what());
  }
  const SweepResult sweep = SweepEpsilon(model, y, mask, a.target, epsilons, a.f.source);
  json doc = SweepToJson(sweep);
  doc["factual"] = VectorToJson(y);
  doc["mask"] = mask.ToString();
  doc["target"] = a.target;
  WriteTextFile(a.out, doc.dump(2) + "\n");
  const std::string deltas = a.deltas.empty() ? DefaultSibling(a.out, "_deltas.csv") : a.deltas;
  WriteTextFile(deltas, SweepDeltasToCsv(sweep));
  int solved = 0;
  for (const auto& r : sweep.results) solved += Solved(r.status) ? 1 : 0;
  PrintLine(out, {{"command", "sweep"},
                  {"n_epsilons", epsilons.size()},
                  {"n_solved", solved},
                  {"output", a.out},
                  {"deltas", deltas}});
  return solved == static_cast<int>(sweep.results.size()) ? kExitOk : kExitSolve;
}

int CmdEval(const EvalArgs& a, std::ostream& out) {
  const ClusterModel model = LoadModel(a.model);
  EvalConfig config;
  config.source = a.source;
  config.target = a.target;
  config.n_factuals = a.n;
  config.seed = a.seed;
  config.epsilon = a.epsilon;
  config.mask = ResolveMask(a.mask, model.dim());
  config.jobs = a.jobs;
  for (const auto& spec : a.baselines) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size()) {
      throw UsageError("--baseline expects NAME=PATH, got '" + spec + "'");
    }
    config.baselines.push_back({spec.substr(0, eq), spec.substr(eq + 1)});
  }
  try {
    config.Validate(model);
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  const Dataset data = LoadDataset(a.data, OptionalString(a.label_col));
  const EvalReport report = RunEval(model, data, config);
  WriteTextFile(a.out, ReportToJson(report).dump(2) + "\n");
  const std::string csv = a.csv.empty() ? DefaultSibling(a.out, "_records.csv") : a.csv;
  WriteTextFile(csv, RecordsToCsv(report));
  if (!a.export_baseline.empty()) WriteTextFile(a.export_baseline, RecordsToBaselineCsv(report));
  json summary = {{"command", "eval"},
                  {"n", report.records.size()},
                  {"success_strict_pct", report.aggregates.success_strict_pct},
                  {"success_tolerant_pct", report.aggregates.success_tolerant_pct},
                  {"median_distance_sq", report.aggregates.distance.median},
                  {"median_elapsed_s", report.aggregates.median_elapsed_s},
                  {"output", a.out},
                  {"records", csv}};
  if (report.comparison) summary["common_ids"] = report.comparison->common_ids.size();
  PrintLine(out, summary);
  return kExitOk;
}

}  // namespace

int RunCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Counterfactual explanations for clustering models", "cfclust"};
  app.require_subcommand(1);

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a k-means or Gaussian mixture model");
  fit_cmd->add_option("--algo", fit.algo, "kmeans or gmm");
  fit_cmd->add_option("--cov", fit.cov, "full, diag or spherical (gmm)");
  fit_cmd->add_option("--k", fit.k, "Number of clusters (>= 2)");
  fit_cmd->add_option("--seed", fit.seed, "Random seed");
  fit_cmd->add_option("--restarts", fit.restarts, "Independent restarts");
  fit_cmd->add_option("--max-iter", fit.max_iter, "Iteration cap per restart");
  fit_cmd->add_flag("--no-standardize", fit.no_standardize, "Fit on raw features");
  fit_cmd->add_option("--priors", fit.priors, "fit, frequency or uniform (gmm)");
  fit_cmd->add_option("--label-col", fit.label_col, "Label column to exclude");
  fit_cmd->add_option("data", fit.data, "CSV data file")->required();
  fit_cmd->add_option("-o,--output", fit.out, "Output model file")->required();

  ExplainArgs explain;
  auto* explain_cmd = app.add_subcommand("explain", "Counterfactual for one factual");
  AddFactualOptions(explain_cmd, explain.f);
  explain_cmd->add_option("--target", explain.target, "Target cluster id or 'best'")->required();
  explain_cmd->add_option("--epsilon", explain.epsilon, "Plausibility factor (>= 0)");
  explain_cmd->add_option("-o,--output", explain.out, "Output result JSON")->required();

  SweepArgs sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Counterfactuals over a list of epsilons");
  AddFactualOptions(sweep_cmd, sweep.f);
  sweep_cmd->add_option("--target", sweep.target, "Target cluster id")->required();
  sweep_cmd->add_option("--epsilons", sweep.epsilons, "Ascending list, e.g. 0,0.33,0.66,1")
      ->required();
  sweep_cmd->add_option("-o,--output", sweep.out, "Output sweep JSON")->required();
  sweep_cmd->add_option("--deltas", sweep.deltas, "Per-feature deltas CSV");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate over sampled source factuals");
  eval_cmd->add_option("--model", ev.model, "Model file")->required();
  eval_cmd->add_option("data", ev.data, "CSV data file")->required();
  eval_cmd->add_option("--label-col", ev.label_col, "Label column to exclude");
  eval_cmd->add_option("--n", ev.n, "Number of factuals");
  eval_cmd->add_option("--seed", ev.seed, "Sampling seed");
  eval_cmd->add_option("--source", ev.source, "Source cluster")->required();
  eval_cmd->add_option("--target", ev.target, "Target cluster")->required();
  eval_cmd->add_option("--mask", ev.mask, "Actionability mask (default: all free)");
  eval_cmd->add_option("--epsilon", ev.epsilon, "Plausibility factor (>= 0)");
  eval_cmd->add_option("--baseline", ev.baselines, "External counterfactuals NAME=PATH");
  eval_cmd->add_option("--jobs", ev.jobs, "Worker threads");
  eval_cmd->add_option("-o,--output", ev.out, "Output report JSON")->required();
  eval_cmd->add_option("--csv", ev.csv, "Per-factual records CSV");
  eval_cmd->add_option("--export-baseline", ev.export_baseline,
                       "Write our counterfactuals in baseline CSV format");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (*fit_cmd) return CmdFit(fit, out);
    if (*explain_cmd) return CmdExplain(explain, out);
    if (*sweep_cmd) return CmdSweep(sweep, out);
    return CmdEval(ev, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n" << app.get_subcommands().front()->help();
    return kExitUsage;
  } catch (const FitError& e) {
    err << "fit failed: " << e.what() << "\n";
    return kExitFit;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const ModelFormatError& e) {
    err << "model error: " << e.what() << "\n";
    return kExitData;
  } catch (const InvalidArgument& e) {
    err << "invalid argument: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace cfclust
