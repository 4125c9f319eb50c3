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

#include "cfclust/eval.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "cfclust/model_io.h"
#include "cfclust/orchestrator.h"

namespace cfclust {
namespace {

using nlohmann::json;

double Quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

json SummaryToJson(const DistanceSummary& s) {
  return {{"count", s.count}, {"min", s.min}, {"q1", s.q1},   {"median", s.median},
          {"mean", s.mean},   {"q3", s.q3},   {"max", s.max}};
}

DistanceSummary SummaryFromJson(const json& j) {
  DistanceSummary s;
  s.count = j.at("count").get<int>();
  s.min = j.at("min").get<double>();
  s.q1 = j.at("q1").get<double>();
  s.median = j.at("median").get<double>();
  s.mean = j.at("mean").get<double>();
  s.q3 = j.at("q3").get<double>();
  s.max = j.at("max").get<double>();
  return s;
}

json OptionalNumber(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

void EvalConfig::Validate(const ClusterModel& model) const {
  if (n_factuals < 1) throw InvalidArgument("n_factuals must be >= 1");
  if (source == target) throw InvalidArgument("source and target clusters coincide");
  for (ClusterId k : {source, target}) {
    if (k < 0 || k >= model.num_clusters()) {
      throw InvalidArgument("cluster id " + std::to_string(k) + " out of range");
    }
  }
  if (mask.size() != model.dim()) throw InvalidArgument("mask length does not match model");
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw InvalidArgument("plausibility factor must be finite and >= 0");
  }
  if (jobs < 1) throw InvalidArgument("jobs must be >= 1");
}

DistanceSummary Summarize(std::vector<double> values) {
  DistanceSummary s;
  s.count = static_cast<int>(values.size());
  if (values.empty()) return s;
  std::sort(values.begin(), values.end());
  s.min = values.front();
  s.max = values.back();
  s.q1 = Quantile(values, 0.25);
  s.median = Quantile(values, 0.5);
  s.q3 = Quantile(values, 0.75);
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
  return s;
}

EvalAggregates ComputeAggregates(const std::vector<EvalRecord>& records) {
  EvalAggregates agg;
  if (records.empty()) return agg;
  std::vector<double> distances;
  std::vector<double> elapsed;
  int strict = 0;
  int tolerant = 0;
  for (const auto& r : records) {
    const bool solved = r.status == CfStatus::kOk || r.status == CfStatus::kDegenerateIdentity;
    if (r.status == CfStatus::kOk) distances.push_back(r.distance_sq);
    if (solved && r.member_strict) ++strict;
    if (solved && r.member_tolerant) ++tolerant;
    elapsed.push_back(r.elapsed_s);
  }
  const double n = static_cast<double>(records.size());
  agg.distance = Summarize(std::move(distances));
  agg.success_strict_pct = 100.0 * strict / n;
  agg.success_tolerant_pct = 100.0 * tolerant / n;
  const DistanceSummary t = Summarize(std::move(elapsed));
  agg.mean_elapsed_s = t.mean;
  agg.median_elapsed_s = t.median;
  return agg;
}

std::vector<int> SampleWithoutReplacement(const std::vector<int>& pool, int n,
                                          std::uint64_t seed) {
  std::vector<int> items = pool;
  const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(std::max(n, 0)),
                                                 items.size());
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < take; ++i) {
    const std::uint64_t span = items.size() - i;
    // Rejection sampling keeps the draw unbiased and library-independent.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t draw;
    do {
      draw = rng();
    } while (draw >= limit);
    std::swap(items[i], items[i + draw % span]);
  }
  items.resize(take);
  std::sort(items.begin(), items.end());
  return items;
}

EvalReport RunEval(const ClusterModel& model, const Dataset& data, const EvalConfig& config) {
  config.Validate(model);
  if (data.dim() != model.dim()) throw InvalidArgument("dataset dimension does not match model");

  EvalReport report;
  report.seed = config.seed;
  report.source = config.source;
  report.target = config.target;
  report.epsilon = config.epsilon;
  report.mask = config.mask.ToString();
  report.n_requested = config.n_factuals;

  std::vector<int> pool;
  for (int i = 0; i < data.size(); ++i) {
    if (AssignCluster(model, model.ToModelSpace(data.row(i))) == config.source) pool.push_back(i);
  }
  if (pool.empty()) {
    throw InvalidArgument("source cluster " + std::to_string(config.source) + " has no rows");
  }
  if (static_cast<int>(pool.size()) < config.n_factuals) {
    report.warnings.push_back("source cluster has only " + std::to_string(pool.size()) +
                              " rows; using all of them");
  }
  const std::vector<int> ids = SampleWithoutReplacement(pool, config.n_factuals, config.seed);

  report.records.resize(ids.size());
  auto solve_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const Vector y = data.row(ids[i]);
      const CfResult r =
          Explain(model, CfRequest{y, config.source, config.target, config.mask, config.epsilon});
      EvalRecord& rec = report.records[i];
      rec.factual_id = ids[i];
      rec.status = r.status;
      rec.distance_sq = r.distance_sq;
      rec.member_strict = r.member_strict;
      rec.member_tolerant = r.member_tolerant;
      rec.elapsed_s = std::chrono::duration<double>(r.elapsed).count();
      rec.lambda = r.lambda;
      rec.factual = y;
      rec.counterfactual = r.counterfactual;
    }
  };
  const std::size_t jobs = std::min<std::size_t>(config.jobs, ids.size());
  if (jobs <= 1) {
    solve_range(0, ids.size());
  } else {
    std::vector<std::thread> workers;
    const std::size_t chunk = (ids.size() + jobs - 1) / jobs;
    for (std::size_t b = 0; b < ids.size(); b += chunk) {
      workers.emplace_back(solve_range, b, std::min(ids.size(), b + chunk));
    }
    for (auto& w : workers) w.join();
  }
  report.aggregates = ComputeAggregates(report.records);

  if (!config.baselines.empty()) {
    std::vector<BaselineTable> tables;
    for (const auto& b : config.baselines) {
      tables.push_back(IngestBaseline(b.path, b.name, model.dim()));
    }
    CompareBaselines(model, tables, report);
  }
  return report;
}

BaselineTable ParseBaseline(const std::string& text, const std::string& name, int dim) {
  BaselineTable table;
  table.name = name;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  bool seen_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (!seen_header) {
      seen_header = true;
      if (cells.empty() || cells.front().find("factual_id") == std::string::npos) {
        throw DataError(name + ": line 1: header must start with 'factual_id'");
      }
      if (static_cast<int>(cells.size()) != dim + 1) {
        throw DataError(name + ": header has " + std::to_string(cells.size() - 1) +
                        " feature columns, model has " + std::to_string(dim));
      }
      continue;
    }
    if (static_cast<int>(cells.size()) != dim + 1) {
      throw DataError(name + ": line " + std::to_string(line_no) + ": expected " +
                      std::to_string(dim + 1) + " cells, got " + std::to_string(cells.size()));
    }
    const auto id = ParseNumber(cells[0]);
    if (!id || *id < 0 || *id != std::floor(*id)) {
      throw DataError(name + ": line " + std::to_string(line_no) + ": bad factual_id '" +
                      cells[0] + "'");
    }
    Vector z(dim);
    for (int c = 0; c < dim; ++c) {
      const auto v = ParseNumber(cells[c + 1]);
      if (!v) {
        throw DataError(name + ": line " + std::to_string(line_no) + ", column " +
                        std::to_string(c + 2) + ": not a finite number");
      }
      z(c) = *v;
    }
    if (!table.counterfactuals.emplace(static_cast<int>(*id), z).second) {
      throw DataError(name + ": duplicate factual_id " + cells[0]);
    }
  }
  if (!seen_header) throw DataError(name + ": empty baseline file");
  return table;
}

BaselineTable IngestBaseline(const std::filesystem::path& path, const std::string& name,
                             int dim) {
  return ParseBaseline(ReadTextFile(path), name, dim);
}

void CompareBaselines(const ClusterModel& model, const std::vector<BaselineTable>& baselines,
                      EvalReport& report) {
  std::map<int, const EvalRecord*> by_id;
  for (const auto& r : report.records) by_id[r.factual_id] = &r;

  report.baselines.clear();
  for (const auto& table : baselines) {
    BaselineResult res;
    res.name = table.name;
    int members = 0;
    for (const auto& [id, z] : table.counterfactuals) {
      auto it = by_id.find(id);
      if (it == by_id.end()) {
        throw DataError(table.name + ": unknown factual_id " + std::to_string(id));
      }
      const Vector z_model = model.ToModelSpace(z);
      res.distance_sq[id] = DistanceSq(z_model, model.ToModelSpace(it->second->factual));
      const bool member = AssignCluster(model, z_model) == report.target;
      res.member[id] = member;
      members += member ? 1 : 0;
    }
    res.success_pct =
        report.records.empty() ? 0.0 : 100.0 * members / static_cast<double>(report.records.size());
    report.baselines.push_back(std::move(res));
  }

  Comparison cmp;
  for (const auto& r : report.records) {
    bool ok = r.status == CfStatus::kOk && r.member_tolerant;
    for (const auto& b : report.baselines) {
      auto it = b.member.find(r.factual_id);
      ok = ok && it != b.member.end() && it->second;
    }
    if (!ok) continue;
    cmp.common_ids.push_back(r.factual_id);
    cmp.distances[kOwnMethodName].push_back(r.distance_sq);
    for (const auto& b : report.baselines) {
      cmp.distances[b.name].push_back(b.distance_sq.at(r.factual_id));
    }
  }
  for (const auto& [name, values] : cmp.distances) cmp.summaries[name] = Summarize(values);
  report.comparison = std::move(cmp);
}

json ReportToJson(const EvalReport& report) {
  json records = json::array();
  for (const auto& r : report.records) {
    records.push_back({{"factual_id", r.factual_id},
                       {"status", std::string(ToString(r.status))},
                       {"distance_sq", r.distance_sq},
                       {"member_strict", r.member_strict},
                       {"member_tolerant", r.member_tolerant},
                       {"elapsed_s", r.elapsed_s},
                       {"lambda", OptionalNumber(r.lambda)},
                       {"factual", VectorToJson(r.factual)},
                       {"counterfactual", VectorToJson(r.counterfactual)}});
  }
  const auto& a = report.aggregates;
  json out = {{"schema_version", report.schema_version},
              {"sampler", report.sampler},
              {"seed", report.seed},
              {"source", report.source},
              {"target", report.target},
              {"epsilon", report.epsilon},
              {"mask", report.mask},
              {"n_requested", report.n_requested},
              {"warnings", report.warnings},
              {"records", records},
              {"aggregates",
               {{"distance", SummaryToJson(a.distance)},
                {"success_strict_pct", a.success_strict_pct},
                {"success_tolerant_pct", a.success_tolerant_pct},
                {"mean_elapsed_s", a.mean_elapsed_s},
                {"median_elapsed_s", a.median_elapsed_s}}}};
  json baselines = json::array();
  for (const auto& b : report.baselines) {
    json dist = json::object();
    json member = json::object();
    for (const auto& [id, d] : b.distance_sq) dist[std::to_string(id)] = d;
    for (const auto& [id, m] : b.member) member[std::to_string(id)] = m;
    baselines.push_back(
        {{"name", b.name}, {"success_pct", b.success_pct}, {"distance_sq", dist}, {"member", member}});
  }
  out["baselines"] = baselines;
  if (report.comparison) {
    json summaries = json::object();
    for (const auto& [name, s] : report.comparison->summaries) summaries[name] = SummaryToJson(s);
    out["comparison"] = {{"common_ids", report.comparison->common_ids},
                         {"distances", report.comparison->distances},
                         {"summaries", summaries}};
  } else {
    out["comparison"] = nullptr;
  }
  return out;
}

EvalReport ReportFromJson(const json& j) {
  EvalReport report;
  report.schema_version = j.at("schema_version").get<int>();
  if (report.schema_version != kReportSchemaVersion) {
    throw InvalidArgument("unsupported report schema_version " +
                          std::to_string(report.schema_version));
  }
  report.sampler = j.at("sampler").get<std::string>();
  report.seed = j.at("seed").get<std::uint64_t>();
  report.source = j.at("source").get<int>();
  report.target = j.at("target").get<int>();
  report.epsilon = j.at("epsilon").get<double>();
  report.mask = j.at("mask").get<std::string>();
  report.n_requested = j.at("n_requested").get<int>();
  report.warnings = j.at("warnings").get<std::vector<std::string>>();
  for (const auto& r : j.at("records")) {
    EvalRecord rec;
    rec.factual_id = r.at("factual_id").get<int>();
    rec.status = CfStatusFromString(r.at("status").get<std::string>());
    rec.distance_sq = r.at("distance_sq").get<double>();
    rec.member_strict = r.at("member_strict").get<bool>();
    rec.member_tolerant = r.at("member_tolerant").get<bool>();
    rec.elapsed_s = r.at("elapsed_s").get<double>();
    if (!r.at("lambda").is_null()) rec.lambda = r.at("lambda").get<double>();
    rec.factual = VectorFromJson(r.at("factual"));
    rec.counterfactual = VectorFromJson(r.at("counterfactual"));
    report.records.push_back(std::move(rec));
  }
  const json& a = j.at("aggregates");
  report.aggregates.distance = SummaryFromJson(a.at("distance"));
  report.aggregates.success_strict_pct = a.at("success_strict_pct").get<double>();
  report.aggregates.success_tolerant_pct = a.at("success_tolerant_pct").get<double>();
  report.aggregates.mean_elapsed_s = a.at("mean_elapsed_s").get<double>();
  report.aggregates.median_elapsed_s = a.at("median_elapsed_s").get<double>();
  for (const auto& b : j.at("baselines")) {
    BaselineResult res;
    res.name = b.at("name").get<std::string>();
    res.success_pct = b.at("success_pct").get<double>();
    for (const auto& [k, v] : b.at("distance_sq").items()) res.distance_sq[std::stoi(k)] = v.get<double>();
    for (const auto& [k, v] : b.at("member").items()) res.member[std::stoi(k)] = v.get<bool>();
    report.baselines.push_back(std::move(res));
  }
  if (!j.at("comparison").is_null()) {
    const json& c = j.at("comparison");
    Comparison cmp;
    cmp.common_ids = c.at("common_ids").get<std::vector<int>>();
    cmp.distances = c.at("distances").get<std::map<std::string, std::vector<double>>>();
    for (const auto& [k, v] : c.at("summaries").items()) cmp.summaries[k] = SummaryFromJson(v);
    report.comparison = std::move(cmp);
  }
  return report;
}

std::string RecordsToCsv(const EvalReport& report) {
  std::ostringstream os;
  os << "factual_id,status,distance_sq,member_strict,member_tolerant,lambda\n";
  for (const auto& r : report.records) {
    os << r.factual_id << ',' << ToString(r.status) << ',' << FormatNumber(r.distance_sq) << ','
       << (r.member_strict ? 1 : 0) << ',' << (r.member_tolerant ? 1 : 0) << ','
       << (r.lambda ? FormatNumber(*r.lambda) : std::string()) << '\n';
  }
  return os.str();
}

std::string RecordsToBaselineCsv(const EvalReport& report) {
  std::ostringstream os;
  os << "factual_id";
  const Eigen::Index d = report.records.empty() ? 0 : report.records.front().factual.size();
  for (Eigen::Index c = 0; c < d; ++c) os << ",x" << c;
  os << '\n';
  for (const auto& r : report.records) {
    if (r.status != CfStatus::kOk) continue;
    os << r.factual_id;
    for (Eigen::Index c = 0; c < d; ++c) os << ',' << FormatNumber(r.counterfactual(c));
    os << '\n';
  }
  return os.str();
}

SweepResult SweepEpsilon(const ClusterModel& model, const Vector& factual, const Mask& mask,
                         ClusterId target, const std::vector<double>& epsilons,
                         std::optional<ClusterId> source) {
  if (epsilons.empty()) throw InvalidArgument("epsilon list is empty");
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    if (!(epsilons[i] >= 0.0) || !std::isfinite(epsilons[i])) {
      throw InvalidArgument("epsilons must be finite and >= 0");
    }
    if (i > 0 && epsilons[i] < epsilons[i - 1]) {
      throw InvalidArgument("epsilons must be sorted ascending");
    }
  }
  SweepResult sweep;
  sweep.epsilons = epsilons;
  for (double eps : epsilons) {
    CfResult r = Explain(model, CfRequest{factual, source, target, mask, eps});
    sweep.deltas.push_back(r.counterfactual - factual);
    sweep.results.push_back(std::move(r));
  }
  return sweep;
}

json SweepToJson(const SweepResult& sweep) {
  json rows = json::array();
  for (std::size_t i = 0; i < sweep.results.size(); ++i) {
    json r = ResultToJson(sweep.results[i]);
    r["epsilon"] = sweep.epsilons[i];
    r["delta"] = VectorToJson(sweep.deltas[i]);
    rows.push_back(std::move(r));
  }
  return {{"schema_version", kReportSchemaVersion}, {"results", rows}};
}

std::string SweepDeltasToCsv(const SweepResult& sweep) {
  std::ostringstream os;
  os << "epsilon,status";
  const Eigen::Index d = sweep.deltas.empty() ? 0 : sweep.deltas.front().size();
  for (Eigen::Index c = 0; c < d; ++c) os << ",delta_" << c;
  os << '\n';
  for (std::size_t i = 0; i < sweep.results.size(); ++i) {
    os << FormatNumber(sweep.epsilons[i]) << ',' << ToString(sweep.results[i].status);
    for (Eigen::Index c = 0; c < d; ++c) os << ',' << FormatNumber(sweep.deltas[i](c));
    os << '\n';
  }
  return os.str();
}

}  // namespace cfclust
