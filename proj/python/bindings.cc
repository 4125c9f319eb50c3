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

#include <optional>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "cfclust/eval.h"
#include "cfclust/fit.h"
#include "cfclust/model_io.h"
#include "cfclust/orchestrator.h"

namespace py = pybind11;

namespace cfclust {
namespace {

// Results cross the boundary as plain dicts with the same layout as the
// JSON files written by the command line tool.
py::object ToPython(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

Mask MaskOrAllFree(const std::optional<std::vector<bool>>& bits, int dim) {
  return bits ? Mask(*bits) : Mask::AllFree(dim);
}

ClusterModel Fit(const Matrix& rows, const std::string& algorithm, int k,
                 const std::string& covariance, std::uint64_t seed, int restarts, int max_iter,
                 bool standardize) {
  FitConfig config;
  if (algorithm == "kmeans") {
    config.algorithm = FitAlgorithm::kKMeans;
  } else if (algorithm == "gmm") {
    config.algorithm = FitAlgorithm::kGmm;
  } else {
    throw InvalidArgument("algorithm must be 'kmeans' or 'gmm', got '" + algorithm + "'");
  }
  config.covariance = CovarianceKindFromString(covariance);
  config.num_clusters = k;
  config.seed = seed;
  config.restarts = restarts;
  config.max_iter = max_iter;
  config.standardize = standardize;
  Dataset data;
  data.rows = rows;
  return config.algorithm == FitAlgorithm::kKMeans ? FitKMeans(data, config)
                                                   : FitGmm(data, config);
}

py::object ExplainPy(const ClusterModel& model, const Vector& factual, int target,
                     const std::optional<std::vector<bool>>& mask, double epsilon,
                     std::optional<int> source) {
  CfRequest request{factual, source, target, MaskOrAllFree(mask, model.dim()), epsilon};
  return ToPython(ResultToJson(Explain(model, request)));
}

py::object ExplainBestPy(const ClusterModel& model, const Vector& factual,
                         const std::optional<std::vector<bool>>& mask, double epsilon) {
  const BestResult best = ExplainBest(model, factual, MaskOrAllFree(mask, model.dim()), epsilon);
  nlohmann::json doc = ResultToJson(best.result);
  doc["chosen_target"] = best.chosen_target;
  return ToPython(doc);
}

py::object SweepPy(const ClusterModel& model, const Vector& factual, int target,
                   const std::vector<double>& epsilons,
                   const std::optional<std::vector<bool>>& mask) {
  return ToPython(
      SweepToJson(SweepEpsilon(model, factual, MaskOrAllFree(mask, model.dim()), target, epsilons)));
}

py::object EvaluatePy(const ClusterModel& model, const Matrix& rows, int source, int target,
                      int n, std::uint64_t seed, double epsilon,
                      const std::optional<std::vector<bool>>& mask, int jobs) {
  EvalConfig config;
  config.source = source;
  config.target = target;
  config.n_factuals = n;
  config.seed = seed;
  config.epsilon = epsilon;
  config.mask = MaskOrAllFree(mask, model.dim());
  config.jobs = jobs;
  Dataset data;
  data.rows = rows;
  EvalReport report;
  {
    py::gil_scoped_release release;
    report = RunEval(model, data, config);
  }
  return ToPython(ReportToJson(report));
}

}  // namespace
}  // namespace cfclust

PYBIND11_MODULE(_cfclust, m) {
  using namespace cfclust;
  using py::arg;
  m.doc() = "Counterfactual explanations for k-means and Gaussian clusterings.";

  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<FitError>(m, "FitError", PyExc_RuntimeError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<ModelFormatError>(m, "ModelFormatError", PyExc_ValueError);

  py::class_<ClusterModel>(m, "Model")
      .def_property_readonly("kind",
                             [](const ClusterModel& c) { return std::string(ToString(c.kind())); })
      .def_property_readonly("dim", &ClusterModel::dim)
      .def_property_readonly("num_clusters", &ClusterModel::num_clusters)
      .def_property_readonly("means", &ClusterModel::centers,
                             "Cluster centers in model space.")
      .def(
          "assign",
          [](const ClusterModel& c, const Vector& x) { return AssignCluster(c, c.ToModelSpace(x)); },
          arg("x"), "Cluster of a point given in raw units.")
      .def("to_json", [](const ClusterModel& c) { return SerializeModel(c); })
      .def_static("from_json",
                  [](const std::string& text) {
                    return ModelFromJson(nlohmann::json::parse(text)).model;
                  })
      .def("save", [](const ClusterModel& c, const std::filesystem::path& p) { SaveModel(c, p); })
      .def_static("load", &LoadModel, arg("path"));

  m.def("fit", &Fit, arg("rows"), arg("algorithm") = "kmeans", arg("k") = 2,
        arg("covariance") = "full", arg("seed") = 0, arg("restarts") = 1, arg("max_iter") = 300,
        arg("standardize") = true);
  m.def("explain", &ExplainPy, arg("model"), arg("factual"), arg("target"),
        arg("mask") = py::none(), arg("epsilon") = kDefaultEpsilon, arg("source") = py::none());
  m.def("explain_best", &ExplainBestPy, arg("model"), arg("factual"), arg("mask") = py::none(),
        arg("epsilon") = kDefaultEpsilon);
  m.def("sweep", &SweepPy, arg("model"), arg("factual"), arg("target"), arg("epsilons"),
        arg("mask") = py::none());
  m.def("evaluate", &EvaluatePy, arg("model"), arg("rows"), arg("source") = 0, arg("target") = 1,
        arg("n") = 50, arg("seed") = 0, arg("epsilon") = kDefaultEpsilon, arg("mask") = py::none(),
        arg("jobs") = 1);
}
