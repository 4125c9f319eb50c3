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

// Persistence: versioned JSON model files, CSV datasets, and JSON
// serialization of counterfactual results.
//
// Model file layout (schema_version 1):
//
//   {
//     "schema_version": 1,
//     "kind": "kmeans" | "gaussian",
//     "dim": d,
//     "num_clusters": M,
//     "centers": [[...], ...],                      // kmeans
//     "components": [{"mean": [...], "prior": p,    // gaussian
//                     "covariance": {"kind": "full", "matrix": [[...]]}
//                                 | {"kind": "diagonal", "variances": [...]}
//                                 | {"kind": "spherical", "variance": s}}],
//     "standardization": null | {"mean": [...], "std": [...]},
//     "provenance": {...}
//   }
//
// Objects are written with sorted keys and shortest round-trip doubles, so a
// save -> load -> save cycle is byte-identical.

#ifndef CFCLUST_MODEL_IO_H_
#define CFCLUST_MODEL_IO_H_

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "cfclust/fit.h"
#include "cfclust/types.h"

namespace cfclust {

inline constexpr int kModelSchemaVersion = 1;

// Model file violations; the message starts with the offending field path.
class ModelFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dataset / CSV violations; the message names the row and column.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ModelFile {
  ClusterModel model;
  nlohmann::json provenance = nlohmann::json::object();
};

nlohmann::json ModelToJson(const ClusterModel& model,
                           const nlohmann::json& provenance = nlohmann::json::object());
ModelFile ModelFromJson(const nlohmann::json& doc);

// Canonical text form of a model file.
std::string SerializeModel(const ClusterModel& model,
                           const nlohmann::json& provenance = nlohmann::json::object());

void SaveModel(const ClusterModel& model, const std::filesystem::path& path,
               const nlohmann::json& provenance = nlohmann::json::object());
ModelFile LoadModelFile(const std::filesystem::path& path);
ClusterModel LoadModel(const std::filesystem::path& path);

// Parses a CSV file of numeric cells. A first row containing any
// non-numeric cell is treated as a header. `label_column` (by header name)
// is removed from the features and kept in Dataset::labels.
Dataset LoadDataset(const std::filesystem::path& path,
                    const std::optional<std::string>& label_column = {});
Dataset ParseDataset(const std::string& text,
                     const std::optional<std::string>& label_column = {});

// Strict locale-independent parse of a finite double; nullopt otherwise.
std::optional<double> ParseNumber(std::string_view cell);
// Shortest round-trip text for a double.
std::string FormatNumber(double value);
// Parses "1.5,2,3" into a vector.
Vector ParseVector(std::string_view text);

nlohmann::json VectorToJson(const Vector& v);
Vector VectorFromJson(const nlohmann::json& j);

nlohmann::json ResultToJson(const CfResult& result);
CfResult ResultFromJson(const nlohmann::json& j);

void WriteTextFile(const std::filesystem::path& path, const std::string& text);
std::string ReadTextFile(const std::filesystem::path& path);

}  // namespace cfclust

#endif  // CFCLUST_MODEL_IO_H_
