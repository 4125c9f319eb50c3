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

#include "cfclust/model_io.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace cfclust {
namespace {

using nlohmann::json;

constexpr double kPriorSumTol = 1e-9;

[[noreturn]] void Fail(const std::string& path, const std::string& message) {
  throw ModelFormatError(path + ": " + message);
}

const json& Field(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) Fail(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) Fail(path + "." + key, "missing");
  return *it;
}

Vector ReadVector(const json& j, const std::string& path, Eigen::Index expected = -1) {
  if (!j.is_array()) Fail(path, "expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) Fail(path + "[" + std::to_string(i) + "]", "expected a number");
    v(i) = j[i].get<double>();
    if (!std::isfinite(v(i))) Fail(path + "[" + std::to_string(i) + "]", "non-finite value");
  }
  if (expected >= 0 && v.size() != expected) {
    Fail(path, "expected length " + std::to_string(expected) + ", got " +
                   std::to_string(v.size()));
  }
  return v;
}

double ReadNumber(const json& j, const std::string& path) {
  if (!j.is_number()) Fail(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) Fail(path, "non-finite value");
  return v;
}

int ReadInt(const json& j, const std::string& path) {
  if (!j.is_number_integer()) Fail(path, "expected an integer");
  return j.get<int>();
}

CovarianceSpec ReadCovariance(const json& j, const std::string& path, int d) {
  const std::string kind = Field(j, "kind", path).is_string()
                               ? Field(j, "kind", path).get<std::string>()
                               : std::string();
  try {
    if (kind == "full") {
      const json& rows = Field(j, "matrix", path);
      const std::string mpath = path + ".matrix";
      if (!rows.is_array() || static_cast<int>(rows.size()) != d) {
        Fail(mpath, "expected " + std::to_string(d) + " rows");
      }
      Matrix m(d, d);
      for (int r = 0; r < d; ++r) {
        m.row(r) = ReadVector(rows[r], mpath + "[" + std::to_string(r) + "]", d).transpose();
      }
      try {
        return CovarianceSpec::Full(m);
      } catch (const InvalidArgument& e) {
        Fail(mpath, e.what());
      }
    }
    if (kind == "diagonal") {
      return CovarianceSpec::Diagonal(ReadVector(Field(j, "variances", path),
                                                 path + ".variances", d));
    }
    if (kind == "spherical") {
      return CovarianceSpec::Spherical(ReadNumber(Field(j, "variance", path),
                                                  path + ".variance"),
                                       d);
    }
  } catch (const InvalidArgument& e) {
    Fail(path, e.what());
  }
  Fail(path + ".kind", "expected one of full, diagonal, spherical");
}

json CovarianceToJson(const CovarianceSpec& cov) {
  json out;
  out["kind"] = std::string(ToString(cov.kind()));
  switch (cov.kind()) {
    case CovarianceKind::kFull: {
      const Matrix m = cov.Dense();
      json rows = json::array();
      for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(VectorToJson(m.row(r).transpose()));
      out["matrix"] = rows;
      break;
    }
    case CovarianceKind::kDiagonal:
      out["variances"] = VectorToJson(cov.diagonal_variances());
      break;
    case CovarianceKind::kSpherical:
      out["variance"] = cov.spherical_variance();
      break;
  }
  return out;
}

std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') {
      quoted = !quoted;
    } else if (ch == ',' && !quoted) {
      cells.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  cells.push_back(cur);
  for (auto& c : cells) {
    const auto b = c.find_first_not_of(" \t");
    const auto e = c.find_last_not_of(" \t");
    c = b == std::string::npos ? std::string() : c.substr(b, e - b + 1);
  }
  return cells;
}

}  // namespace

std::optional<double> ParseNumber(std::string_view cell) {
  while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
  while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t')) cell.remove_suffix(1);
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  if (cell.empty()) return std::nullopt;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

std::string FormatNumber(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

Vector ParseVector(std::string_view text) {
  std::vector<double> values;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = text.find(',', pos);
    const auto tok = text.substr(pos, comma == std::string_view::npos ? text.npos : comma - pos);
    const auto v = ParseNumber(tok);
    if (!v) throw InvalidArgument("not a finite number: '" + std::string(tok) + "'");
    values.push_back(*v);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

json VectorToJson(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Vector VectorFromJson(const json& j) { return ReadVector(j, "$"); }

json ModelToJson(const ClusterModel& model, const json& provenance) {
  json doc;
  doc["schema_version"] = kModelSchemaVersion;
  doc["kind"] = std::string(ToString(model.kind()));
  doc["dim"] = model.dim();
  doc["num_clusters"] = model.num_clusters();
  if (model.kind() == ModelKind::kKMeans) {
    json centers = json::array();
    for (const auto& c : model.centers()) centers.push_back(VectorToJson(c));
    doc["centers"] = centers;
  } else {
    json comps = json::array();
    for (const auto& c : model.components()) {
      comps.push_back({{"mean", VectorToJson(c.mean)},
                       {"prior", c.prior},
                       {"covariance", CovarianceToJson(c.covariance)}});
    }
    doc["components"] = comps;
  }
  if (model.standardization()) {
    doc["standardization"] = {{"mean", VectorToJson(model.standardization()->mean)},
                              {"std", VectorToJson(model.standardization()->scale)}};
  } else {
    doc["standardization"] = nullptr;
  }
  doc["provenance"] = provenance.is_null() ? json::object() : provenance;
  return doc;
}

ModelFile ModelFromJson(const json& doc) {
  if (!doc.is_object()) Fail("$", "expected an object");
  const int version = ReadInt(Field(doc, "schema_version", "$"), "schema_version");
  if (version != kModelSchemaVersion) {
    Fail("schema_version", "unsupported version " + std::to_string(version) + " (expected " +
                               std::to_string(kModelSchemaVersion) + ")");
  }
  const json& kind_j = Field(doc, "kind", "$");
  const std::string kind = kind_j.is_string() ? kind_j.get<std::string>() : "";
  const int d = ReadInt(Field(doc, "dim", "$"), "dim");
  if (d < 1) Fail("dim", "must be >= 1");
  const int m = ReadInt(Field(doc, "num_clusters", "$"), "num_clusters");
  if (m < 2) Fail("num_clusters", "must be >= 2");

  std::optional<Standardization> standardization;
  if (auto it = doc.find("standardization"); it != doc.end() && !it->is_null()) {
    Standardization s;
    s.mean = ReadVector(Field(*it, "mean", "standardization"), "standardization.mean", d);
    s.scale = ReadVector(Field(*it, "std", "standardization"), "standardization.std", d);
    if ((s.scale.array() <= 0.0).any()) Fail("standardization.std", "entries must be > 0");
    standardization = s;
  }

  json provenance = json::object();
  if (auto it = doc.find("provenance"); it != doc.end() && !it->is_null()) provenance = *it;

  auto build = [&]() -> ClusterModel {
    if (kind == "kmeans") {
      const json& centers = Field(doc, "centers", "$");
      if (!centers.is_array() || static_cast<int>(centers.size()) != m) {
        Fail("centers", "expected " + std::to_string(m) + " centers");
      }
      std::vector<Vector> cs;
      for (int k = 0; k < m; ++k) {
        cs.push_back(ReadVector(centers[k], "centers[" + std::to_string(k) + "]", d));
      }
      return ClusterModel::KMeans(std::move(cs), standardization);
    }
    if (kind == "gaussian") {
      const json& comps = Field(doc, "components", "$");
      if (!comps.is_array() || static_cast<int>(comps.size()) != m) {
        Fail("components", "expected " + std::to_string(m) + " components");
      }
      std::vector<GaussianComponent> out;
      double prior_sum = 0.0;
      for (int k = 0; k < m; ++k) {
        const std::string path = "components[" + std::to_string(k) + "]";
        const json& c = comps[k];
        Vector mean = ReadVector(Field(c, "mean", path), path + ".mean", d);
        CovarianceSpec cov = ReadCovariance(Field(c, "covariance", path), path + ".covariance", d);
        const double prior = ReadNumber(Field(c, "prior", path), path + ".prior");
        if (!(prior > 0.0 && prior <= 1.0)) Fail(path + ".prior", "must lie in (0, 1]");
        prior_sum += prior;
        out.push_back({std::move(mean), std::move(cov), prior});
      }
      if (std::abs(prior_sum - 1.0) > kPriorSumTol) {
        std::ostringstream os;
        os << "priors sum to " << prior_sum << ", expected 1";
        Fail("components[*].prior", os.str());
      }
      return ClusterModel::Gaussian(std::move(out), standardization);
    }
    Fail("kind", "expected 'kmeans' or 'gaussian'");
  };
  try {
    return ModelFile{build(), std::move(provenance)};
  } catch (const InvalidArgument& e) {
    Fail(kind == "kmeans" ? "centers" : "components", e.what());
  }
}

std::string SerializeModel(const ClusterModel& model, const json& provenance) {
  return ModelToJson(model, provenance).dump(2) + "\n";
}

void SaveModel(const ClusterModel& model, const std::filesystem::path& path,
               const json& provenance) {
  WriteTextFile(path, SerializeModel(model, provenance));
}

ModelFile LoadModelFile(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(ReadTextFile(path));
  } catch (const json::parse_error& e) {
    throw ModelFormatError(std::string("$: malformed JSON: ") + e.what());
  }
  return ModelFromJson(doc);
}

ClusterModel LoadModel(const std::filesystem::path& path) { return LoadModelFile(path).model; }

Dataset ParseDataset(const std::string& text, const std::optional<std::string>& label_column) {
  std::vector<std::vector<std::string>> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    lines.push_back(SplitCsvLine(line));
  }
  if (lines.empty()) throw DataError("empty data file");

  bool header = false;
  for (const auto& cell : lines.front()) {
    if (!ParseNumber(cell)) header = true;
  }
  const std::size_t ncols = lines.front().size();
  int label_idx = -1;
  if (label_column) {
    if (header) {
      for (std::size_t c = 0; c < ncols; ++c) {
        if (lines.front()[c] == *label_column) label_idx = static_cast<int>(c);
      }
    } else if (auto idx = ParseNumber(*label_column);
               idx && *idx >= 0 && *idx < static_cast<double>(ncols) &&
               *idx == std::floor(*idx)) {
      label_idx = static_cast<int>(*idx);
    }
    if (label_idx < 0) throw DataError("label column '" + *label_column + "' not found");
  }

  Dataset data;
  const std::size_t first = header ? 1 : 0;
  const std::size_t nrows = lines.size() - first;
  if (nrows == 0) throw DataError("data file has a header but no rows");
  const std::size_t nfeat = ncols - (label_idx >= 0 ? 1 : 0);
  if (nfeat == 0) throw DataError("no feature columns");
  if (header) {
    for (std::size_t c = 0; c < ncols; ++c) {
      if (static_cast<int>(c) != label_idx) data.feature_names.push_back(lines.front()[c]);
    }
  }
  data.rows.resize(static_cast<Eigen::Index>(nrows), static_cast<Eigen::Index>(nfeat));
  for (std::size_t r = 0; r < nrows; ++r) {
    const auto& cells = lines[first + r];
    const std::size_t file_row = first + r + 1;
    if (cells.size() != ncols) {
      throw DataError("row " + std::to_string(file_row) + ": expected " + std::to_string(ncols) +
                      " columns, got " + std::to_string(cells.size()));
    }
    std::size_t out_c = 0;
    for (std::size_t c = 0; c < ncols; ++c) {
      if (static_cast<int>(c) == label_idx) {
        data.labels.push_back(cells[c]);
        continue;
      }
      const auto v = ParseNumber(cells[c]);
      if (!v) {
        throw DataError("row " + std::to_string(file_row) + ", column " + std::to_string(c + 1) +
                        ": not a finite number: '" + cells[c] + "'");
      }
      data.rows(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(out_c++)) = *v;
    }
  }
  return data;
}

Dataset LoadDataset(const std::filesystem::path& path,
                    const std::optional<std::string>& label_column) {
  return ParseDataset(ReadTextFile(path), label_column);
}

json ResultToJson(const CfResult& r) {
  json out;
  out["status"] = std::string(ToString(r.status));
  out["counterfactual"] = VectorToJson(r.counterfactual);
  out["counterfactual_model"] = VectorToJson(r.counterfactual_model);
  out["distance_sq"] = r.distance_sq;
  out["lambda"] = r.lambda ? json(*r.lambda) : json(nullptr);
  out["residual"] = r.residual;
  out["roots_found"] = r.roots_found;
  out["elapsed_ns"] = r.elapsed.count();
  out["elapsed_s"] = std::chrono::duration<double>(r.elapsed).count();
  out["source"] = r.source;
  out["target"] = r.target;
  out["member_strict"] = r.member_strict;
  out["member_tolerant"] = r.member_tolerant;
  out["uniqueness"] = r.uniqueness ? json(std::string(ToString(*r.uniqueness))) : json(nullptr);
  out["detail"] = r.detail;
  return out;
}

CfResult ResultFromJson(const json& j) {
  CfResult r;
  r.status = CfStatusFromString(j.at("status").get<std::string>());
  r.counterfactual = ReadVector(j.at("counterfactual"), "counterfactual");
  r.counterfactual_model = ReadVector(j.at("counterfactual_model"), "counterfactual_model");
  r.distance_sq = j.at("distance_sq").get<double>();
  if (!j.at("lambda").is_null()) r.lambda = j.at("lambda").get<double>();
  r.residual = j.at("residual").get<double>();
  r.roots_found = j.at("roots_found").get<int>();
  r.elapsed = std::chrono::nanoseconds(j.at("elapsed_ns").get<std::int64_t>());
  r.source = j.at("source").get<int>();
  r.target = j.at("target").get<int>();
  r.member_strict = j.at("member_strict").get<bool>();
  r.member_tolerant = j.at("member_tolerant").get<bool>();
  if (!j.at("uniqueness").is_null()) {
    r.uniqueness = j.at("uniqueness").get<std::string>() == "unique" ? Uniqueness::kUnique
                                                                     : Uniqueness::kIndeterminate;
  }
  r.detail = j.at("detail").get<std::string>();
  return r;
}

void WriteTextFile(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

std::string ReadTextFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace cfclust
