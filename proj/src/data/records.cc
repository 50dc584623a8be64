// Copyright 2026 The PMIL Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>
#include <string>

#include "json.hpp"
#include "pmil/data.h"
#include "pmil/error.h"

namespace pmil {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

constexpr std::string_view kPredictionsFormat = "pmil-predictions";
constexpr std::string_view kReportFormat = "pmil-report";

json ParseJson(std::string_view text, const std::string& where) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kCorruptFile, where + ": " + e.what());
  }
}

void CheckHeader(const json& doc, std::string_view format,
                 std::uint32_t supported, const std::string& where) {
  if (!doc.is_object() || !doc.contains("format") ||
      doc.at("format") != format) {
    throw Error(ErrorKind::kCorruptFile,
                where + ": not a " + std::string(format) + " file");
  }
  const json& v = doc.at("version");
  if (!v.is_number_integer() || v.get<std::int64_t>() < 1 ||
      v.get<std::int64_t>() > supported) {
    throw Error(ErrorKind::kVersionMismatch,
                where + ": unsupported version " + v.dump());
  }
}

// Runs `fn`, turning JSON access errors into kCorruptFile.
template <typename Fn>
auto Guard(const std::string& where, Fn fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kCorruptFile, where + ": " + e.what());
  }
}

std::string FormatDouble(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string CsvField(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

void SavePredictions(std::span<const BagPrediction> predictions,
                     const std::filesystem::path& path) {
  ordered_json doc;
  doc["format"] = kPredictionsFormat;
  doc["version"] = kPredictionsVersion;
  ordered_json records = ordered_json::array();
  for (const BagPrediction& p : predictions) {
    ordered_json r;
    r["bag_id"] = p.bag_id;
    r["class_name"] = p.class_name;
    r["set_probability"] = p.set_probability;
    r["set_log_complement"] = p.set_log_complement;
    r["argmax_index"] = p.argmax_index;
    r["instance_probabilities"] = p.instance_probabilities;
    records.push_back(std::move(r));
  }
  doc["records"] = std::move(records);
  WriteFile(path, doc.dump() + "\n");
}

std::vector<BagPrediction> LoadPredictions(const std::filesystem::path& path) {
  const std::string where = path.string();
  const json doc = ParseJson(ReadFile(path), where);
  return Guard(where, [&] {
    CheckHeader(doc, kPredictionsFormat, kPredictionsVersion, where);
    std::vector<BagPrediction> out;
    for (const json& r : doc.at("records")) {
      BagPrediction p;
      p.bag_id = r.at("bag_id").get<std::string>();
      p.class_name = r.at("class_name").get<std::string>();
      p.set_probability = r.at("set_probability").get<double>();
      p.set_log_complement = r.at("set_log_complement").get<double>();
      p.argmax_index = r.at("argmax_index").get<std::size_t>();
      p.instance_probabilities =
          r.at("instance_probabilities").get<std::vector<double>>();
      const bool valid =
          !p.instance_probabilities.empty() &&
          p.argmax_index < p.instance_probabilities.size() &&
          p.set_probability > 0.0 && p.set_probability < 1.0 &&
          p.set_log_complement <= 0.0 && std::isfinite(p.set_log_complement);
      bool probabilities_valid = true;
      for (double q : p.instance_probabilities) {
        probabilities_valid = probabilities_valid && q > 0.0 && q < 1.0;
      }
      if (!valid || !probabilities_valid) {
        throw Error(ErrorKind::kCorruptFile,
                    where + ": invalid record for bag '" + p.bag_id + "'");
      }
      out.push_back(std::move(p));
    }
    return out;
  });
}

void SaveReport(const EvalReport& report, const std::filesystem::path& path) {
  ordered_json doc;
  doc["format"] = kReportFormat;
  doc["version"] = kReportVersion;
  doc["iou_threshold"] = report.iou_threshold;
  doc["map"] = report.map_score;
  doc["per_class_ap"] = report.per_class_ap;
  doc["omitted_classes"] = report.omitted_classes;
  doc["per_class_msero"] = report.per_class_msero;
  doc["classification_accuracy"] = report.classification_accuracy;
  ordered_json sweep = ordered_json::array();
  for (const CurvePoint& p : report.map_sweep) {
    sweep.push_back({{"threshold", p.threshold}, {"map", p.value}});
  }
  doc["map_sweep"] = std::move(sweep);
  ordered_json recall = ordered_json::array();
  for (const RecallPoint& p : report.recall_iou) {
    recall.push_back({{"threshold", p.threshold}, {"recall", p.recall}});
  }
  doc["recall_iou"] = std::move(recall);
  ordered_json scatter = ordered_json::array();
  for (const ScatterRecord& s : report.scatter_records) {
    scatter.push_back({{"bag_id", s.bag_id},
                       {"instance_id", s.instance_id},
                       {"class_name", s.class_name},
                       {"probability", s.probability},
                       {"iou", s.iou},
                       {"is_argmax", s.is_argmax},
                       {"is_optimal", s.is_optimal}});
  }
  doc["scatter"] = std::move(scatter);
  WriteFile(path, doc.dump(1) + "\n");
}

EvalReport LoadReport(const std::filesystem::path& path) {
  const std::string where = path.string();
  const json doc = ParseJson(ReadFile(path), where);
  return Guard(where, [&] {
    CheckHeader(doc, kReportFormat, kReportVersion, where);
    EvalReport r;
    r.iou_threshold = doc.at("iou_threshold").get<double>();
    r.map_score = doc.at("map").get<double>();
    r.per_class_ap = doc.at("per_class_ap").get<std::map<std::string, double>>();
    r.omitted_classes = doc.at("omitted_classes").get<std::vector<std::string>>();
    r.per_class_msero =
        doc.at("per_class_msero").get<std::map<std::string, double>>();
    r.classification_accuracy = doc.at("classification_accuracy").get<double>();
    for (const json& p : doc.at("map_sweep")) {
      r.map_sweep.push_back(
          {p.at("threshold").get<double>(), p.at("map").get<double>()});
    }
    for (const json& p : doc.at("recall_iou")) {
      r.recall_iou.push_back(
          {p.at("threshold").get<double>(), p.at("recall").get<double>()});
    }
    for (const json& s : doc.at("scatter")) {
      r.scatter_records.push_back(
          {s.at("bag_id").get<std::string>(),
           s.at("instance_id").get<std::string>(),
           s.at("class_name").get<std::string>(),
           s.at("probability").get<double>(), s.at("iou").get<double>(),
           s.at("is_argmax").get<bool>(), s.at("is_optimal").get<bool>()});
    }
    return r;
  });
}

std::string FormatReportSummary(const EvalReport& report,
                                const std::string& title) {
  std::string out;
  char line[256];
  out += title + "\n\n";
  std::snprintf(line, sizeof(line), "%-24s | %8s | %10s | %10s\n", "CLASS",
                "AP (%)", "mSERO", "mSERO x100");
  out += line;
  out += std::string(62, '-') + "\n";
  std::set<std::string> classes;
  for (const auto& [c, v] : report.per_class_ap) classes.insert(c);
  for (const auto& [c, v] : report.per_class_msero) classes.insert(c);
  for (const std::string& c : classes) {
    char ap[32] = "-";
    char ms[32] = "-";
    char ms100[32] = "-";
    if (auto it = report.per_class_ap.find(c); it != report.per_class_ap.end()) {
      std::snprintf(ap, sizeof(ap), "%.2f", 100.0 * it->second);
    }
    if (auto it = report.per_class_msero.find(c);
        it != report.per_class_msero.end()) {
      std::snprintf(ms, sizeof(ms), "%.6f", it->second);
      std::snprintf(ms100, sizeof(ms100), "%.3f", 100.0 * it->second);
    }
    std::snprintf(line, sizeof(line), "%-24s | %8s | %10s | %10s\n", c.c_str(),
                  ap, ms, ms100);
    out += line;
  }
  out += std::string(62, '-') + "\n";
  std::snprintf(line, sizeof(line), "mAP @ %.2f IOU: %.2f\n",
                report.iou_threshold, 100.0 * report.map_score);
  out += line;
  std::snprintf(line, sizeof(line), "classification accuracy: %.2f%%\n",
                100.0 * report.classification_accuracy);
  out += line;
  if (!report.omitted_classes.empty()) {
    out += "classes absent from the test bags (excluded from mAP):";
    for (const std::string& c : report.omitted_classes) out += " " + c;
    out += "\n";
  }
  return out;
}

void WriteReportFiles(const EvalReport& report, const std::string& title,
                      const std::filesystem::path& dir) {
  SaveReport(report, dir / "report.json");
  WriteFile(dir / "summary.txt", FormatReportSummary(report, title));

  std::string sweep = "iou_threshold,map\n";
  for (const CurvePoint& p : report.map_sweep) {
    sweep += FormatDouble(p.threshold) + "," + FormatDouble(p.value) + "\n";
  }
  WriteFile(dir / "map_sweep.csv", sweep);

  std::string recall = "iou_threshold,recall\n";
  for (const RecallPoint& p : report.recall_iou) {
    recall += FormatDouble(p.threshold) + "," + FormatDouble(p.recall) + "\n";
  }
  WriteFile(dir / "recall_iou.csv", recall);

  std::string scatter =
      "bag_id,instance_id,class_name,probability,iou,is_argmax,is_optimal\n";
  for (const ScatterRecord& s : report.scatter_records) {
    scatter += CsvField(s.bag_id) + "," + CsvField(s.instance_id) + "," +
               CsvField(s.class_name) + "," + FormatDouble(s.probability) +
               "," + FormatDouble(s.iou) + "," + (s.is_argmax ? "1" : "0") +
               "," + (s.is_optimal ? "1" : "0") + "\n";
  }
  WriteFile(dir / "scatter.csv", scatter);
}

std::string HyperparametersToJson(const Hyperparameters& hp) {
  ordered_json doc;
  doc["lambda"] = hp.lambda;
  doc["beta"] = hp.beta;
  doc["gamma"] = hp.gamma;
  doc["eta"] = hp.eta;
  doc["zeta"] = hp.zeta;
  doc["omega"] = hp.omega;
  doc["pi"] = hp.pi;
  doc["filter_max_volume_fraction"] = hp.filter_max_volume_fraction;
  doc["split_mode"] =
      hp.split_mode == SplitMode::kThreshold ? "threshold" : "top_k";
  doc["top_k"] = hp.top_k;
  doc["seed"] = hp.seed;
  return doc.dump(2) + "\n";
}

Hyperparameters HyperparametersFromJson(std::string_view text,
                                        const Hyperparameters& base) {
  const json doc = ParseJson(text, "hyperparameters");
  return Guard("hyperparameters", [&] {
    if (!doc.is_object()) {
      throw Error(ErrorKind::kCorruptFile,
                  "hyperparameters: expected a JSON object");
    }
    Hyperparameters hp = base;
    for (const auto& [key, value] : doc.items()) {
      if (key == "lambda") {
        hp.lambda = value.get<double>();
      } else if (key == "beta") {
        hp.beta = value.get<double>();
      } else if (key == "gamma") {
        hp.gamma = value.get<double>();
      } else if (key == "eta") {
        hp.eta = value.get<double>();
      } else if (key == "zeta") {
        hp.zeta = value.get<double>();
      } else if (key == "omega") {
        hp.omega = value.get<double>();
      } else if (key == "pi") {
        hp.pi = value.get<std::uint32_t>();
      } else if (key == "filter_max_volume_fraction") {
        hp.filter_max_volume_fraction = value.get<double>();
      } else if (key == "split_mode") {
        const auto mode = value.get<std::string>();
        if (mode == "threshold") {
          hp.split_mode = SplitMode::kThreshold;
        } else if (mode == "top_k") {
          hp.split_mode = SplitMode::kTopK;
        } else {
          throw Error(ErrorKind::kInvalidArgument,
                      "hyperparameters: unknown split_mode '" + mode + "'");
        }
      } else if (key == "top_k") {
        hp.top_k = value.get<std::uint32_t>();
      } else if (key == "seed") {
        hp.seed = value.get<std::uint64_t>();
      } else if (!key.empty() && key[0] == '_') {
        // Comment keys.
      } else {
        throw Error(ErrorKind::kInvalidArgument,
                    "hyperparameters: unknown key '" + key + "'");
      }
    }
    ValidateHyperparameters(hp);
    return hp;
  });
}

Hyperparameters LoadHyperparameters(const std::filesystem::path& path,
                                    const Hyperparameters& base) {
  try {
    return HyperparametersFromJson(ReadFile(path), base);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

}  // namespace pmil
