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

#ifndef PMIL_DATA_H_
#define PMIL_DATA_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pmil/core.h"
#include "pmil/eval.h"
#include "pmil/predict.h"

namespace pmil {

// Formats written by this library. Readers reject newer versions.
inline constexpr std::uint32_t kManifestVersion = 1;
inline constexpr std::uint32_t kFeaturePayloadVersion = 1;
inline constexpr std::uint32_t kModelVersion = 1;
inline constexpr std::uint32_t kPredictionsVersion = 1;
inline constexpr std::uint32_t kReportVersion = 1;

enum class Split { kTrain, kTest };

const char* SplitName(Split split);

// A validated dataset. `splits` runs parallel to `bags`.
struct Dataset {
  std::size_t feature_dimension = 0;
  std::vector<std::string> classes;
  std::vector<Bag> bags;
  std::vector<Split> splits;

  std::vector<Bag> BagsIn(Split split) const;
  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// Checks every invariant the loader enforces: known class labels, unique bag
// ids, consistent feature dimension, valid bags.
void ValidateDataset(const Dataset& dataset);

// Reads a JSON manifest and the payload and tube files it references (paths
// relative to the manifest). Every failure is a pmil::Error naming the file
// and record.
Dataset LoadDataset(const std::filesystem::path& manifest_path);

// Writes manifest.json plus features/<n>.bin and tubes/<n>.csv under `dir`.
// Returns the manifest path.
std::filesystem::path SaveDataset(const Dataset& dataset,
                                  const std::filesystem::path& dir);

// Feature payload: "PMILFEAT", u32 version, u32 dimension, u32 count, then
// count * dimension little-endian float32 values.
std::vector<std::vector<float>> ReadFeaturePayload(
    const std::filesystem::path& path);
void WriteFeaturePayload(const std::filesystem::path& path,
                         std::span<const std::vector<float>> vectors,
                         std::size_t dimension);

// Tube records as CSV: header "instance,frame,x,y,w,h", one row per frame.
// Video dimensions live in the manifest. Returns one tube per instance index
// 0..count-1; every index must be present.
std::vector<Tube> ReadTubeFile(const std::filesystem::path& path,
                               std::size_t count, std::uint32_t frames,
                               std::uint32_t width, std::uint32_t height);
void WriteTubeFile(const std::filesystem::path& path,
                   std::span<const Tube> tubes);

enum class FeatureNorm { kL2, kL1 };

// Component-wise mean of per-frame vectors, then normalized. A zero mean
// stays zero.
FeatureVector AggregateFrameFeatures(std::span<const FeatureVector> frames,
                                     FeatureNorm norm = FeatureNorm::kL2);

// Binary model file with a checksum trailer; see README for the layout.
void SaveModel(const ClassModel& model, const std::filesystem::path& path);
ClassModel LoadModel(const std::filesystem::path& path);
std::string SerializeModel(const ClassModel& model);
ClassModel DeserializeModel(std::string_view bytes);

// Prediction dump: JSON with one record per (bag, class).
void SavePredictions(std::span<const BagPrediction> predictions,
                     const std::filesystem::path& path);
std::vector<BagPrediction> LoadPredictions(const std::filesystem::path& path);

// Machine-readable evaluation report (JSON), plus the tabular summary and
// CSV exports written by WriteReportFiles.
void SaveReport(const EvalReport& report, const std::filesystem::path& path);
EvalReport LoadReport(const std::filesystem::path& path);
std::string FormatReportSummary(const EvalReport& report,
                                const std::string& title);
void WriteReportFiles(const EvalReport& report, const std::string& title,
                      const std::filesystem::path& dir);

// Hyperparameters as a JSON object; missing keys keep the values in `base`.
std::string HyperparametersToJson(const Hyperparameters& hp);
Hyperparameters HyperparametersFromJson(std::string_view text,
                                        const Hyperparameters& base = {});
Hyperparameters LoadHyperparameters(const std::filesystem::path& path,
                                    const Hyperparameters& base = {});

// Whole-file helpers; throw kIo.
std::string ReadFile(const std::filesystem::path& path);
void WriteFile(const std::filesystem::path& path, std::string_view bytes);

}  // namespace pmil

#endif  // PMIL_DATA_H_
