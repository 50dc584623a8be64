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

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "json.hpp"
#include "pmil/data.h"
#include "pmil/experiment.h"
#include "pmil/synthetic.h"
#include "test_util.h"

namespace pmil {
namespace {

using testing::TempDir;

FeatureVector Fv(std::vector<float> v) { return FeatureVector(std::move(v)); }

TEST(AggregateFrameFeatures, SingleFrameIsNormalized) {
  const std::vector<FeatureVector> frames{Fv({2.f, 0.f, 0.f})};
  EXPECT_EQ(AggregateFrameFeatures(frames), Fv({1.f, 0.f, 0.f}));
}

TEST(AggregateFrameFeatures, OpposedFramesCancelToZero) {
  const std::vector<FeatureVector> frames{Fv({1.f, -2.f}), Fv({-1.f, 2.f})};
  EXPECT_EQ(AggregateFrameFeatures(frames), Fv({0.f, 0.f}));
}

TEST(AggregateFrameFeatures, MeanThenUnitLength) {
  const std::vector<FeatureVector> frames{Fv({3.f, 0.f}), Fv({0.f, 4.f})};
  const FeatureVector out = AggregateFrameFeatures(frames);
  // mean (1.5, 2), length 2.5
  EXPECT_NEAR(out[0], 0.6f, 1e-7);
  EXPECT_NEAR(out[1], 0.8f, 1e-7);
}

TEST(AggregateFrameFeatures, L1Option) {
  const std::vector<FeatureVector> frames{Fv({3.f, 0.f}), Fv({0.f, -4.f})};
  const FeatureVector out = AggregateFrameFeatures(frames, FeatureNorm::kL1);
  EXPECT_NEAR(out[0], 1.5f / 3.5f, 1e-7);
  EXPECT_NEAR(out[1], -2.f / 3.5f, 1e-7);
}

TEST(AggregateFrameFeatures, RejectsEmptyAndMixedInput) {
  EXPECT_PMIL_ERROR(AggregateFrameFeatures(std::vector<FeatureVector>{}),
                    ErrorKind::kInvalidArgument);
  const std::vector<FeatureVector> mixed{Fv({1.f}), Fv({1.f, 2.f})};
  EXPECT_PMIL_ERROR(AggregateFrameFeatures(mixed),
                    ErrorKind::kDimensionMismatch);
}

TEST(FeaturePayload, RoundTripAndLengthChecks) {
  TempDir dir;
  const std::vector<std::vector<float>> vectors{{1.f, -2.5f, 3.25f},
                                                {0.f, 1e-30f, -7.f}};
  WriteFeaturePayload(dir / "x.bin", vectors, 3);
  EXPECT_EQ(ReadFeaturePayload(dir / "x.bin"), vectors);

  std::string bytes = ReadFile(dir / "x.bin");
  WriteFile(dir / "short.bin", bytes.substr(0, bytes.size() - 1));
  EXPECT_PMIL_ERROR(ReadFeaturePayload(dir / "short.bin"),
                    ErrorKind::kCorruptFile);
  WriteFile(dir / "long.bin", bytes + "x");
  EXPECT_PMIL_ERROR(ReadFeaturePayload(dir / "long.bin"),
                    ErrorKind::kCorruptFile);
  EXPECT_PMIL_ERROR(ReadFeaturePayload(dir / "absent.bin"), ErrorKind::kIo);
}

TEST(TubeFile, RoundTripAndMissingInstance) {
  TempDir dir;
  const std::vector<Tube> tubes{
      testing::MakeTube(2, {Box{1, 2, 3, 4}, Box{0.5, 0.25, 10, 20}}),
      testing::ConstantTube(0, 1, Box{0, 0, 320, 240})};
  WriteTubeFile(dir / "t.csv", tubes);
  EXPECT_EQ(ReadTubeFile(dir / "t.csv", 2, 16, 320, 240), tubes);
  EXPECT_PMIL_ERROR(ReadTubeFile(dir / "t.csv", 3, 16, 320, 240),
                    ErrorKind::kInvalidData);
}

SyntheticDataset SmallSynthetic(std::uint64_t seed = 1) {
  SyntheticSpec spec;
  spec.bags_per_class = 4;
  spec.instances_per_bag = 5;
  spec.feature_dimension = 6;
  spec.seed = seed;
  spec.decoy_fraction = 0.2;
  return GenerateSynthetic(spec);
}

TEST(Dataset, SaveLoadRoundTrip) {
  TempDir dir;
  const Dataset original = SmallSynthetic().dataset;
  const auto manifest = SaveDataset(original, dir.path());
  EXPECT_EQ(LoadDataset(manifest), original);
}

void WriteMinimalDataset(const TempDir& dir, const nlohmann::json& bag,
                         std::size_t payload_dim = 2) {
  WriteFeaturePayload(dir / "f.bin",
                      std::vector<std::vector<float>>{
                          std::vector<float>(payload_dim, 0.5f)},
                      payload_dim);
  nlohmann::json doc{{"format", "pmil-dataset"},
                     {"version", kManifestVersion},
                     {"feature_dimension", 2},
                     {"classes", {"a", "b"}},
                     {"bags", nlohmann::json::array({bag})}};
  WriteFile(dir / "manifest.json", doc.dump());
}

TEST(Dataset, MinimalManifestLoadsOneBag) {
  TempDir dir;
  WriteMinimalDataset(dir, {{"id", "v1"}, {"class_label", "a"}, {"features", "f.bin"}});
  const Dataset d = LoadDataset(dir / "manifest.json");
  ASSERT_EQ(d.bags.size(), 1u);
  EXPECT_EQ(d.bags[0].id, "v1");
  EXPECT_EQ(d.bags[0].instances.size(), 1u);
  EXPECT_EQ(d.bags[0].instances[0].source_bag_id, "v1");
  EXPECT_EQ(d.splits[0], Split::kTrain);
}

TEST(Dataset, WrongPayloadDimensionNamesTheBag) {
  TempDir dir;
  WriteMinimalDataset(
      dir, {{"id", "odd_one"}, {"class_label", "a"}, {"features", "f.bin"}}, 3);
  try {
    LoadDataset(dir / "manifest.json");
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDimensionMismatch);
    EXPECT_NE(std::string(e.what()).find("odd_one"), std::string::npos);
  }
}

TEST(Dataset, RejectsUnknownClassAndMissingPayload) {
  TempDir dir;
  WriteMinimalDataset(dir, {{"id", "v"}, {"class_label", "zzz"}, {"features", "f.bin"}});
  EXPECT_PMIL_ERROR(LoadDataset(dir / "manifest.json"), ErrorKind::kInvalidData);
  WriteMinimalDataset(dir, {{"id", "v"}, {"class_label", "a"}, {"features", "nope.bin"}});
  EXPECT_PMIL_ERROR(LoadDataset(dir / "manifest.json"), ErrorKind::kIo);
}

TEST(Dataset, RejectsDuplicateBagIds) {
  TempDir dir;
  Dataset d = SmallSynthetic().dataset;
  d.bags[1].id = d.bags[0].id;
  EXPECT_PMIL_ERROR(ValidateDataset(d), ErrorKind::kInvalidData);
  const auto manifest = SaveDataset(SmallSynthetic().dataset, dir.path());
  auto doc = nlohmann::json::parse(ReadFile(manifest));
  doc["bags"][1]["id"] = doc["bags"][0]["id"];
  WriteFile(manifest, doc.dump());
  EXPECT_PMIL_ERROR(LoadDataset(manifest), ErrorKind::kInvalidData);
}

TEST(Dataset, RejectsFutureVersion) {
  TempDir dir;
  const auto manifest = SaveDataset(SmallSynthetic().dataset, dir.path());
  auto doc = nlohmann::json::parse(ReadFile(manifest));
  doc["version"] = kManifestVersion + 1;
  WriteFile(manifest, doc.dump());
  EXPECT_PMIL_ERROR(LoadDataset(manifest), ErrorKind::kVersionMismatch);
}

ClassModel TrainedModel() {
  const auto data = SmallSynthetic(3);
  Hyperparameters hp;
  hp.pi = 3;
  return TrainClass(data.dataset.BagsIn(Split::kTrain), data.dataset.classes[1],
                    hp);
}

TEST(Model, BitwiseRoundTrip) {
  TempDir dir;
  const ClassModel model = TrainedModel();
  SaveModel(model, dir / "m.model");
  const ClassModel loaded = LoadModel(dir / "m.model");
  EXPECT_EQ(loaded, model);
  EXPECT_EQ(SerializeModel(loaded), SerializeModel(model));
}

TEST(Model, LoadedModelPredictsIdentically) {
  TempDir dir;
  const ClassModel model = TrainedModel();
  SaveModel(model, dir / "m.model");
  const ClassModel loaded = LoadModel(dir / "m.model");
  for (const Bag& bag : SmallSynthetic(5).dataset.bags) {
    EXPECT_EQ(PredictBag(loaded, bag), PredictBag(model, bag));
  }
}

TEST(Model, RejectsTruncatedCorruptAndFutureFiles) {
  const std::string bytes = SerializeModel(TrainedModel());
  for (std::size_t cut : {std::size_t{0}, std::size_t{5}, bytes.size() / 2,
                          bytes.size() - 1}) {
    EXPECT_PMIL_ERROR(DeserializeModel(bytes.substr(0, cut)),
                      ErrorKind::kCorruptFile);
  }
  std::string flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x20;
  EXPECT_PMIL_ERROR(DeserializeModel(flipped), ErrorKind::kCorruptFile);
  std::string future = bytes;
  future[8] = static_cast<char>(kModelVersion + 1);
  EXPECT_PMIL_ERROR(DeserializeModel(future), ErrorKind::kVersionMismatch);
}

TEST(Predictions, RoundTrip) {
  TempDir dir;
  const auto data = SmallSynthetic(6);
  const std::vector<ClassModel> models{TrainedModel()};
  const auto predictions = PredictAll(models, data.dataset.bags);
  SavePredictions(predictions, dir / "p.json");
  EXPECT_EQ(LoadPredictions(dir / "p.json"), predictions);
}

TEST(Report, RoundTripAndFiles) {
  TempDir dir;
  const auto data = SmallSynthetic(7);
  const auto bags = data.dataset.bags;
  const auto models = TrainOneVsAll(data.dataset.BagsIn(Split::kTrain),
                                    data.dataset.classes, Hyperparameters{},
                                    ExperimentMode::kPmilFS);
  const EvalReport report =
      Evaluate(PredictAll(models, bags), bags, data.dataset.classes);
  SaveReport(report, dir / "r.json");
  EXPECT_EQ(LoadReport(dir / "r.json"), report);
  WriteReportFiles(report, "title", dir / "out");
  EXPECT_EQ(LoadReport(dir / "out" / "report.json"), report);
  for (const char* name :
       {"summary.txt", "map_sweep.csv", "recall_iou.csv", "scatter.csv"}) {
    EXPECT_FALSE(ReadFile(dir / "out" / name).empty()) << name;
  }
  EXPECT_NE(FormatReportSummary(report, "title").find("mAP"), std::string::npos);
}

TEST(HyperparametersJson, RoundTripAndRejectsUnknownKeys) {
  Hyperparameters hp;
  hp.lambda = 0.125;
  hp.split_mode = SplitMode::kThreshold;
  hp.top_k = 9;
  hp.seed = 123456789012345ULL;
  EXPECT_EQ(HyperparametersFromJson(HyperparametersToJson(hp)), hp);
  EXPECT_PMIL_ERROR(HyperparametersFromJson(R"({"lambada": 1})"),
                    ErrorKind::kInvalidArgument);
  EXPECT_PMIL_ERROR(HyperparametersFromJson(R"({"lambda": -1})"),
                    ErrorKind::kInvalidArgument);
  EXPECT_PMIL_ERROR(HyperparametersFromJson("[1,2]"), ErrorKind::kCorruptFile);
  const Hyperparameters partial = HyperparametersFromJson(R"({"pi": 3})", hp);
  EXPECT_EQ(partial.pi, 3u);
  EXPECT_EQ(partial.lambda, 0.125);
}

TEST(HyperparametersJson, CheckedInConfigMatchesBuiltInDefaults) {
  const Hyperparameters from_file = LoadHyperparameters(
      std::filesystem::path(PMIL_SOURCE_DIR) / "config" /
      "default_hyperparameters.json");
  EXPECT_EQ(from_file, Hyperparameters{});
  const auto doc = nlohmann::json::parse(ReadFile(
      std::filesystem::path(PMIL_SOURCE_DIR) / "config" /
      "default_hyperparameters.json"));
  // Every field is spelled out, not inherited from the base.
  for (const char* key : {"lambda", "beta", "gamma", "eta", "zeta", "omega", "pi",
                          "filter_max_volume_fraction", "split_mode", "top_k",
                          "seed"}) {
    EXPECT_TRUE(doc.contains(key)) << key;
  }
}

TEST(Files, MissingFileIsIoError) {
  TempDir dir;
  EXPECT_PMIL_ERROR(ReadFile(dir / "nothing"), ErrorKind::kIo);
  EXPECT_PMIL_ERROR(LoadModel(dir / "nothing"), ErrorKind::kIo);
}

}  // namespace
}  // namespace pmil
