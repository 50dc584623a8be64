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

#include <set>
#include <string>

#include "json.hpp"
#include "pmil/data.h"
#include "pmil/error.h"

namespace pmil {

namespace {

using nlohmann::json;

constexpr std::string_view kManifestFormat = "pmil-dataset";

// Context prefix for error messages: "<manifest>: bags[3] ('video_7')".
std::string Where(const std::filesystem::path& manifest, std::size_t index,
                  const std::string& id) {
  return manifest.string() + ": bags[" + std::to_string(index) + "]" +
         (id.empty() ? "" : " ('" + id + "')");
}

template <typename T>
T Field(const json& obj, const char* key, const std::string& where) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kCorruptFile,
                where + ": field '" + key + "': " + e.what());
  }
}

std::uint32_t PositiveU32(const json& obj, const char* key,
                          const std::string& where) {
  const auto v = Field<std::int64_t>(obj, key, where);
  if (v <= 0 || v > 0xffffffffLL) {
    throw Error(ErrorKind::kInvalidData,
                where + ": field '" + key + "' must be a positive 32-bit integer");
  }
  return static_cast<std::uint32_t>(v);
}

Bag LoadBag(const json& entry, const std::filesystem::path& manifest,
            const std::filesystem::path& base, std::size_t index,
            std::size_t feature_dimension, Split& split) {
  std::string where = Where(manifest, index, "");
  if (!entry.is_object()) {
    throw Error(ErrorKind::kCorruptFile, where + ": expected an object");
  }
  Bag bag;
  bag.id = Field<std::string>(entry, "id", where);
  where = Where(manifest, index, bag.id);
  if (bag.id.empty()) {
    throw Error(ErrorKind::kInvalidData, where + ": empty bag id");
  }
  bag.class_label = Field<std::string>(entry, "class_label", where);

  const std::string split_name =
      entry.contains("split") ? Field<std::string>(entry, "split", where)
                              : std::string("train");
  if (split_name == "train") {
    split = Split::kTrain;
  } else if (split_name == "test") {
    split = Split::kTest;
  } else {
    throw Error(ErrorKind::kInvalidData,
                where + ": unknown split '" + split_name + "'");
  }

  const auto features_file = Field<std::string>(entry, "features", where);
  std::vector<std::vector<float>> vectors;
  try {
    vectors = ReadFeaturePayload(base / features_file);
  } catch (const Error& e) {
    throw Error(e.kind(), where + ": " + e.what());
  }
  if (vectors.front().size() != feature_dimension) {
    throw Error(ErrorKind::kDimensionMismatch,
                where + ": payload has dimension " +
                    std::to_string(vectors.front().size()) +
                    ", manifest declares " + std::to_string(feature_dimension));
  }

  std::vector<std::string> ids;
  if (entry.contains("instance_ids")) {
    ids = Field<std::vector<std::string>>(entry, "instance_ids", where);
    if (ids.size() != vectors.size()) {
      throw Error(ErrorKind::kInvalidData,
                  where + ": " + std::to_string(ids.size()) +
                      " instance ids for " + std::to_string(vectors.size()) +
                      " feature vectors");
    }
  } else {
    for (std::size_t j = 0; j < vectors.size(); ++j) ids.push_back(std::to_string(j));
  }

  std::vector<Tube> tubes;
  if (entry.contains("tubes") || entry.contains("ground_truth")) {
    if (!entry.contains("video")) {
      throw Error(ErrorKind::kInvalidData,
                  where + ": tube files require a 'video' entry");
    }
    const json& video = entry.at("video");
    if (!video.is_object()) {
      throw Error(ErrorKind::kCorruptFile, where + ": 'video' must be an object");
    }
    const std::uint32_t frames = PositiveU32(video, "frames", where);
    const std::uint32_t width = PositiveU32(video, "width", where);
    const std::uint32_t height = PositiveU32(video, "height", where);
    try {
      if (entry.contains("tubes")) {
        tubes = ReadTubeFile(base / Field<std::string>(entry, "tubes", where),
                             vectors.size(), frames, width, height);
      }
      if (entry.contains("ground_truth")) {
        bag.ground_truth = ReadTubeFile(
            base / Field<std::string>(entry, "ground_truth", where), 1, frames,
            width, height)[0];
      }
    } catch (const Error& e) {
      throw Error(e.kind(), where + ": " + e.what());
    }
  }

  bag.instances.reserve(vectors.size());
  for (std::size_t j = 0; j < vectors.size(); ++j) {
    Instance inst;
    inst.id = ids[j];
    inst.features = FeatureVector(std::move(vectors[j]));
    if (!tubes.empty()) inst.tube = std::move(tubes[j]);
    inst.source_bag_id = bag.id;
    bag.instances.push_back(std::move(inst));
  }
  try {
    ValidateBag(bag);
  } catch (const Error& e) {
    throw Error(e.kind(), where + ": " + e.what());
  }
  return bag;
}

}  // namespace

const char* SplitName(Split split) {
  return split == Split::kTrain ? "train" : "test";
}

std::vector<Bag> Dataset::BagsIn(Split split) const {
  std::vector<Bag> out;
  for (std::size_t i = 0; i < bags.size(); ++i) {
    if (splits[i] == split) out.push_back(bags[i]);
  }
  return out;
}

void ValidateDataset(const Dataset& dataset) {
  if (dataset.feature_dimension == 0) {
    throw Error(ErrorKind::kInvalidData, "feature dimension must be positive");
  }
  if (dataset.splits.size() != dataset.bags.size()) {
    throw Error(ErrorKind::kInvalidData, "split tags do not cover every bag");
  }
  std::set<std::string> classes;
  for (const std::string& c : dataset.classes) {
    if (c.empty() || !classes.insert(c).second) {
      throw Error(ErrorKind::kInvalidData,
                  "class names must be nonempty and unique: '" + c + "'");
    }
  }
  std::set<std::string> ids;
  for (const Bag& bag : dataset.bags) {
    ValidateBag(bag);
    if (!ids.insert(bag.id).second) {
      throw Error(ErrorKind::kInvalidData, "duplicate bag id '" + bag.id + "'");
    }
    if (!classes.count(bag.class_label)) {
      throw Error(ErrorKind::kInvalidData, "bag '" + bag.id +
                                               "' has unknown class '" +
                                               bag.class_label + "'");
    }
    if (bag.dimension() != dataset.feature_dimension) {
      throw Error(ErrorKind::kDimensionMismatch,
                  "bag '" + bag.id + "' has dimension " +
                      std::to_string(bag.dimension()) + ", dataset declares " +
                      std::to_string(dataset.feature_dimension));
    }
    const bool has_tubes = bag.instances.front().tube.has_value();
    const Tube* reference =
        bag.ground_truth ? &*bag.ground_truth
                         : (has_tubes ? &*bag.instances.front().tube : nullptr);
    for (const Instance& inst : bag.instances) {
      if (inst.tube.has_value() != has_tubes) {
        throw Error(ErrorKind::kInvalidData,
                    "bag '" + bag.id +
                        "' mixes instances with and without tubes");
      }
      if (inst.tube && (inst.tube->video_frame_count != reference->video_frame_count ||
                        inst.tube->video_width != reference->video_width ||
                        inst.tube->video_height != reference->video_height)) {
        throw Error(ErrorKind::kInvalidData,
                    "bag '" + bag.id + "' has tubes from different videos");
      }
    }
  }
}

Dataset LoadDataset(const std::filesystem::path& manifest_path) {
  const std::string text = ReadFile(manifest_path);
  const std::string where = manifest_path.string();
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kCorruptFile, where + ": " + e.what());
  }
  if (!doc.is_object()) {
    throw Error(ErrorKind::kCorruptFile, where + ": expected a JSON object");
  }
  if (Field<std::string>(doc, "format", where) != kManifestFormat) {
    throw Error(ErrorKind::kCorruptFile, where + ": not a pmil dataset manifest");
  }
  const auto version = Field<std::int64_t>(doc, "version", where);
  if (version < 1 || version > kManifestVersion) {
    throw Error(ErrorKind::kVersionMismatch,
                where + ": unsupported manifest version " +
                    std::to_string(version));
  }

  Dataset dataset;
  dataset.feature_dimension = PositiveU32(doc, "feature_dimension", where);
  dataset.classes = Field<std::vector<std::string>>(doc, "classes", where);
  if (!doc.contains("bags") || !doc.at("bags").is_array()) {
    throw Error(ErrorKind::kCorruptFile, where + ": 'bags' must be an array");
  }
  const std::filesystem::path base = manifest_path.parent_path();
  const json& bags = doc.at("bags");
  for (std::size_t i = 0; i < bags.size(); ++i) {
    Split split = Split::kTrain;
    dataset.bags.push_back(LoadBag(bags[i], manifest_path, base, i,
                                   dataset.feature_dimension, split));
    dataset.splits.push_back(split);
  }
  try {
    ValidateDataset(dataset);
  } catch (const Error& e) {
    throw Error(e.kind(), where + ": " + e.what());
  }
  return dataset;
}

std::filesystem::path SaveDataset(const Dataset& dataset,
                                  const std::filesystem::path& dir) {
  ValidateDataset(dataset);
  json doc;
  doc["format"] = kManifestFormat;
  doc["version"] = kManifestVersion;
  doc["feature_dimension"] = dataset.feature_dimension;
  doc["classes"] = dataset.classes;
  json bags = json::array();
  for (std::size_t i = 0; i < dataset.bags.size(); ++i) {
    const Bag& bag = dataset.bags[i];
    const std::string stem = "bag_" + std::to_string(i);
    json entry;
    entry["id"] = bag.id;
    entry["class_label"] = bag.class_label;
    entry["split"] = SplitName(dataset.splits[i]);

    std::vector<std::vector<float>> vectors;
    std::vector<std::string> ids;
    std::vector<Tube> tubes;
    for (const Instance& inst : bag.instances) {
      const auto v = inst.features.values();
      vectors.emplace_back(v.begin(), v.end());
      ids.push_back(inst.id);
      if (inst.tube) tubes.push_back(*inst.tube);
    }
    entry["features"] = "features/" + stem + ".bin";
    WriteFeaturePayload(dir / "features" / (stem + ".bin"), vectors,
                        dataset.feature_dimension);
    entry["instance_ids"] = ids;

    const Tube* reference = bag.ground_truth ? &*bag.ground_truth
                                             : (tubes.empty() ? nullptr : &tubes[0]);
    if (reference) {
      entry["video"] = {{"frames", reference->video_frame_count},
                        {"width", reference->video_width},
                        {"height", reference->video_height}};
    }
    if (!tubes.empty()) {
      entry["tubes"] = "tubes/" + stem + ".csv";
      WriteTubeFile(dir / "tubes" / (stem + ".csv"), tubes);
    }
    if (bag.ground_truth) {
      entry["ground_truth"] = "tubes/" + stem + ".gt.csv";
      WriteTubeFile(dir / "tubes" / (stem + ".gt.csv"),
                    std::span<const Tube>(&*bag.ground_truth, 1));
    }
    bags.push_back(std::move(entry));
  }
  doc["bags"] = std::move(bags);
  const std::filesystem::path manifest = dir / "manifest.json";
  WriteFile(manifest, doc.dump(2) + "\n");
  return manifest;
}

}  // namespace pmil
