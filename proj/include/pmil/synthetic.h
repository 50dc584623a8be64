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

#ifndef PMIL_SYNTHETIC_H_
#define PMIL_SYNTHETIC_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "pmil/data.h"

namespace pmil {

// Parameters of the planted-signal bag generator.
struct SyntheticSpec {
  std::uint32_t num_classes = 3;
  std::uint32_t bags_per_class = 30;
  std::uint32_t instances_per_bag = 20;
  std::uint32_t positives_per_positive_bag = 2;
  std::uint32_t feature_dimension = 50;
  double cluster_separation = 10.0;
  double noise_sigma = 1.0;
  std::uint64_t seed = 1;
  // Share of each bag's proposals that are near-full-frame decoys carrying
  // the bag's class signal (volume fraction > 0.9, low IOU).
  double decoy_fraction = 0.0;
  // Share of each class's bags tagged as test (taken from the end).
  double test_fraction = 1.0 / 3.0;
  // Scale each proposal vector to unit L2 norm.
  bool normalize_features = true;
  std::uint32_t video_frames = 16;
  std::uint32_t video_width = 320;
  std::uint32_t video_height = 240;
};

// Throws kInvalidArgument for out-of-range fields.
void ValidateSyntheticSpec(const SyntheticSpec& spec);

struct SyntheticDataset {
  Dataset dataset;
  // Bag id -> indices of the planted class-signal proposals.
  std::map<std::string, std::vector<std::size_t>> planted;
  // Bag id -> indices of oversized decoy proposals.
  std::map<std::string, std::vector<std::size_t>> decoys;
};

// Deterministic under spec.seed. Class centers sit at distance
// cluster_separation from the shared background center (the origin) and at
// least that far from each other; throws kInvalidArgument when no such
// placement is found within a bounded number of draws.
SyntheticDataset GenerateSynthetic(const SyntheticSpec& spec);

// The planted-instance sidecar ("planted.json").
void SavePlantedSidecar(const SyntheticDataset& data,
                        const std::filesystem::path& path);
SyntheticDataset LoadPlantedSidecar(const std::filesystem::path& path,
                                    Dataset dataset);

}  // namespace pmil

#endif  // PMIL_SYNTHETIC_H_
