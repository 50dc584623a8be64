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
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "pmil/geometry.h"
#include "pmil/synthetic.h"
#include "test_util.h"

namespace pmil {
namespace {

double Distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

TEST(GenerateSynthetic, OneClassOneBag) {
  SyntheticSpec spec;
  spec.num_classes = 1;
  spec.bags_per_class = 1;
  spec.test_fraction = 0.0;
  const auto data = GenerateSynthetic(spec);
  ASSERT_EQ(data.dataset.bags.size(), 1u);
  const Bag& bag = data.dataset.bags[0];
  EXPECT_EQ(bag.instances.size(), spec.instances_per_bag);
  EXPECT_EQ(data.planted.at(bag.id).size(), spec.positives_per_positive_bag);
  EXPECT_EQ(data.dataset.splits[0], Split::kTrain);
}

TEST(GenerateSynthetic, DeterministicUnderSeed) {
  SyntheticSpec spec;
  spec.bags_per_class = 5;
  spec.decoy_fraction = 0.2;
  const auto a = GenerateSynthetic(spec);
  const auto b = GenerateSynthetic(spec);
  EXPECT_EQ(a.dataset, b.dataset);
  EXPECT_EQ(a.planted, b.planted);
  EXPECT_EQ(a.decoys, b.decoys);
  spec.seed += 1;
  EXPECT_NE(GenerateSynthetic(spec).dataset, a.dataset);
}

TEST(GenerateSynthetic, GeometryMatchesRoles) {
  SyntheticSpec spec;
  spec.bags_per_class = 6;
  spec.decoy_fraction = 0.2;
  const auto data = GenerateSynthetic(spec);
  for (const Bag& bag : data.dataset.bags) {
    const auto& planted = data.planted.at(bag.id);
    const auto& decoys = data.decoys.at(bag.id);
    EXPECT_EQ(planted.size(), spec.positives_per_positive_bag);
    EXPECT_EQ(decoys.size(), 4u);  // 20% of 20
    const std::set<std::size_t> p(planted.begin(), planted.end());
    const std::set<std::size_t> d(decoys.begin(), decoys.end());
    for (std::size_t j = 0; j < bag.instances.size(); ++j) {
      const double iou = TubeIou(*bag.instances[j].tube, *bag.ground_truth);
      if (p.count(j)) {
        EXPECT_GE(iou, 0.7);
        EXPECT_LE(iou, 1.0);
      } else if (d.count(j)) {
        EXPECT_GT(VolumeFraction(*bag.instances[j].tube), 0.9);
        EXPECT_LT(iou, 0.2);
      } else {
        EXPECT_LE(iou, 0.1);
      }
    }
  }
}

TEST(GenerateSynthetic, RawFeaturesClusterAroundSeparatedCenters) {
  SyntheticSpec spec;
  spec.num_classes = 4;
  spec.bags_per_class = 10;
  spec.noise_sigma = 0.5;
  spec.normalize_features = false;
  const auto data = GenerateSynthetic(spec);
  std::vector<std::vector<double>> means(spec.num_classes,
                                         std::vector<double>(spec.feature_dimension));
  std::vector<double> background(spec.feature_dimension);
  std::vector<int> counts(spec.num_classes);
  int background_count = 0;
  for (const Bag& bag : data.dataset.bags) {
    const std::size_t c = std::stoul(bag.class_label.substr(6));
    const auto& planted = data.planted.at(bag.id);
    for (std::size_t j = 0; j < bag.instances.size(); ++j) {
      const bool is_planted =
          std::find(planted.begin(), planted.end(), j) != planted.end();
      auto& target = is_planted ? means[c] : background;
      for (std::size_t k = 0; k < target.size(); ++k) {
        target[k] += bag.instances[j].features[k];
      }
      (is_planted ? counts[c] : background_count)++;
    }
  }
  for (double& v : background) v /= background_count;
  for (std::size_t c = 0; c < means.size(); ++c) {
    for (double& v : means[c]) v /= counts[c];
    EXPECT_NEAR(Distance(means[c], background), spec.cluster_separation, 0.5);
    for (std::size_t o = 0; o < c; ++o) {
      EXPECT_GT(Distance(means[c], means[o]), spec.cluster_separation - 0.5);
    }
  }
}

TEST(GenerateSynthetic, NormalizedFeaturesHaveUnitLength) {
  const auto data = GenerateSynthetic(SyntheticSpec{});
  for (const Bag& bag : data.dataset.bags) {
    for (const Instance& inst : bag.instances) {
      double s = 0.0;
      for (float v : inst.features.values()) s += double{v} * v;
      EXPECT_NEAR(s, 1.0, 1e-5);
    }
  }
}

TEST(GenerateSynthetic, TestSplitTakesTheTailOfEachClass) {
  SyntheticSpec spec;
  spec.bags_per_class = 9;
  spec.test_fraction = 1.0 / 3.0;
  const auto data = GenerateSynthetic(spec);
  for (std::size_t i = 0; i < data.dataset.bags.size(); ++i) {
    const std::size_t b = i % spec.bags_per_class;
    EXPECT_EQ(data.dataset.splits[i], b >= 6 ? Split::kTest : Split::kTrain);
  }
}

TEST(GenerateSynthetic, RejectsInvalidSpecs) {
  const auto bad = [](auto mutate) {
    SyntheticSpec spec;
    mutate(spec);
    EXPECT_PMIL_ERROR(GenerateSynthetic(spec), ErrorKind::kInvalidArgument);
  };
  bad([](SyntheticSpec& s) { s.positives_per_positive_bag = 21; });
  bad([](SyntheticSpec& s) { s.num_classes = 0; });
  bad([](SyntheticSpec& s) { s.noise_sigma = 0.0; });
  bad([](SyntheticSpec& s) { s.cluster_separation = -1.0; });
  bad([](SyntheticSpec& s) { s.decoy_fraction = 0.95; });
  bad([](SyntheticSpec& s) { s.test_fraction = 1.0; });
  // Ten mutually separated points on a 1-d sphere do not exist.
  bad([](SyntheticSpec& s) {
    s.num_classes = 10;
    s.feature_dimension = 1;
  });
}

TEST(PlantedSidecar, RoundTrip) {
  testing::TempDir dir;
  SyntheticSpec spec;
  spec.bags_per_class = 3;
  spec.decoy_fraction = 0.1;
  const auto data = GenerateSynthetic(spec);
  SavePlantedSidecar(data, dir / "planted.json");
  const auto loaded = LoadPlantedSidecar(dir / "planted.json", data.dataset);
  EXPECT_EQ(loaded.planted, data.planted);
  EXPECT_EQ(loaded.decoys, data.decoys);
  EXPECT_EQ(loaded.dataset, data.dataset);
}

}  // namespace
}  // namespace pmil
