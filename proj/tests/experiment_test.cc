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

#include <algorithm>
#include <atomic>
#include <map>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "pmil/experiment.h"
#include "pmil/synthetic.h"
#include "test_util.h"

namespace pmil {
namespace {

using testing::MakeInstance;

std::vector<Bag> LabelledBags(const std::map<std::string, int>& sizes) {
  std::vector<Bag> bags;
  for (const auto& [cls, n] : sizes) {
    for (int i = 0; i < n; ++i) {
      bags.push_back(Bag{cls + std::to_string(i), {MakeInstance("i", {1.f})},
                         cls, std::nullopt});
    }
  }
  return bags;
}

TEST(MakeFolds, TwoBagsPerClassGiveTwoFolds) {
  const auto bags = LabelledBags({{"a", 2}, {"b", 2}});
  const std::vector<std::string> classes{"a", "b"};
  const auto folds = MakeFolds(bags, classes);
  ASSERT_EQ(folds.size(), 2u);
  EXPECT_EQ(folds[0].size(), 2u);
  EXPECT_EQ(folds[1].size(), 2u);
}

TEST(MakeFolds, EnumeratedRule) {
  const auto bags = LabelledBags({{"a", 4}, {"b", 2}, {"c", 3}});
  const std::vector<std::string> classes{"a", "b", "c"};
  const auto folds = MakeFolds(bags, classes);
  ASSERT_EQ(folds.size(), 4u);
  std::vector<int> held(bags.size(), 0);
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::map<std::string, int> per_class;
    for (std::size_t i : folds[f]) {
      ++held[i];
      ++per_class[bags[i].class_label];
    }
    // Class with n bags appears in folds 0..n-1, once each.
    EXPECT_EQ(per_class["a"], 1);
    EXPECT_EQ(per_class["b"], f < 2 ? 1 : 0);
    EXPECT_EQ(per_class["c"], f < 3 ? 1 : 0);
    // Every class keeps a training bag.
    for (const std::string& cls : classes) {
      const auto total = std::count_if(bags.begin(), bags.end(), [&](const Bag& b) {
        return b.class_label == cls;
      });
      EXPECT_LT(per_class[cls], total);
    }
  }
  for (int h : held) EXPECT_EQ(h, 1);
}

TEST(MakeFolds, SingleBagClassIsAnError) {
  const auto bags = LabelledBags({{"a", 3}, {"b", 1}});
  const std::vector<std::string> classes{"a", "b"};
  EXPECT_PMIL_ERROR(MakeFolds(bags, classes), ErrorKind::kInvalidArgument);
}

SyntheticDataset EasyData(std::uint32_t per_class) {
  SyntheticSpec spec;
  spec.bags_per_class = per_class;
  spec.instances_per_bag = 10;
  spec.feature_dimension = 20;
  spec.noise_sigma = 0.5;
  spec.seed = 17;
  return GenerateSynthetic(spec);
}

TEST(CrossValidate, SeparableDataIsClassified) {
  const auto data = EasyData(6);
  const auto result = CrossValidate(data.dataset.bags, data.dataset.classes,
                                    Hyperparameters{}, ExperimentMode::kPmilFS, 4);
  EXPECT_EQ(result.fold_accuracy.size(), 6u);
  EXPECT_GE(result.mean_accuracy, 0.95);
}

TEST(CrossValidate, WorkerCountDoesNotChangeResults) {
  const auto data = EasyData(4);
  const auto serial = CrossValidate(data.dataset.bags, data.dataset.classes,
                                    Hyperparameters{}, ExperimentMode::kPmilF, 1);
  const auto parallel = CrossValidate(data.dataset.bags, data.dataset.classes,
                                      Hyperparameters{}, ExperimentMode::kPmilF, 3);
  EXPECT_EQ(serial.fold_accuracy, parallel.fold_accuracy);
}

TEST(TrainOneVsAll, ParallelEqualsSerialAndLogsEveryEpoch) {
  const auto data = EasyData(6);
  Hyperparameters hp;
  hp.pi = 4;
  std::size_t epochs = 0;
  const auto serial = TrainOneVsAll(data.dataset.bags, data.dataset.classes, hp,
                                    ExperimentMode::kPmilFS, 1);
  const auto parallel = TrainOneVsAll(
      data.dataset.bags, data.dataset.classes, hp, ExperimentMode::kPmilFS, 3,
      [&](const EpochReport&) { ++epochs; });
  EXPECT_EQ(serial, parallel);
  EXPECT_EQ(epochs, hp.pi * data.dataset.classes.size());
}

TEST(TrainOneVsAll, ExplicitOptionsMatchModes) {
  const auto data = EasyData(4);
  const auto& bags = data.dataset.bags;
  const auto& classes = data.dataset.classes;
  for (ExperimentMode mode :
       {ExperimentMode::kPmil, ExperimentMode::kPmilF, ExperimentMode::kPmilFS}) {
    EXPECT_EQ(TrainOneVsAll(bags, classes, Hyperparameters{}, mode),
              TrainOneVsAll(bags, classes, Hyperparameters{}, OptionsForMode(mode)));
  }
  const TrainOptions f = OptionsForMode(ExperimentMode::kPmilF);
  EXPECT_TRUE(f.filter_large_proposals);
  EXPECT_FALSE(f.split_sets);
  const TrainOptions base = OptionsForMode(ExperimentMode::kPmil);
  EXPECT_FALSE(base.filter_large_proposals);
  EXPECT_FALSE(base.split_sets);
}

TEST(ParseExperimentMode, NamesRoundTrip) {
  for (ExperimentMode mode :
       {ExperimentMode::kPmil, ExperimentMode::kPmilF, ExperimentMode::kPmilFS}) {
    EXPECT_EQ(ParseExperimentMode(ExperimentModeName(mode)), mode);
  }
  EXPECT_PMIL_ERROR(ParseExperimentMode("pmil_s"), ErrorKind::kInvalidArgument);
}

TEST(PrepareBags, FiltersOnlyWhenAsked) {
  SyntheticSpec spec;
  spec.bags_per_class = 2;
  spec.decoy_fraction = 0.2;
  const auto data = GenerateSynthetic(spec);
  const auto kept = PrepareBags(data.dataset.bags, false, Hyperparameters{});
  EXPECT_EQ(kept, data.dataset.bags);
  const auto filtered = PrepareBags(data.dataset.bags, true, Hyperparameters{});
  for (std::size_t i = 0; i < filtered.size(); ++i) {
    EXPECT_EQ(filtered[i].instances.size(), 16u);
  }
  EXPECT_EQ(PrepareForMode(data.dataset.bags, ExperimentMode::kPmilF,
                           Hyperparameters{}),
            filtered);
}

TEST(ParallelFor, VisitsEveryIndexOnceAndRethrows) {
  std::vector<std::atomic<int>> seen(100);
  ParallelFor(seen.size(), 7, [&](std::size_t i) { ++seen[i]; });
  for (const auto& s : seen) EXPECT_EQ(s.load(), 1);
  EXPECT_THROW(ParallelFor(10, 3,
                           [](std::size_t i) {
                             if (i == 4) throw std::runtime_error("boom");
                           }),
               std::runtime_error);
}

TEST(Grid, ParseAndExpandInIterationOrder) {
  const GridSpec grid = ParseGridSpec(R"({"lambda": [0.1, 0.2], "pi": [1, 2, 3]})");
  const auto cells = ExpandGrid(grid, Hyperparameters{});
  ASSERT_EQ(cells.size(), 6u);
  EXPECT_EQ(cells[0].lambda, 0.1);
  EXPECT_EQ(cells[0].pi, 1u);
  EXPECT_EQ(cells[1].pi, 2u);
  EXPECT_EQ(cells[3].lambda, 0.2);
  EXPECT_EQ(cells[3].pi, 1u);
  EXPECT_PMIL_ERROR(ParseGridSpec("{}"), ErrorKind::kInvalidArgument);
  EXPECT_PMIL_ERROR(ParseGridSpec(R"({"pi": []})"), ErrorKind::kInvalidArgument);
  EXPECT_PMIL_ERROR(ParseGridSpec("not json"), ErrorKind::kCorruptFile);
  EXPECT_PMIL_ERROR(ExpandGrid(ParseGridSpec(R"({"pi": [1.5]})"), Hyperparameters{}),
                    ErrorKind::kInvalidArgument);
  EXPECT_PMIL_ERROR(ExpandGrid(ParseGridSpec(R"({"bogus": [1]})"), Hyperparameters{}),
                    ErrorKind::kInvalidArgument);
}

TEST(GridSearch, SingleCellReturnsThatCell) {
  const auto data = EasyData(3);
  Hyperparameters base;
  base.pi = 2;
  const auto result =
      GridSearch(data.dataset.bags, data.dataset.classes,
                 ParseGridSpec(R"({"lambda": [0.05]})"), base, ExperimentMode::kPmilF);
  ASSERT_EQ(result.cells.size(), 1u);
  EXPECT_EQ(result.best, 0u);
  EXPECT_EQ(result.cells[0].hp.lambda, 0.05);
  EXPECT_EQ(result.cells[0].hp.pi, 2u);
}

TEST(GridSearch, BestCellDominatesTableAndTiesGoFirst) {
  const auto data = EasyData(3);
  const auto result = GridSearch(
      data.dataset.bags, data.dataset.classes,
      ParseGridSpec(R"({"lambda": [0.01, 1.0], "pi": [1, 4]})"), Hyperparameters{},
      ExperimentMode::kPmilF, 2);
  ASSERT_EQ(result.cells.size(), 4u);
  const double best = result.cells[result.best].accuracy;
  for (std::size_t i = 0; i < result.cells.size(); ++i) {
    EXPECT_LE(result.cells[i].accuracy, best);
    if (i < result.best) EXPECT_LT(result.cells[i].accuracy, best);
    EXPECT_EQ(result.cells[i].accuracy,
              CrossValidate(data.dataset.bags, data.dataset.classes,
                            result.cells[i].hp, ExperimentMode::kPmilF)
                  .mean_accuracy);
  }
}

}  // namespace
}  // namespace pmil
