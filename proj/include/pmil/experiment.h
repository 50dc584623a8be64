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

#ifndef PMIL_EXPERIMENT_H_
#define PMIL_EXPERIMENT_H_

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pmil/core.h"
#include "pmil/eval.h"
#include "pmil/predict.h"
#include "pmil/train.h"

namespace pmil {

// The three experiment configurations: baseline, with large-proposal
// filtering, and with filtering plus set splitting.
enum class ExperimentMode { kPmil, kPmilF, kPmilFS };

const char* ExperimentModeName(ExperimentMode mode);
// Accepts "pmil", "pmil_f", "pmil_f_s".
ExperimentMode ParseExperimentMode(const std::string& name);

// Filtering for kPmilF and kPmilFS, splitting for kPmilFS only.
TrainOptions OptionsForMode(ExperimentMode mode);

// Applies the large-proposal filter to every bag when `filter` is set.
std::vector<Bag> PrepareBags(std::span<const Bag> bags, bool filter,
                             const Hyperparameters& hp);

// Applies the mode's proposal filter to test bags (identity for kPmil).
std::vector<Bag> PrepareForMode(std::span<const Bag> bags, ExperimentMode mode,
                                const Hyperparameters& hp);

// Runs fn(i) for i in [0, count) on up to `workers` threads. Results must be
// written to per-index slots. The first exception (by index) is rethrown.
void ParallelFor(std::size_t count, std::size_t workers,
                 const std::function<void(std::size_t)>& fn);

// One model per class, trained independently (in parallel when workers > 1).
std::vector<ClassModel> TrainOneVsAll(
    std::span<const Bag> bags, std::span<const std::string> classes,
    const Hyperparameters& hp, ExperimentMode mode, std::size_t workers = 1,
    const std::function<void(const EpochReport&)>& on_epoch = nullptr);
// Same, with explicit filter and split switches. options.on_epoch is replaced
// by a serialized wrapper around `on_epoch`.
std::vector<ClassModel> TrainOneVsAll(
    std::span<const Bag> bags, std::span<const std::string> classes,
    const Hyperparameters& hp, const TrainOptions& options,
    std::size_t workers = 1,
    const std::function<void(const EpochReport&)>& on_epoch = nullptr);

// Predictions for every bag under every model, bag-major.
std::vector<BagPrediction> PredictAll(std::span<const ClassModel> models,
                                      std::span<const Bag> bags);

// Share of bags whose one-vs-all prediction matches their label.
double ClassificationAccuracy(std::span<const ClassModel> models,
                              std::span<const Bag> bags);

// Modified leave-one-out: fold f holds out the f-th bag of every class that
// has more than f bags, so every class keeps at least one training bag.
// Returns the held-out bag indices per fold; fold count is the largest class
// size.
std::vector<std::vector<std::size_t>> MakeFolds(
    std::span<const Bag> bags, std::span<const std::string> classes);

struct CrossValidationResult {
  std::vector<double> fold_accuracy;
  double mean_accuracy = 0.0;
};

CrossValidationResult CrossValidate(std::span<const Bag> bags,
                                    std::span<const std::string> classes,
                                    const Hyperparameters& hp,
                                    ExperimentMode mode,
                                    std::size_t workers = 1);
CrossValidationResult CrossValidate(std::span<const Bag> bags,
                                    std::span<const std::string> classes,
                                    const Hyperparameters& hp,
                                    const TrainOptions& options,
                                    std::size_t workers = 1);

// Named value lists; cells are the Cartesian product with the last parameter
// varying fastest. Names are Hyperparameters JSON keys.
using GridSpec = std::vector<std::pair<std::string, std::vector<double>>>;

GridSpec ParseGridSpec(std::string_view json_text);

struct GridCell {
  Hyperparameters hp;
  double accuracy = 0.0;
};

struct GridSearchResult {
  std::vector<GridCell> cells;  // in iteration order
  std::size_t best = 0;         // first cell with the highest accuracy
};

std::vector<Hyperparameters> ExpandGrid(const GridSpec& grid,
                                        const Hyperparameters& base);

GridSearchResult GridSearch(std::span<const Bag> bags,
                            std::span<const std::string> classes,
                            const GridSpec& grid, const Hyperparameters& base,
                            ExperimentMode mode, std::size_t workers = 1);
GridSearchResult GridSearch(std::span<const Bag> bags,
                            std::span<const std::string> classes,
                            const GridSpec& grid, const Hyperparameters& base,
                            const TrainOptions& options,
                            std::size_t workers = 1);

}  // namespace pmil

#endif  // PMIL_EXPERIMENT_H_
