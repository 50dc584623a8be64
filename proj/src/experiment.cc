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

#include "pmil/experiment.h"

#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <thread>

#include "json.hpp"
#include "pmil/data.h"
#include "pmil/error.h"
#include "pmil/geometry.h"

namespace pmil {

namespace {

Hyperparameters WithValue(const Hyperparameters& base, const std::string& name,
                          double value) {
  nlohmann::json patch;
  if (name == "pi" || name == "top_k" || name == "seed") {
    if (value < 0.0 || value != std::floor(value)) {
      throw Error(ErrorKind::kInvalidArgument,
                  "grid value for '" + name + "' must be a whole number");
    }
    patch[name] = static_cast<std::uint64_t>(value);
  } else {
    patch[name] = value;
  }
  return HyperparametersFromJson(patch.dump(), base);
}

}  // namespace

const char* ExperimentModeName(ExperimentMode mode) {
  switch (mode) {
    case ExperimentMode::kPmil:
      return "pmil";
    case ExperimentMode::kPmilF:
      return "pmil_f";
    case ExperimentMode::kPmilFS:
      return "pmil_f_s";
  }
  return "pmil";
}

ExperimentMode ParseExperimentMode(const std::string& name) {
  if (name == "pmil") return ExperimentMode::kPmil;
  if (name == "pmil_f") return ExperimentMode::kPmilF;
  if (name == "pmil_f_s") return ExperimentMode::kPmilFS;
  throw Error(ErrorKind::kInvalidArgument, "unknown mode '" + name + "'");
}

TrainOptions OptionsForMode(ExperimentMode mode) {
  TrainOptions options;
  options.filter_large_proposals = mode != ExperimentMode::kPmil;
  options.split_sets = mode == ExperimentMode::kPmilFS;
  return options;
}

std::vector<Bag> PrepareBags(std::span<const Bag> bags, bool filter,
                             const Hyperparameters& hp) {
  std::vector<Bag> out;
  out.reserve(bags.size());
  for (const Bag& bag : bags) {
    out.push_back(filter ? FilterLargeProposals(bag, hp.filter_max_volume_fraction)
                         : bag);
  }
  return out;
}

std::vector<Bag> PrepareForMode(std::span<const Bag> bags, ExperimentMode mode,
                                const Hyperparameters& hp) {
  return PrepareBags(bags, mode != ExperimentMode::kPmil, hp);
}

void ParallelFor(std::size_t count, std::size_t workers,
                 const std::function<void(std::size_t)>& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, count));
  std::vector<std::exception_ptr> errors(count);
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
        break;
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      threads.emplace_back([&] {
        for (std::size_t i = next++; i < count && !failed; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
            failed = true;
          }
        }
      });
    }
    for (std::thread& t : threads) t.join();
  }
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::vector<ClassModel> TrainOneVsAll(
    std::span<const Bag> bags, std::span<const std::string> classes,
    const Hyperparameters& hp, ExperimentMode mode, std::size_t workers,
    const std::function<void(const EpochReport&)>& on_epoch) {
  return TrainOneVsAll(bags, classes, hp, OptionsForMode(mode), workers,
                       on_epoch);
}

std::vector<ClassModel> TrainOneVsAll(
    std::span<const Bag> bags, std::span<const std::string> classes,
    const Hyperparameters& hp, const TrainOptions& base_options,
    std::size_t workers,
    const std::function<void(const EpochReport&)>& on_epoch) {
  std::vector<ClassModel> models(classes.size());
  std::mutex log_mutex;
  TrainOptions options = base_options;
  options.on_epoch = nullptr;
  if (on_epoch) {
    options.on_epoch = [&](const EpochReport& report) {
      std::lock_guard<std::mutex> lock(log_mutex);
      on_epoch(report);
    };
  }
  ParallelFor(classes.size(), workers, [&](std::size_t c) {
    models[c] = TrainClass(bags, classes[c], hp, options);
  });
  return models;
}

std::vector<BagPrediction> PredictAll(std::span<const ClassModel> models,
                                      std::span<const Bag> bags) {
  std::vector<BagPrediction> out;
  out.reserve(models.size() * bags.size());
  for (const Bag& bag : bags) {
    for (const ClassModel& model : models) out.push_back(PredictBag(model, bag));
  }
  return out;
}

double ClassificationAccuracy(std::span<const ClassModel> models,
                              std::span<const Bag> bags) {
  if (bags.empty()) return 0.0;
  std::size_t correct = 0;
  for (const Bag& bag : bags) {
    if (ClassifyBag(models, bag).predicted_class == bag.class_label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(bags.size());
}

std::vector<std::vector<std::size_t>> MakeFolds(
    std::span<const Bag> bags, std::span<const std::string> classes) {
  std::map<std::string, std::vector<std::size_t>> members;
  for (const std::string& c : classes) members[c];
  for (std::size_t i = 0; i < bags.size(); ++i) {
    auto it = members.find(bags[i].class_label);
    if (it == members.end()) {
      throw Error(ErrorKind::kInvalidData, "bag '" + bags[i].id +
                                               "' has unknown class '" +
                                               bags[i].class_label + "'");
    }
    it->second.push_back(i);
  }
  std::size_t folds = 0;
  for (const auto& [cls, idx] : members) {
    if (idx.size() < 2) {
      throw Error(ErrorKind::kInvalidArgument,
                  "cross-validation needs at least 2 bags of class '" + cls +
                      "', found " + std::to_string(idx.size()));
    }
    folds = std::max(folds, idx.size());
  }
  std::vector<std::vector<std::size_t>> out(folds);
  for (std::size_t f = 0; f < folds; ++f) {
    for (const std::string& c : classes) {
      const auto& idx = members[c];
      if (f < idx.size()) out[f].push_back(idx[f]);
    }
  }
  return out;
}

CrossValidationResult CrossValidate(std::span<const Bag> bags,
                                    std::span<const std::string> classes,
                                    const Hyperparameters& hp,
                                    ExperimentMode mode, std::size_t workers) {
  return CrossValidate(bags, classes, hp, OptionsForMode(mode), workers);
}

CrossValidationResult CrossValidate(std::span<const Bag> bags,
                                    std::span<const std::string> classes,
                                    const Hyperparameters& hp,
                                    const TrainOptions& options,
                                    std::size_t workers) {
  const auto folds = MakeFolds(bags, classes);
  CrossValidationResult result;
  result.fold_accuracy.resize(folds.size());
  ParallelFor(folds.size(), workers, [&](std::size_t f) {
    std::vector<bool> held(bags.size(), false);
    for (std::size_t i : folds[f]) held[i] = true;
    std::vector<Bag> train;
    std::vector<Bag> test;
    for (std::size_t i = 0; i < bags.size(); ++i) {
      (held[i] ? test : train).push_back(bags[i]);
    }
    const auto models = TrainOneVsAll(train, classes, hp, options, 1);
    result.fold_accuracy[f] = ClassificationAccuracy(
        models, PrepareBags(test, options.filter_large_proposals, hp));
  });
  double sum = 0.0;
  for (double a : result.fold_accuracy) sum += a;
  result.mean_accuracy = sum / static_cast<double>(folds.size());
  return result;
}

GridSpec ParseGridSpec(std::string_view json_text) {
  GridSpec grid;
  try {
    const auto doc = nlohmann::ordered_json::parse(json_text);
    if (!doc.is_object() || doc.empty()) {
      throw Error(ErrorKind::kInvalidArgument,
                  "grid spec must be a nonempty JSON object");
    }
    for (const auto& [name, values] : doc.items()) {
      auto list = values.get<std::vector<double>>();
      if (list.empty()) {
        throw Error(ErrorKind::kInvalidArgument,
                    "grid parameter '" + name + "' has no values");
      }
      grid.emplace_back(name, std::move(list));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kCorruptFile, std::string("grid spec: ") + e.what());
  }
  return grid;
}

std::vector<Hyperparameters> ExpandGrid(const GridSpec& grid,
                                        const Hyperparameters& base) {
  if (grid.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "grid spec is empty");
  }
  std::vector<Hyperparameters> cells{base};
  for (const auto& [name, values] : grid) {
    std::vector<Hyperparameters> next;
    next.reserve(cells.size() * values.size());
    for (const Hyperparameters& hp : cells) {
      for (double v : values) next.push_back(WithValue(hp, name, v));
    }
    cells = std::move(next);
  }
  return cells;
}

GridSearchResult GridSearch(std::span<const Bag> bags,
                            std::span<const std::string> classes,
                            const GridSpec& grid, const Hyperparameters& base,
                            ExperimentMode mode, std::size_t workers) {
  return GridSearch(bags, classes, grid, base, OptionsForMode(mode), workers);
}

GridSearchResult GridSearch(std::span<const Bag> bags,
                            std::span<const std::string> classes,
                            const GridSpec& grid, const Hyperparameters& base,
                            const TrainOptions& options, std::size_t workers) {
  GridSearchResult result;
  for (const Hyperparameters& hp : ExpandGrid(grid, base)) {
    const double accuracy =
        CrossValidate(bags, classes, hp, options, workers).mean_accuracy;
    result.cells.push_back({hp, accuracy});
    if (accuracy > result.cells[result.best].accuracy) {
      result.best = result.cells.size() - 1;
    }
  }
  return result;
}

}  // namespace pmil
