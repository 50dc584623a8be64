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

#ifndef PMIL_PREDICT_H_
#define PMIL_PREDICT_H_

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pmil/core.h"

namespace pmil {

// Scores of one bag under one class model.
struct BagPrediction {
  std::string bag_id;
  std::string class_name;
  double set_probability = 0.0;
  // sum_j log(1 - p_j); the exact ranking key behind set_probability, which
  // rounds to its upper clamp for confident bags.
  double set_log_complement = 0.0;
  std::vector<double> instance_probabilities;
  std::size_t argmax_index = 0;  // lowest index on ties

  friend bool operator==(const BagPrediction&,
                         const BagPrediction&) = default;
};

struct ClassificationResult {
  std::string bag_id;
  std::string predicted_class;
  std::map<std::string, double> per_class_set_probabilities;
};

// Instance probabilities, set probability and the most probable proposal.
BagPrediction PredictBag(const ClassModel& model, const Bag& bag);

// One-vs-all: the class whose model gives the highest set probability.
ClassificationResult ClassifyBag(std::span<const ClassModel> models,
                                 const Bag& bag);

// Same decision rule over predictions already computed for one bag (one per
// class). Exact ties go to the lexicographically smallest class name.
ClassificationResult ClassifyPredictions(
    std::span<const BagPrediction> predictions);

}  // namespace pmil

#endif  // PMIL_PREDICT_H_
