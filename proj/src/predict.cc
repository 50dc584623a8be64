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

#include "pmil/predict.h"

#include <algorithm>

#include "pmil/error.h"

namespace pmil {

BagPrediction PredictBag(const ClassModel& model, const Bag& bag) {
  if (bag.instances.empty()) {
    throw Error(ErrorKind::kInvalidArgument,
                "bag '" + bag.id + "' has no instances");
  }
  BagPrediction pred;
  pred.bag_id = bag.id;
  pred.class_name = model.class_name;
  pred.instance_probabilities.reserve(bag.instances.size());
  double best_logit = 0.0;
  for (std::size_t j = 0; j < bag.instances.size(); ++j) {
    const double z = InstanceLogit(model, bag.instances[j]);
    pred.instance_probabilities.push_back(Sigmoid(z));
    pred.set_log_complement += LogOneMinusSigmoid(z);
    // Compare logits: probabilities saturate before logits do.
    if (j == 0 || z > best_logit) {
      best_logit = z;
      pred.argmax_index = j;
    }
  }
  pred.set_probability =
      std::max(ProbabilityFromLogComplement(pred.set_log_complement),
               pred.instance_probabilities[pred.argmax_index]);
  return pred;
}

ClassificationResult ClassifyPredictions(
    std::span<const BagPrediction> predictions) {
  if (predictions.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "no class models to classify with");
  }
  ClassificationResult result;
  result.bag_id = predictions.front().bag_id;
  const BagPrediction* best = nullptr;
  for (const BagPrediction& p : predictions) {
    result.per_class_set_probabilities[p.class_name] = p.set_probability;
    // Lower log complement means higher set probability.
    if (best == nullptr || p.set_log_complement < best->set_log_complement ||
        (p.set_log_complement == best->set_log_complement &&
         p.class_name < best->class_name)) {
      best = &p;
    }
  }
  result.predicted_class = best->class_name;
  return result;
}

ClassificationResult ClassifyBag(std::span<const ClassModel> models,
                                 const Bag& bag) {
  if (models.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "no class models to classify with");
  }
  std::vector<BagPrediction> predictions;
  predictions.reserve(models.size());
  for (const ClassModel& model : models) {
    predictions.push_back(PredictBag(model, bag));
  }
  return ClassifyPredictions(predictions);
}

}  // namespace pmil
