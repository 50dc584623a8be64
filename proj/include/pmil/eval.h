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

#ifndef PMIL_EVAL_H_
#define PMIL_EVAL_H_

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pmil/core.h"
#include "pmil/geometry.h"
#include "pmil/predict.h"

namespace pmil {

struct RankedItem {
  double score = 0.0;
  bool correct = false;
};

enum class ApMode {
  kNonInterpolated,    // mean of precision at each correct item
  kElevenPoint,        // PASCAL VOC 2007 style interpolation
};

// Average precision of a ranking (scores sorted descending, stable).
// `num_positives` is the number of relevant items in the whole collection; 0
// means "the correct items in `ranked`". Returns 0 when there are no
// positives.
double AveragePrecision(std::span<const RankedItem> ranked,
                        ApMode mode = ApMode::kNonInterpolated,
                        std::size_t num_positives = 0);

// How a selected proposal is compared with the ground truth.
enum class OverlapCriterion {
  kIou,       // tube IOU >= threshold
  kCoverage,  // fraction of ground-truth volume covered >= threshold
};

// True iff the predicted proposal overlaps the ground truth by at least
// `threshold`. Throws kInvalidData naming the bag when geometry is missing.
bool LocalizationCorrect(const BagPrediction& prediction, const Bag& bag,
                         double threshold,
                         OverlapCriterion criterion = OverlapCriterion::kIou);

// Predictions for every (bag, class) pair, looked up by ids.
class PredictionIndex {
 public:
  explicit PredictionIndex(std::span<const BagPrediction> predictions);
  // Throws kInvalidArgument if the pair is missing.
  const BagPrediction& at(const std::string& bag_id,
                          const std::string& class_name) const;
  std::vector<BagPrediction> ForBag(const std::string& bag_id) const;

 private:
  std::map<std::pair<std::string, std::string>, const BagPrediction*> index_;
};

struct MapResult {
  std::map<std::string, double> per_class_ap;
  double map = 0.0;  // mean over classes present in the test bags
  std::vector<std::string> omitted_classes;
};

// Per class, ranks all bags by set probability; a bag is a hit when its label
// is that class and its selected proposal passes LocalizationCorrect. Recall
// is measured against every bag labelled with the class, so a mislocalized
// bag costs precision mass.
MapResult MapAtThreshold(std::span<const BagPrediction> predictions,
                         std::span<const Bag> bags,
                         std::span<const std::string> classes,
                         double threshold,
                         OverlapCriterion criterion = OverlapCriterion::kIou,
                         ApMode mode = ApMode::kNonInterpolated);

// Index of the proposal with the highest tube IOU against the ground truth,
// lowest index on ties.
std::size_t OptimalInstance(const Bag& bag);

// (1/N) sum_i (k_i - max_j p_ij)^2 where k_i is the probability given to the
// best-IOU proposal. predictions[i] must belong to bags[i].
double Msero(std::span<const BagPrediction> predictions,
             std::span<const Bag> bags);

struct ScatterRecord {
  std::string bag_id;
  std::string instance_id;
  std::string class_name;
  double probability = 0.0;
  double iou = 0.0;
  bool is_argmax = false;
  bool is_optimal = false;
  friend bool operator==(const ScatterRecord&, const ScatterRecord&) = default;
};

// One record per proposal: model probability against IOU with the ground
// truth, flagging the selected and the optimal proposal.
std::vector<ScatterRecord> ScatterData(const BagPrediction& prediction,
                                       const Bag& bag);

struct CurvePoint {
  double threshold = 0.0;
  double value = 0.0;
  friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

struct EvalReport {
  double iou_threshold = 0.2;
  std::map<std::string, double> per_class_ap;
  double map_score = 0.0;
  std::vector<std::string> omitted_classes;
  std::map<std::string, double> per_class_msero;
  double classification_accuracy = 0.0;
  std::vector<CurvePoint> map_sweep;
  std::vector<RecallPoint> recall_iou;
  std::vector<ScatterRecord> scatter_records;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

struct EvalOptions {
  double iou_threshold = 0.2;
  OverlapCriterion criterion = OverlapCriterion::kIou;
  ApMode ap_mode = ApMode::kNonInterpolated;
  std::vector<double> sweep_thresholds = {0.1,  0.15, 0.2,  0.25, 0.3, 0.35,
                                          0.4,  0.45, 0.5,  0.55, 0.6};
  std::vector<double> recall_thresholds = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5,
                                           0.6, 0.7, 0.8, 0.9, 1.0};
};

// Full report over test bags. mSERO for class a is taken over the bags
// labelled a; scatter records use each bag's own class model.
EvalReport Evaluate(std::span<const BagPrediction> predictions,
                    std::span<const Bag> bags,
                    std::span<const std::string> classes,
                    const EvalOptions& options = {});

}  // namespace pmil

#endif  // PMIL_EVAL_H_
