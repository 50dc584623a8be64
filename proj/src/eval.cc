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

#include "pmil/eval.h"

#include <algorithm>
#include <numeric>
#include <set>

#include "pmil/error.h"

namespace pmil {

namespace {

void RequireGeometry(const Bag& bag) {
  if (!bag.ground_truth) {
    throw Error(ErrorKind::kInvalidData,
                "bag '" + bag.id + "' has no ground-truth tube");
  }
  for (const Instance& inst : bag.instances) {
    if (!inst.tube) {
      throw Error(ErrorKind::kInvalidData, "bag '" + bag.id + "' instance '" +
                                               inst.id + "' has no tube");
    }
  }
}

void RequireAligned(const BagPrediction& prediction, const Bag& bag) {
  if (prediction.bag_id != bag.id ||
      prediction.instance_probabilities.size() != bag.instances.size()) {
    throw Error(ErrorKind::kInvalidArgument,
                "prediction for '" + prediction.bag_id +
                    "' does not match bag '" + bag.id + "'");
  }
}

double MaxProbability(const BagPrediction& prediction) {
  return prediction.instance_probabilities[prediction.argmax_index];
}

}  // namespace

double AveragePrecision(std::span<const RankedItem> ranked, ApMode mode,
                        std::size_t num_positives) {
  std::vector<RankedItem> sorted(ranked.begin(), ranked.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const RankedItem& a, const RankedItem& b) {
                     return a.score > b.score;
                   });
  const std::size_t hits_total = static_cast<std::size_t>(std::count_if(
      sorted.begin(), sorted.end(), [](const RankedItem& r) { return r.correct; }));
  const std::size_t positives = num_positives == 0 ? hits_total : num_positives;
  if (positives == 0 || hits_total == 0) return 0.0;
  if (hits_total > positives) {
    throw Error(ErrorKind::kInvalidArgument,
                "more correct items than positives");
  }

  std::vector<double> precision;
  std::vector<double> recall;
  std::size_t hits = 0;
  double sum = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    if (!sorted[k].correct) continue;
    ++hits;
    const double p = static_cast<double>(hits) / static_cast<double>(k + 1);
    sum += p;
    precision.push_back(p);
    recall.push_back(static_cast<double>(hits) / static_cast<double>(positives));
  }
  if (mode == ApMode::kNonInterpolated) {
    return sum / static_cast<double>(positives);
  }
  // Precision is only sampled at hits: between hits it decreases, so the
  // interpolated maximum at recall >= r is attained at a hit.
  double ap = 0.0;
  for (int step = 0; step <= 10; ++step) {
    const double r = step / 10.0;
    double best = 0.0;
    for (std::size_t h = 0; h < recall.size(); ++h) {
      if (recall[h] >= r - 1e-12) best = std::max(best, precision[h]);
    }
    ap += best;
  }
  return ap / 11.0;
}

bool LocalizationCorrect(const BagPrediction& prediction, const Bag& bag,
                         double threshold, OverlapCriterion criterion) {
  RequireGeometry(bag);
  RequireAligned(prediction, bag);
  const Tube& selected = *bag.instances[prediction.argmax_index].tube;
  const double overlap = criterion == OverlapCriterion::kIou
                             ? TubeIou(selected, *bag.ground_truth)
                             : TubeCoverage(selected, *bag.ground_truth);
  return overlap >= threshold;
}

PredictionIndex::PredictionIndex(std::span<const BagPrediction> predictions) {
  for (const BagPrediction& p : predictions) {
    index_[{p.bag_id, p.class_name}] = &p;
  }
}

const BagPrediction& PredictionIndex::at(const std::string& bag_id,
                                         const std::string& class_name) const {
  auto it = index_.find({bag_id, class_name});
  if (it == index_.end()) {
    throw Error(ErrorKind::kInvalidArgument, "no prediction for bag '" +
                                                 bag_id + "' under class '" +
                                                 class_name + "'");
  }
  return *it->second;
}

std::vector<BagPrediction> PredictionIndex::ForBag(
    const std::string& bag_id) const {
  std::vector<BagPrediction> out;
  for (auto it = index_.lower_bound({bag_id, std::string()});
       it != index_.end() && it->first.first == bag_id; ++it) {
    out.push_back(*it->second);
  }
  return out;
}

MapResult MapAtThreshold(std::span<const BagPrediction> predictions,
                         std::span<const Bag> bags,
                         std::span<const std::string> classes,
                         double threshold, OverlapCriterion criterion,
                         ApMode mode) {
  const PredictionIndex index(predictions);
  MapResult result;
  double sum = 0.0;
  for (const std::string& cls : classes) {
    std::size_t positives = 0;
    std::vector<RankedItem> ranked;
    ranked.reserve(bags.size());
    for (const Bag& bag : bags) {
      const BagPrediction& p = index.at(bag.id, cls);
      bool correct = false;
      if (bag.class_label == cls) {
        ++positives;
        correct = LocalizationCorrect(p, bag, threshold, criterion);
      }
      ranked.push_back({-p.set_log_complement, correct});
    }
    if (positives == 0) {
      result.omitted_classes.push_back(cls);
      continue;
    }
    const double ap = AveragePrecision(ranked, mode, positives);
    result.per_class_ap[cls] = ap;
    sum += ap;
  }
  if (!result.per_class_ap.empty()) {
    result.map = sum / static_cast<double>(result.per_class_ap.size());
  }
  return result;
}

std::size_t OptimalInstance(const Bag& bag) {
  RequireGeometry(bag);
  std::size_t best = 0;
  double best_iou = -1.0;
  for (std::size_t j = 0; j < bag.instances.size(); ++j) {
    const double iou = TubeIou(*bag.instances[j].tube, *bag.ground_truth);
    if (iou > best_iou) {
      best_iou = iou;
      best = j;
    }
  }
  return best;
}

double Msero(std::span<const BagPrediction> predictions,
             std::span<const Bag> bags) {
  if (predictions.size() != bags.size()) {
    throw Error(ErrorKind::kInvalidArgument,
                "predictions and bags differ in length");
  }
  if (bags.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < bags.size(); ++i) {
    RequireAligned(predictions[i], bags[i]);
    const double k =
        predictions[i].instance_probabilities[OptimalInstance(bags[i])];
    const double diff = k - MaxProbability(predictions[i]);
    sum += diff * diff;
  }
  return sum / static_cast<double>(bags.size());
}

std::vector<ScatterRecord> ScatterData(const BagPrediction& prediction,
                                       const Bag& bag) {
  RequireGeometry(bag);
  RequireAligned(prediction, bag);
  const std::size_t optimal = OptimalInstance(bag);
  std::vector<ScatterRecord> out;
  out.reserve(bag.instances.size());
  for (std::size_t j = 0; j < bag.instances.size(); ++j) {
    out.push_back({bag.id, bag.instances[j].id, prediction.class_name,
                   prediction.instance_probabilities[j],
                   TubeIou(*bag.instances[j].tube, *bag.ground_truth),
                   j == prediction.argmax_index, j == optimal});
  }
  return out;
}

EvalReport Evaluate(std::span<const BagPrediction> predictions,
                    std::span<const Bag> bags,
                    std::span<const std::string> classes,
                    const EvalOptions& options) {
  if (bags.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "no bags to evaluate");
  }
  const PredictionIndex index(predictions);
  EvalReport report;
  report.iou_threshold = options.iou_threshold;

  MapResult headline = MapAtThreshold(predictions, bags, classes,
                                      options.iou_threshold, options.criterion,
                                      options.ap_mode);
  report.per_class_ap = std::move(headline.per_class_ap);
  report.map_score = headline.map;
  report.omitted_classes = std::move(headline.omitted_classes);

  for (double tau : options.sweep_thresholds) {
    report.map_sweep.push_back(
        {tau, MapAtThreshold(predictions, bags, classes, tau,
                             options.criterion, options.ap_mode)
                  .map});
  }

  std::size_t correct = 0;
  const std::set<std::string> known(classes.begin(), classes.end());
  std::vector<ProposalSet> proposal_sets;
  for (const Bag& bag : bags) {
    std::vector<BagPrediction> per_class;
    for (const std::string& cls : classes) per_class.push_back(index.at(bag.id, cls));
    if (ClassifyPredictions(per_class).predicted_class == bag.class_label) {
      ++correct;
    }
    RequireGeometry(bag);
    ProposalSet set;
    set.ground_truth = *bag.ground_truth;
    for (const Instance& inst : bag.instances) set.proposals.push_back(*inst.tube);
    proposal_sets.push_back(std::move(set));
    if (known.count(bag.class_label)) {
      auto records = ScatterData(index.at(bag.id, bag.class_label), bag);
      report.scatter_records.insert(report.scatter_records.end(),
                                    records.begin(), records.end());
    }
  }
  report.classification_accuracy =
      static_cast<double>(correct) / static_cast<double>(bags.size());
  report.recall_iou = RecallIouCurve(proposal_sets, options.recall_thresholds);

  for (const std::string& cls : classes) {
    std::vector<BagPrediction> preds;
    std::vector<Bag> members;
    for (const Bag& bag : bags) {
      if (bag.class_label != cls) continue;
      preds.push_back(index.at(bag.id, cls));
      members.push_back(bag);
    }
    if (!members.empty()) report.per_class_msero[cls] = Msero(preds, members);
  }
  return report;
}

}  // namespace pmil
