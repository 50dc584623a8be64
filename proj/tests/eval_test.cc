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
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "pmil/eval.h"
#include "pmil/geometry.h"
#include "test_util.h"

namespace pmil {
namespace {

using testing::ConstantTube;
using testing::MakeInstance;

// Precision at every rank, straight from the definition.
double ApOracle(std::vector<RankedItem> items, std::size_t positives,
                bool eleven_point) {
  std::stable_sort(items.begin(), items.end(),
                   [](const RankedItem& a, const RankedItem& b) {
                     return a.score > b.score;
                   });
  if (positives == 0) return 0.0;
  std::vector<double> precision;
  std::vector<double> recall;
  double hits = 0;
  double sum = 0;
  for (std::size_t k = 0; k < items.size(); ++k) {
    hits += items[k].correct;
    precision.push_back(hits / static_cast<double>(k + 1));
    recall.push_back(hits / static_cast<double>(positives));
    if (items[k].correct) sum += precision.back();
  }
  if (!eleven_point) return sum / static_cast<double>(positives);
  double ap = 0;
  for (int step = 0; step <= 10; ++step) {
    double best = 0;
    for (std::size_t k = 0; k < items.size(); ++k) {
      if (recall[k] >= step / 10.0 - 1e-12) best = std::max(best, precision[k]);
    }
    ap += best / 11.0;
  }
  return ap;
}

TEST(AveragePrecision, AllCorrectIsOne) {
  const std::vector<RankedItem> items{{0.9, true}, {0.1, true}, {0.5, true}};
  EXPECT_EQ(AveragePrecision(items), 1.0);
}

TEST(AveragePrecision, SingleHitRankedLast) {
  for (std::size_t n = 1; n <= 8; ++n) {
    std::vector<RankedItem> items;
    for (std::size_t i = 0; i + 1 < n; ++i) items.push_back({1.0, false});
    items.push_back({0.0, true});
    EXPECT_NEAR(AveragePrecision(items), 1.0 / static_cast<double>(n), 1e-15);
  }
}

TEST(AveragePrecision, SixItemFixture) {
  const std::vector<RankedItem> items{{0.9, true},  {0.8, false}, {0.7, true},
                                      {0.6, false}, {0.5, false}, {0.4, true}};
  // Hits at ranks 1, 3, 6: (1 + 2/3 + 3/6) / 3.
  EXPECT_NEAR(AveragePrecision(items), (1.0 + 2.0 / 3.0 + 0.5) / 3.0, 1e-15);
  EXPECT_NEAR(AveragePrecision(items), ApOracle(items, 3, false), 1e-15);
  EXPECT_NEAR(AveragePrecision(items, ApMode::kElevenPoint),
              ApOracle(items, 3, true), 1e-15);
}

TEST(AveragePrecision, MatchesOracleOnRandomRankings) {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 300; ++i) {
    std::vector<RankedItem> items(testing::UniformIndex(rng, 1, 15));
    std::size_t hits = 0;
    for (RankedItem& it : items) {
      it.score = std::floor(testing::Uniform(rng, 0, 6));  // ties on purpose
      it.correct = testing::Uniform(rng, 0, 1) < 0.4;
      hits += it.correct;
    }
    const std::size_t positives = hits + testing::UniformIndex(rng, 0, 3);
    for (bool eleven : {false, true}) {
      const ApMode mode = eleven ? ApMode::kElevenPoint : ApMode::kNonInterpolated;
      EXPECT_NEAR(AveragePrecision(items, mode, positives),
                  hits == 0 ? 0.0 : ApOracle(items, positives, eleven), 1e-12);
    }
  }
}

TEST(AveragePrecision, InvariantUnderMonotoneScoreTransform) {
  std::mt19937_64 rng(32);
  for (int i = 0; i < 100; ++i) {
    std::vector<RankedItem> items(10);
    for (RankedItem& it : items) {
      it.score = testing::Uniform(rng, -3, 3);
      it.correct = testing::Uniform(rng, 0, 1) < 0.5;
    }
    std::vector<RankedItem> warped = items;
    for (RankedItem& it : warped) it.score = std::exp(2 * it.score) + 7;
    EXPECT_EQ(AveragePrecision(items), AveragePrecision(warped));
  }
}

TEST(AveragePrecision, NoPositivesGivesZero) {
  const std::vector<RankedItem> items{{0.9, false}, {0.1, false}};
  EXPECT_EQ(AveragePrecision(items), 0.0);
}

// Ground truth 10 x 10 on frame 0; proposal j is 10 x heights[j], so its IOU
// is heights[j] / 10.
Bag IouBag(const std::string& id, const std::string& label,
           const std::vector<double>& heights) {
  Bag bag{id, {}, label, ConstantTube(0, 1, Box{0, 0, 10, 10})};
  for (std::size_t j = 0; j < heights.size(); ++j) {
    Instance inst = MakeInstance(id + "/" + std::to_string(j), {1.f}, id);
    inst.tube = ConstantTube(0, 1, Box{0, 0, 10, heights[j]});
    bag.instances.push_back(inst);
  }
  return bag;
}

BagPrediction MakePrediction(const std::string& bag_id, const std::string& cls,
                             const std::vector<double>& ps) {
  BagPrediction p;
  p.bag_id = bag_id;
  p.class_name = cls;
  p.instance_probabilities = ps;
  double lc = 0.0;
  for (double v : ps) lc += std::log1p(-v);
  p.set_log_complement = lc;
  p.set_probability = -std::expm1(lc);
  p.argmax_index = static_cast<std::size_t>(
      std::max_element(ps.begin(), ps.end()) - ps.begin());
  return p;
}

TEST(LocalizationCorrect, ThresholdOnIou) {
  const Bag bag = IouBag("b", "a", {2.5, 10.0});
  const BagPrediction quarter = MakePrediction("b", "a", {0.9, 0.1});
  EXPECT_TRUE(LocalizationCorrect(quarter, bag, 0.2));
  EXPECT_FALSE(LocalizationCorrect(quarter, bag, 0.3));
  const BagPrediction exact = MakePrediction("b", "a", {0.1, 0.9});
  EXPECT_TRUE(LocalizationCorrect(exact, bag, 1.0));
}

TEST(LocalizationCorrect, TemporallyDisjointFails) {
  Bag bag = IouBag("b", "a", {10.0});
  bag.instances[0].tube = ConstantTube(5, 3, Box{0, 0, 10, 10});
  const BagPrediction p = MakePrediction("b", "a", {0.5});
  EXPECT_FALSE(LocalizationCorrect(p, bag, 1e-9));
  EXPECT_TRUE(LocalizationCorrect(p, bag, 0.0));
}

TEST(LocalizationCorrect, CoverageCriterion) {
  const Bag bag = IouBag("b", "a", {3.0});
  const BagPrediction p = MakePrediction("b", "a", {0.5});
  EXPECT_TRUE(LocalizationCorrect(p, bag, 0.3, OverlapCriterion::kCoverage));
  EXPECT_FALSE(LocalizationCorrect(p, bag, 0.31, OverlapCriterion::kCoverage));
}

TEST(LocalizationCorrect, MissingGeometryNamesTheBag) {
  Bag bag = IouBag("lost", "a", {3.0});
  bag.ground_truth.reset();
  try {
    LocalizationCorrect(MakePrediction("lost", "a", {0.5}), bag, 0.2);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidData);
    EXPECT_NE(std::string(e.what()).find("lost"), std::string::npos);
  }
}

struct Fixture {
  std::vector<Bag> bags;
  std::vector<BagPrediction> predictions;
  std::vector<std::string> classes{"a", "b", "c"};
};

Fixture RandomFixture(std::mt19937_64& rng, std::size_t n) {
  Fixture f;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string id = "bag" + std::to_string(i);
    std::vector<double> heights(testing::UniformIndex(rng, 1, 5));
    for (double& h : heights) h = std::round(testing::Uniform(rng, 0, 10));
    f.bags.push_back(IouBag(id, f.classes[i % 3], heights));
    for (const std::string& cls : f.classes) {
      std::vector<double> ps(heights.size());
      for (double& p : ps) p = testing::Uniform(rng, 0.01, 0.99);
      f.predictions.push_back(MakePrediction(id, cls, ps));
    }
  }
  return f;
}

double MapOracle(const Fixture& f, double tau) {
  double sum = 0;
  int counted = 0;
  for (const std::string& cls : f.classes) {
    std::vector<RankedItem> items;
    std::size_t positives = 0;
    for (const Bag& bag : f.bags) {
      const BagPrediction* p = nullptr;
      for (const BagPrediction& q : f.predictions) {
        if (q.bag_id == bag.id && q.class_name == cls) p = &q;
      }
      bool correct = false;
      if (bag.class_label == cls) {
        ++positives;
        const double h = bag.instances[p->argmax_index].tube->entries[0].box.h;
        correct = h / 10.0 >= tau;
      }
      items.push_back({p->set_probability, correct});
    }
    if (positives == 0) continue;
    sum += ApOracle(items, positives, false);
    ++counted;
  }
  return counted == 0 ? 0.0 : sum / counted;
}

TEST(MapAtThreshold, PerfectPredictionsScoreOne) {
  Fixture f;
  for (int i = 0; i < 6; ++i) {
    const std::string id = "bag" + std::to_string(i);
    const std::string label = f.classes[i % 3];
    f.bags.push_back(IouBag(id, label, {1.0, 10.0}));
    for (const std::string& cls : f.classes) {
      f.predictions.push_back(MakePrediction(
          id, cls, cls == label ? std::vector<double>{0.1, 0.9}
                                : std::vector<double>{0.05, 0.02}));
    }
  }
  const MapResult r = MapAtThreshold(f.predictions, f.bags, f.classes, 0.2);
  EXPECT_EQ(r.map, 1.0);
  EXPECT_TRUE(r.omitted_classes.empty());
}

TEST(MapAtThreshold, MatchesBruteForceOracle) {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 30; ++trial) {
    const Fixture f = RandomFixture(rng, 12);
    for (double tau : {0.0, 0.1, 0.2, 0.35, 0.5, 0.8, 1.0}) {
      const MapResult r = MapAtThreshold(f.predictions, f.bags, f.classes, tau);
      EXPECT_NEAR(r.map, MapOracle(f, tau), 1e-12) << "tau " << tau;
    }
  }
}

TEST(MapAtThreshold, ZeroThresholdIsPureRanking) {
  std::mt19937_64 rng(34);
  Fixture f = RandomFixture(rng, 9);
  const double at_zero =
      MapAtThreshold(f.predictions, f.bags, f.classes, 0.0).map;
  for (Bag& bag : f.bags) {
    for (Instance& inst : bag.instances) {
      inst.tube = ConstantTube(3, 1, Box{0, 0, 1, 1});  // never overlaps
    }
  }
  EXPECT_EQ(MapAtThreshold(f.predictions, f.bags, f.classes, 0.0).map, at_zero);
}

TEST(MapAtThreshold, AbsentClassIsOmitted) {
  std::mt19937_64 rng(35);
  Fixture f = RandomFixture(rng, 6);
  f.classes.push_back("ghost");
  for (const Bag& bag : f.bags) {
    f.predictions.push_back(MakePrediction(
        bag.id, "ghost", std::vector<double>(bag.instances.size(), 0.5)));
  }
  const MapResult r = MapAtThreshold(f.predictions, f.bags, f.classes, 0.2);
  EXPECT_EQ(r.omitted_classes, std::vector<std::string>{"ghost"});
  EXPECT_EQ(r.per_class_ap.size(), 3u);
  double sum = 0;
  for (const auto& [cls, ap] : r.per_class_ap) sum += ap;
  EXPECT_NEAR(r.map, sum / 3.0, 1e-15);
}

TEST(MapAtThreshold, NonIncreasingInThreshold) {
  std::mt19937_64 rng(36);
  for (int trial = 0; trial < 30; ++trial) {
    const Fixture f = RandomFixture(rng, 15);
    double previous = 2.0;
    for (double tau = 0.0; tau <= 1.0; tau += 0.05) {
      const double m = MapAtThreshold(f.predictions, f.bags, f.classes, tau).map;
      EXPECT_LE(m, previous);
      previous = m;
    }
  }
}

TEST(OptimalInstance, HighestIouLowestIndexOnTies) {
  EXPECT_EQ(OptimalInstance(IouBag("b", "a", {3, 8, 8, 1})), 1u);
  EXPECT_EQ(OptimalInstance(IouBag("b", "a", {0, 0})), 0u);
}

TEST(Msero, ZeroWhenArgmaxIsOptimal) {
  const std::vector<Bag> bags{IouBag("x", "a", {2, 9}), IouBag("y", "a", {7, 1})};
  const std::vector<BagPrediction> preds{MakePrediction("x", "a", {0.3, 0.6}),
                                         MakePrediction("y", "a", {0.8, 0.2})};
  EXPECT_EQ(Msero(preds, bags), 0.0);
}

TEST(Msero, SingleBagSquaredGap) {
  const std::vector<Bag> bags{IouBag("x", "a", {9, 2})};
  const std::vector<BagPrediction> preds{MakePrediction("x", "a", {0.2, 0.9})};
  EXPECT_NEAR(Msero(preds, bags), 0.49, 1e-15);
}

TEST(Msero, FourBagFormula) {
  const std::vector<Bag> bags{IouBag("p", "a", {1, 5, 3}), IouBag("q", "a", {6, 2}),
                              IouBag("r", "a", {4, 4, 9}), IouBag("s", "a", {8})};
  const std::vector<BagPrediction> preds{
      MakePrediction("p", "a", {0.7, 0.4, 0.1}),
      MakePrediction("q", "a", {0.3, 0.35}),
      MakePrediction("r", "a", {0.6, 0.2, 0.5}),
      MakePrediction("s", "a", {0.45})};
  const double oracle = ((0.4 - 0.7) * (0.4 - 0.7) + (0.3 - 0.35) * (0.3 - 0.35) +
                         (0.5 - 0.6) * (0.5 - 0.6) + 0.0) /
                        4.0;
  EXPECT_NEAR(Msero(preds, bags), oracle, 1e-12);
}

TEST(ScatterData, FlagsOneArgmaxAndOneOptimal) {
  std::mt19937_64 rng(37);
  for (int i = 0; i < 50; ++i) {
    const Fixture f = RandomFixture(rng, 1);
    const auto records = ScatterData(f.predictions[0], f.bags[0]);
    ASSERT_EQ(records.size(), f.bags[0].instances.size());
    int argmax = 0;
    int optimal = 0;
    for (std::size_t j = 0; j < records.size(); ++j) {
      argmax += records[j].is_argmax;
      optimal += records[j].is_optimal;
      EXPECT_EQ(records[j].instance_id, f.bags[0].instances[j].id);
      EXPECT_NEAR(records[j].iou,
                  f.bags[0].instances[j].tube->entries[0].box.h / 10.0, 1e-15);
      EXPECT_EQ(records[j].probability, f.predictions[0].instance_probabilities[j]);
    }
    EXPECT_EQ(argmax, 1);
    EXPECT_EQ(optimal, 1);
  }
}

TEST(Evaluate, ReportIsConsistent) {
  std::mt19937_64 rng(38);
  const Fixture f = RandomFixture(rng, 12);
  const EvalReport report = Evaluate(f.predictions, f.bags, f.classes);
  double sum = 0.0;
  for (const auto& [cls, ap] : report.per_class_ap) {
    EXPECT_GE(ap, 0.0);
    EXPECT_LE(ap, 1.0);
    sum += ap;
  }
  EXPECT_NEAR(report.map_score, sum / report.per_class_ap.size(), 1e-9);
  EXPECT_NEAR(report.map_score, MapOracle(f, 0.2), 1e-12);
  ASSERT_EQ(report.map_sweep.size(), 11u);
  EXPECT_NEAR(report.map_sweep.front().threshold, 0.1, 1e-12);
  EXPECT_NEAR(report.map_sweep.back().threshold, 0.6, 1e-12);
  for (std::size_t k = 1; k < report.map_sweep.size(); ++k) {
    EXPECT_LE(report.map_sweep[k].value, report.map_sweep[k - 1].value);
  }
  for (std::size_t k = 1; k < report.recall_iou.size(); ++k) {
    EXPECT_LE(report.recall_iou[k].recall, report.recall_iou[k - 1].recall);
  }
  EXPECT_EQ(report.per_class_msero.size(), 3u);
  for (const auto& [cls, m] : report.per_class_msero) {
    EXPECT_GE(m, 0.0);
    EXPECT_LE(m, 1.0);
  }
  std::size_t instances = 0;
  for (const Bag& bag : f.bags) instances += bag.instances.size();
  EXPECT_EQ(report.scatter_records.size(), instances);

  std::size_t correct = 0;
  for (const Bag& bag : f.bags) {
    std::string best;
    double best_p = -1.0;
    for (const BagPrediction& p : f.predictions) {
      if (p.bag_id == bag.id && p.set_probability > best_p) {
        best_p = p.set_probability;
        best = p.class_name;
      }
    }
    correct += best == bag.class_label;
  }
  EXPECT_NEAR(report.classification_accuracy,
              static_cast<double>(correct) / f.bags.size(), 1e-15);
}

}  // namespace
}  // namespace pmil
