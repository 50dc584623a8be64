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

#include "pmil/train.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "pmil/error.h"
#include "pmil/geometry.h"

namespace pmil {

namespace {

constexpr double kProbabilityFloor = 1e-12;

void RequireAugmentedDimension(std::span<const double> weights,
                               const Bag& bag) {
  if (weights.size() != bag.dimension() + 1) {
    throw Error(ErrorKind::kDimensionMismatch,
                "bag '" + bag.id + "' has dimension " +
                    std::to_string(bag.dimension()) +
                    " but the weight vector has dimension " +
                    std::to_string(weights.size() == 0 ? 0
                                                       : weights.size() - 1));
  }
}

double Sign(double v) { return v >= 0.0 ? 1.0 : -1.0; }

// Per-instance quantities every loss and gradient term is built from.
struct BagScores {
  std::vector<double> logits;
  std::vector<double> probabilities;
  double log_complement = 0.0;  // sum_j log(1 - p_j)
};

BagScores ScoreBag(std::span<const double> weights, const Bag& bag,
                   const kernels::KernelTable& k) {
  RequireAugmentedDimension(weights, bag);
  BagScores s;
  s.logits.reserve(bag.instances.size());
  s.probabilities.reserve(bag.instances.size());
  for (const Instance& inst : bag.instances) {
    const double z = AugmentedLogit(weights, inst.features.values(), k);
    s.logits.push_back(z);
    s.probabilities.push_back(Sigmoid(z));
    s.log_complement += LogOneMinusSigmoid(z);
  }
  return s;
}

// Coefficients c_j such that the bag-loss gradient is sum_j c_j x_j.
std::vector<double> BagGradientCoefficients(const BagScores& s,
                                            BinaryLabel label) {
  std::vector<double> coef(s.probabilities.size());
  if (label == BinaryLabel::kNegative) {
    // d/dw [-log(1 - P)] = sum_j p_j x_j
    std::copy(s.probabilities.begin(), s.probabilities.end(), coef.begin());
    return coef;
  }
  // d/dw [-log P] = -((1 - P) / P) sum_j p_j x_j
  double bag_p = -std::expm1(s.log_complement);
  double complement = std::exp(s.log_complement);
  if (bag_p < kProbabilityFloor) {
    bag_p = kProbabilityFloor;
    complement = 1.0 - kProbabilityFloor;
  } else if (complement < kProbabilityFloor) {
    bag_p = 1.0 - kProbabilityFloor;
    complement = kProbabilityFloor;
  }
  const double ratio = complement / bag_p;
  for (std::size_t j = 0; j < coef.size(); ++j) {
    coef[j] = -ratio * s.probabilities[j];
  }
  return coef;
}

// Coefficients c_j such that the hinge subgradient is sum_j c_j x_j.
std::vector<double> HingeCoefficients(const BagScores& s,
                                      const Hyperparameters& hp) {
  const double inv_j = 1.0 / static_cast<double>(s.logits.size());
  std::vector<double> coef(s.logits.size(), 0.0);
  for (std::size_t j = 0; j < coef.size(); ++j) {
    const double sign = Sign(s.probabilities[j] - hp.zeta);
    if (sign * s.logits[j] < hp.eta) coef[j] = -sign * inv_j;
  }
  return coef;
}

std::vector<double> Combine(const Bag& bag, std::span<const double> coef,
                            const kernels::KernelTable& k) {
  const std::size_t d = bag.dimension();
  std::vector<double> out(d + 1, 0.0);
  for (std::size_t j = 0; j < coef.size(); ++j) {
    if (coef[j] == 0.0) continue;
    k.axpy(coef[j], bag.instances[j].features.values().data(), out.data(), d);
    out[d] += coef[j];
  }
  return out;
}

std::uint64_t ClassSeed(std::uint64_t seed, const std::string& class_name) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : class_name) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return seed ^ h;
}

}  // namespace

std::vector<LabeledBag> LabelForClass(std::span<const Bag> bags,
                                      const std::string& class_name) {
  std::vector<LabeledBag> out;
  out.reserve(bags.size());
  for (const Bag& bag : bags) {
    out.push_back({bag, bag.class_label == class_name ? BinaryLabel::kPositive
                                                      : BinaryLabel::kNegative});
  }
  return out;
}

LossBreakdown Objective(std::span<const double> weights,
                        std::span<const LabeledBag> dataset,
                        const Hyperparameters& hp) {
  if (dataset.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "objective over empty dataset");
  }
  const auto& k = kernels::ActiveKernels();
  LossBreakdown loss;
  double norm_sq = 0.0;
  for (double w : weights) norm_sq += w * w;
  loss.regularizer = 0.5 * hp.lambda * norm_sq;

  for (const LabeledBag& lb : dataset) {
    BagScores s;
    try {
      s = ScoreBag(weights, lb.bag, k);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kNumerical) throw;
      throw Error(ErrorKind::kNumerical,
                  "bag '" + lb.bag.id + "': " + e.what());
    }
    const double bag_p = -std::expm1(s.log_complement);
    const double log_p = std::log(
        std::clamp(bag_p, kProbabilityFloor, 1.0 - kProbabilityFloor));
    const double log_complement = bag_p > 1.0 - kProbabilityFloor
                                      ? std::log(kProbabilityFloor)
                                      : s.log_complement;
    const double cross_entropy =
        lb.label == BinaryLabel::kPositive ? -log_p : -log_complement;

    double hinge = 0.0;
    for (std::size_t j = 0; j < s.logits.size(); ++j) {
      const double sign = Sign(s.probabilities[j] - hp.zeta);
      hinge += std::max(0.0, hp.eta - sign * s.logits[j]);
    }
    hinge /= static_cast<double>(s.logits.size());

    if (!std::isfinite(cross_entropy) || !std::isfinite(hinge)) {
      throw Error(ErrorKind::kNumerical,
                  "non-finite loss on bag '" + lb.bag.id + "'");
    }
    loss.bag_loss += hp.beta * cross_entropy;
    loss.instance_loss += hp.gamma * hinge;
  }
  const double n = static_cast<double>(dataset.size());
  loss.bag_loss /= n;
  loss.instance_loss /= n;
  loss.total = loss.regularizer + loss.bag_loss + loss.instance_loss;
  if (!std::isfinite(loss.total)) {
    throw Error(ErrorKind::kNumerical, "objective is not finite");
  }
  return loss;
}

std::vector<double> BagGradient(std::span<const double> weights,
                                const Bag& bag, BinaryLabel label) {
  const auto& k = kernels::ActiveKernels();
  const BagScores s = ScoreBag(weights, bag, k);
  return Combine(bag, BagGradientCoefficients(s, label), k);
}

std::vector<double> HingeSubgradient(std::span<const double> weights,
                                     const Bag& bag,
                                     const Hyperparameters& hp) {
  const auto& k = kernels::ActiveKernels();
  const BagScores s = ScoreBag(weights, bag, k);
  return Combine(bag, HingeCoefficients(s, hp), k);
}

void SgdStep(SgdState& state, const Bag& bag, BinaryLabel label,
             const Hyperparameters& hp, const kernels::KernelTable& k) {
  const double eps = 1.0 / (static_cast<double>(state.t) * hp.lambda);
  if (!std::isfinite(eps)) {
    throw Error(ErrorKind::kNumerical,
                "step size not finite at iteration " + std::to_string(state.t));
  }
  std::vector<double>& w = state.weights;
  const std::size_t d = bag.dimension();
  const BagScores s = ScoreBag(w, bag, k);
  const std::vector<double> bag_coef = BagGradientCoefficients(s, label);
  const std::vector<double> hinge_coef = HingeCoefficients(s, hp);

  k.scale(1.0 - hp.lambda * eps, w.data(), w.size());
  for (std::size_t j = 0; j < bag.instances.size(); ++j) {
    const double c = -eps * (hp.beta * bag_coef[j] + hp.gamma * hinge_coef[j]);
    if (c == 0.0) continue;
    k.axpy(c, bag.instances[j].features.values().data(), w.data(), d);
    w[d] += c;
  }

  const double norm = std::sqrt(k.squared_norm(w.data(), w.size()));
  if (!std::isfinite(norm)) {
    throw Error(ErrorKind::kNumerical, "weights diverged at iteration " +
                                           std::to_string(state.t));
  }
  const double radius = 1.0 / std::sqrt(hp.lambda);
  if (norm > radius) k.scale(radius / norm, w.data(), w.size());
  ++state.t;
}

std::vector<LabeledBag> SplitSets(std::span<const LabeledBag> dataset,
                                  std::span<const double> weights,
                                  const Hyperparameters& hp) {
  const auto& k = kernels::ActiveKernels();
  std::vector<LabeledBag> out;
  out.reserve(dataset.size() * 2);
  for (const LabeledBag& lb : dataset) {
    if (lb.label == BinaryLabel::kNegative) {
      out.push_back(lb);
      continue;
    }
    const BagScores s = ScoreBag(weights, lb.bag, k);
    const std::size_t n = s.probabilities.size();
    std::vector<bool> positive(n, false);
    if (hp.split_mode == SplitMode::kThreshold) {
      for (std::size_t j = 0; j < n; ++j) {
        positive[j] = s.probabilities[j] > hp.omega;
      }
    } else {
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) {
                         return s.logits[a] > s.logits[b];
                       });
      const std::size_t keep = std::min<std::size_t>(hp.top_k, n);
      for (std::size_t r = 0; r < keep; ++r) positive[order[r]] = true;
    }
    const auto positives = std::count(positive.begin(), positive.end(), true);
    if (positives == static_cast<std::ptrdiff_t>(n)) {
      out.push_back(lb);
      continue;
    }
    LabeledBag neg{lb.bag, BinaryLabel::kNegative};
    neg.bag.id = lb.bag.id + "/neg";
    neg.bag.instances.clear();
    LabeledBag pos{lb.bag, BinaryLabel::kPositive};
    pos.bag.id = lb.bag.id + "/pos";
    pos.bag.instances.clear();
    for (std::size_t j = 0; j < n; ++j) {
      (positive[j] ? pos : neg).bag.instances.push_back(lb.bag.instances[j]);
    }
    if (positives == 0) neg.bag.id = lb.bag.id;
    out.push_back(std::move(neg));
    if (positives > 0) out.push_back(std::move(pos));
  }
  return out;
}

ClassModel TrainClass(std::span<const Bag> dataset,
                      const std::string& class_name, const Hyperparameters& hp,
                      const TrainOptions& options) {
  ValidateHyperparameters(hp);
  if (dataset.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "training set is empty");
  }
  std::vector<LabeledBag> view;
  view.reserve(dataset.size());
  const std::size_t d = dataset.front().dimension();
  for (const Bag& bag : dataset) {
    ValidateBag(bag);
    if (bag.dimension() != d) {
      throw Error(ErrorKind::kDimensionMismatch,
                  "bag '" + bag.id + "' has dimension " +
                      std::to_string(bag.dimension()) + ", expected " +
                      std::to_string(d));
    }
    Bag prepared = options.filter_large_proposals
                       ? FilterLargeProposals(bag, hp.filter_max_volume_fraction)
                       : bag;
    const BinaryLabel label = bag.class_label == class_name
                                  ? BinaryLabel::kPositive
                                  : BinaryLabel::kNegative;
    view.push_back({std::move(prepared), label});
  }
  const auto positive_count =
      std::count_if(view.begin(), view.end(), [](const LabeledBag& lb) {
        return lb.label == BinaryLabel::kPositive;
      });
  if (positive_count == 0) {
    throw Error(ErrorKind::kInvalidArgument,
                "class has no positive sets: " + class_name);
  }
  if (positive_count == static_cast<std::ptrdiff_t>(view.size())) {
    throw Error(ErrorKind::kInvalidArgument,
                "class has no negative sets: " + class_name);
  }

  const auto& k = kernels::ActiveKernels();
  const std::vector<LabeledBag> original =
      options.on_epoch ? view : std::vector<LabeledBag>{};
  std::mt19937_64 rng(ClassSeed(hp.seed, class_name));
  SgdState state{std::vector<double>(d + 1, 0.0), 1};

  for (std::uint32_t epoch = 0; epoch < hp.pi; ++epoch) {
    std::vector<std::size_t> order(view.size());
    std::iota(order.begin(), order.end(), 0);
    if (!options.cyclic_order) std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i : order) {
      SgdStep(state, view[i].bag, view[i].label, hp, k);
    }

    EpochReport report;
    report.class_name = class_name;
    report.epoch = epoch;
    report.steps = state.t - 1;
    report.bags_in_view = view.size();
    report.positive_bags_in_view = static_cast<std::size_t>(
        std::count_if(view.begin(), view.end(), [](const LabeledBag& lb) {
          return lb.label == BinaryLabel::kPositive;
        }));
    if (options.split_sets && epoch + 1 < hp.pi) {
      view = SplitSets(view, state.weights, hp);
      report.split_applied = true;
    }
    report.bags_after_split = view.size();
    if (options.on_epoch) {
      report.loss = Objective(state.weights, original, hp);
      options.on_epoch(report);
    }
  }

  ClassModel model;
  model.class_name = class_name;
  model.weights.assign(state.weights.begin(), state.weights.begin() + d);
  model.bias = state.weights[d];
  model.hyperparameters = hp;
  model.trained_iterations = state.t - 1;
  return model;
}

}  // namespace pmil
