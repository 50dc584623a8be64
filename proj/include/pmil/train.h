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

#ifndef PMIL_TRAIN_H_
#define PMIL_TRAIN_H_

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pmil/core.h"
#include "pmil/kernels.h"

namespace pmil {

// A bag paired with its one-vs-all label for the class being trained.
struct LabeledBag {
  Bag bag;
  BinaryLabel label = BinaryLabel::kNegative;
};

// Y = 1 iff bag.class_label == class_name.
std::vector<LabeledBag> LabelForClass(std::span<const Bag> bags,
                                      const std::string& class_name);

struct LossBreakdown {
  double regularizer = 0.0;    // lambda/2 * |w|^2
  double bag_loss = 0.0;       // (1/N) sum beta * cross-entropy
  double instance_loss = 0.0;  // (1/N) sum gamma/J_i * sum hinge
  double total = 0.0;
};

// All functions below take the augmented weight vector: d feature weights
// followed by the bias.

// Evaluates the relaxed-MIL objective. Throws kNumerical, naming the bag,
// when an intermediate value is not finite.
LossBreakdown Objective(std::span<const double> weights,
                        std::span<const LabeledBag> dataset,
                        const Hyperparameters& hp);

// Gradient of the bag cross-entropy with respect to the augmented weights,
// -((Y - P) / P) * sum_j p_j x_j, with P clamped to [1e-12, 1 - 1e-12].
std::vector<double> BagGradient(std::span<const double> weights,
                                const Bag& bag, BinaryLabel label);

// Subgradient of (1/J) sum_j max(0, eta - sign(p_j - zeta) * w.x_j), with
// sign(0) = +1.
std::vector<double> HingeSubgradient(std::span<const double> weights,
                                     const Bag& bag,
                                     const Hyperparameters& hp);

struct SgdState {
  std::vector<double> weights;  // augmented
  std::uint64_t t = 1;          // step counter, eps = 1/(t*lambda)
};

// One projected SGD step: shrink, bag-gradient step, hinge step, projection
// onto the ball of radius 1/sqrt(lambda). Gradients are taken at the weights
// on entry. Increments state.t. Throws kNumerical if the weights stop being
// finite.
void SgdStep(SgdState& state, const Bag& bag, BinaryLabel label,
             const Hyperparameters& hp,
             const kernels::KernelTable& k = kernels::ActiveKernels());

// Splits every positive bag into a positive bag of its confident proposals
// and a negative bag of the rest. Negative bags pass through; empty sides are
// dropped.
std::vector<LabeledBag> SplitSets(std::span<const LabeledBag> dataset,
                                  std::span<const double> weights,
                                  const Hyperparameters& hp);

struct EpochReport {
  std::string class_name;
  std::uint32_t epoch = 0;  // 0-based
  std::uint64_t steps = 0;  // cumulative SGD steps
  std::size_t bags_in_view = 0;
  std::size_t positive_bags_in_view = 0;
  // Objective of the weights after this epoch, on the original labeled
  // dataset (before any splitting) so epochs are comparable.
  LossBreakdown loss;
  bool split_applied = false;
  std::size_t bags_after_split = 0;
};

struct TrainOptions {
  bool filter_large_proposals = false;
  bool split_sets = false;
  // Visit bags in dataset order rather than a seeded shuffle per epoch.
  bool cyclic_order = false;
  // Called once per epoch; the objective is only evaluated when set.
  std::function<void(const EpochReport&)> on_epoch;
};

// Trains the one-vs-all model for `class_name`: pi epochs of projected SGD
// from w = 0, splitting positive bags between epochs when enabled.
ClassModel TrainClass(std::span<const Bag> dataset,
                      const std::string& class_name,
                      const Hyperparameters& hp,
                      const TrainOptions& options = {});

}  // namespace pmil

#endif  // PMIL_TRAIN_H_
