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

#ifndef PMIL_CORE_H_
#define PMIL_CORE_H_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pmil/kernels.h"
#include "pmil/tube.h"

namespace pmil {

// Immutable feature vector with shared storage; copies are cheap, which
// matters when set splitting rewrites bags of 4096-d proposals.
class FeatureVector {
 public:
  FeatureVector();
  // Throws pmil::Error(kInvalidData) on non-finite components.
  explicit FeatureVector(std::vector<float> values);

  std::span<const float> values() const { return *values_; }
  std::size_t dimension() const { return values_->size(); }
  float operator[](std::size_t i) const { return (*values_)[i]; }

  friend bool operator==(const FeatureVector& a, const FeatureVector& b) {
    return a.values_ == b.values_ || *a.values_ == *b.values_;
  }

 private:
  std::shared_ptr<const std::vector<float>> values_;
};

// One proposal of a bag.
struct Instance {
  std::string id;
  FeatureVector features;
  std::optional<Tube> tube;
  std::string source_bag_id;

  friend bool operator==(const Instance&, const Instance&) = default;
};

// One video: a nonempty set of proposals carrying a single weak label.
struct Bag {
  std::string id;
  std::vector<Instance> instances;
  std::string class_label;
  std::optional<Tube> ground_truth;

  std::size_t dimension() const {
    return instances.empty() ? 0 : instances.front().features.dimension();
  }
  friend bool operator==(const Bag&, const Bag&) = default;
};

// Throws pmil::Error when the bag is empty, has duplicate or empty instance
// ids, mixed feature dimensions, or invalid tube geometry.
void ValidateBag(const Bag& bag);

// Per-class bag label Y in {0, 1}.
enum class BinaryLabel : std::uint8_t { kNegative = 0, kPositive = 1 };

inline double LabelValue(BinaryLabel label) {
  return label == BinaryLabel::kPositive ? 1.0 : 0.0;
}

enum class SplitMode { kThreshold, kTopK };

struct Hyperparameters {
  double lambda = 0.02;   // L2 weight and step schedule, eps = 1/(t*lambda)
  double beta = 1.0;      // bag cross-entropy weight
  double gamma = 0.05;    // instance hinge weight
  double eta = 1.0;       // hinge margin
  double zeta = 0.5;      // probability above which a proposal counts positive
  double omega = 0.5;     // set-splitting threshold
  std::uint32_t pi = 8;   // epochs (split levels)
  double filter_max_volume_fraction = 0.75;
  SplitMode split_mode = SplitMode::kTopK;
  std::uint32_t top_k = 3;
  std::uint64_t seed = 42;

  friend bool operator==(const Hyperparameters&,
                         const Hyperparameters&) = default;
};

// Throws pmil::Error(kInvalidArgument) naming the first out-of-range field.
void ValidateHyperparameters(const Hyperparameters& hp);

// Learned linear model for one action class.
struct ClassModel {
  std::string class_name;
  std::vector<double> weights;
  double bias = 0.0;
  Hyperparameters hyperparameters;
  std::uint64_t trained_iterations = 0;

  std::size_t dimension() const { return weights.size(); }
  friend bool operator==(const ClassModel&, const ClassModel&) = default;
};

// Logits are clamped to this magnitude before exponentiation.
inline constexpr double kMaxLogit = 500.0;

// Logistic function on a clamped logit. The result is kept strictly inside
// (0, 1) even where the double-precision sigmoid would round to 1.
double Sigmoid(double logit);

// log(1 - sigmoid(logit)), exact for large positive logits.
double LogOneMinusSigmoid(double logit);

// w.x + b. Throws kDimensionMismatch naming both dimensions.
double InstanceLogit(const ClassModel& model, const Instance& instance);

// sigmoid(w.x + b).
double InstanceProbability(const ClassModel& model, const Instance& instance);

// Noisy-OR 1 - prod(1 - p_j), accumulated in log space and never below
// max p_j. Every p_j must lie in (0, 1); throws kInvalidArgument for an empty list ("bag has no instances")
// or out-of-range entries.
double BagProbability(std::span<const double> instance_probabilities);

// sum_j log(1 - p_j) computed from logits; the bag probability is
// 1 - exp(result). Ranking by the negated value is equivalent to ranking by
// bag probability but does not saturate at 1.
double BagLogComplement(std::span<const double> logits);

// 1 - exp(log_complement), kept strictly inside (0, 1).
double ProbabilityFromLogComplement(double log_complement);

// Logit against an augmented weight vector: `augmented` holds d weights
// followed by the bias, `x` holds the d features.
inline double AugmentedLogit(std::span<const double> augmented,
                             std::span<const float> x,
                             const kernels::KernelTable& k) {
  return k.dot(x.data(), augmented.data(), x.size()) + augmented[x.size()];
}

}  // namespace pmil

#endif  // PMIL_CORE_H_
