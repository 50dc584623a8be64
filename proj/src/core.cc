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

#include "pmil/core.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "pmil/error.h"

namespace pmil {

namespace {

const std::vector<float>& EmptyValues() {
  static const std::vector<float> empty;
  return empty;
}

constexpr double kJustBelowOne = 1.0 - std::numeric_limits<double>::epsilon() / 2;

double ClampOpenUnit(double p) {
  return std::clamp(p, std::numeric_limits<double>::denorm_min(),
                    kJustBelowOne);
}

double ClampLogit(double logit) {
  if (std::isnan(logit)) {
    throw Error(ErrorKind::kNumerical, "logit is NaN");
  }
  return std::clamp(logit, -kMaxLogit, kMaxLogit);
}

}  // namespace

const char* ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument:
      return "invalid argument";
    case ErrorKind::kDimensionMismatch:
      return "dimension mismatch";
    case ErrorKind::kInvalidData:
      return "invalid data";
    case ErrorKind::kCorruptFile:
      return "corrupt file";
    case ErrorKind::kVersionMismatch:
      return "version mismatch";
    case ErrorKind::kIo:
      return "i/o error";
    case ErrorKind::kNumerical:
      return "numerical failure";
  }
  return "error";
}

FeatureVector::FeatureVector()
    : values_(std::shared_ptr<const std::vector<float>>(
          std::shared_ptr<const std::vector<float>>{}, &EmptyValues())) {}

FeatureVector::FeatureVector(std::vector<float> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw Error(ErrorKind::kInvalidData,
                  "feature component " + std::to_string(i) + " is not finite");
    }
  }
  values_ = std::make_shared<const std::vector<float>>(std::move(values));
}

void ValidateBag(const Bag& bag) {
  if (bag.instances.empty()) {
    throw Error(ErrorKind::kInvalidData,
                "bag '" + bag.id + "' has no instances");
  }
  const std::size_t dim = bag.dimension();
  std::set<std::string> seen;
  for (const Instance& inst : bag.instances) {
    if (inst.id.empty()) {
      throw Error(ErrorKind::kInvalidData,
                  "bag '" + bag.id + "' has an instance with an empty id");
    }
    if (!seen.insert(inst.id).second) {
      throw Error(ErrorKind::kInvalidData, "bag '" + bag.id +
                                               "' has duplicate instance id '" +
                                               inst.id + "'");
    }
    if (inst.features.dimension() != dim) {
      throw Error(ErrorKind::kDimensionMismatch,
                  "bag '" + bag.id + "' instance '" + inst.id +
                      "' has dimension " +
                      std::to_string(inst.features.dimension()) +
                      ", expected " + std::to_string(dim));
    }
    if (inst.tube) ValidateTube(*inst.tube);
  }
  if (bag.ground_truth) ValidateTube(*bag.ground_truth);
}

void ValidateHyperparameters(const Hyperparameters& hp) {
  auto fail = [](const std::string& what) {
    throw Error(ErrorKind::kInvalidArgument, "hyperparameter " + what);
  };
  if (!(hp.lambda > 0.0) || !std::isfinite(hp.lambda)) {
    fail("lambda must be > 0");
  }
  if (!(hp.beta >= 0.0) || !std::isfinite(hp.beta)) fail("beta must be >= 0");
  if (!(hp.gamma >= 0.0) || !std::isfinite(hp.gamma)) {
    fail("gamma must be >= 0");
  }
  if (!(hp.eta >= 0.0) || !std::isfinite(hp.eta)) fail("eta must be >= 0");
  if (!(hp.zeta > 0.0 && hp.zeta < 1.0)) fail("zeta must lie in (0,1)");
  if (!(hp.omega > 0.0 && hp.omega < 1.0)) fail("omega must lie in (0,1)");
  if (hp.pi < 1) fail("pi must be >= 1");
  if (!(hp.filter_max_volume_fraction > 0.0 &&
        hp.filter_max_volume_fraction <= 1.0)) {
    fail("filter_max_volume_fraction must lie in (0,1]");
  }
  if (hp.top_k < 1) fail("top_k must be >= 1");
}

double Sigmoid(double logit) {
  const double z = ClampLogit(logit);
  if (z >= 0.0) return ClampOpenUnit(1.0 / (1.0 + std::exp(-z)));
  const double e = std::exp(z);
  return ClampOpenUnit(e / (1.0 + e));
}

double LogOneMinusSigmoid(double logit) {
  const double z = ClampLogit(logit);
  // -softplus(z)
  return -(std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))));
}

double InstanceLogit(const ClassModel& model, const Instance& instance) {
  const auto x = instance.features.values();
  if (x.size() != model.dimension()) {
    throw Error(ErrorKind::kDimensionMismatch,
                "instance '" + instance.id + "' has dimension " +
                    std::to_string(x.size()) + " but model '" +
                    model.class_name + "' has dimension " +
                    std::to_string(model.dimension()));
  }
  return kernels::ActiveKernels().dot(x.data(), model.weights.data(),
                                      x.size()) +
         model.bias;
}

double InstanceProbability(const ClassModel& model, const Instance& instance) {
  return Sigmoid(InstanceLogit(model, instance));
}

double BagProbability(std::span<const double> instance_probabilities) {
  if (instance_probabilities.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "bag has no instances");
  }
  double log_complement = 0.0;
  double max_p = 0.0;
  for (double p : instance_probabilities) {
    if (!(p > 0.0 && p < 1.0)) {
      throw Error(ErrorKind::kInvalidArgument,
                  "instance probability " + std::to_string(p) +
                      " outside (0,1)");
    }
    log_complement += std::log1p(-p);
    max_p = std::max(max_p, p);
  }
  return std::max(ProbabilityFromLogComplement(log_complement), max_p);
}

double BagLogComplement(std::span<const double> logits) {
  if (logits.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "bag has no instances");
  }
  double log_complement = 0.0;
  for (double z : logits) log_complement += LogOneMinusSigmoid(z);
  return log_complement;
}

double ProbabilityFromLogComplement(double log_complement) {
  return ClampOpenUnit(-std::expm1(log_complement));
}

}  // namespace pmil
