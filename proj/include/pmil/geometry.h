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

#ifndef PMIL_GEOMETRY_H_
#define PMIL_GEOMETRY_H_

#include <span>
#include <vector>

#include "pmil/core.h"
#include "pmil/tube.h"

namespace pmil {

// Intersection over union of two boxes; 0 when the union has zero area.
double SpatialIou(const Box& a, const Box& b);

// Area of a box after clipping it to [0, width] x [0, height].
double ClippedArea(const Box& box, double width, double height);

// Mean per-frame spatial IOU over the temporal union of both tubes, counting
// frames covered by only one tube as 0. Throws kInvalidArgument when the
// tubes belong to videos of different dimensions.
double TubeIou(const Tube& a, const Tube& b);

// Fraction of the ground-truth volume covered by `proposal`:
// sum of per-frame intersection areas / sum of ground-truth areas.
double TubeCoverage(const Tube& proposal, const Tube& ground_truth);

// Share of the whole video volume occupied by the tube, boxes clipped to the
// frame.
double VolumeFraction(const Tube& tube);

// Drops proposals whose volume fraction exceeds `max_fraction`. Instances
// without geometry are kept. A bag that would become empty keeps its single
// smallest-volume proposal.
Bag FilterLargeProposals(const Bag& bag, double max_fraction);

struct ProposalSet {
  std::vector<Tube> proposals;
  Tube ground_truth;
};

struct RecallPoint {
  double threshold = 0.0;
  double recall = 0.0;
  friend bool operator==(const RecallPoint&, const RecallPoint&) = default;
};

// Fraction of ground-truth tubes matched by some proposal with IOU >= tau, for
// each tau in `thresholds` (ascending, within [0, 1]).
std::vector<RecallPoint> RecallIouCurve(std::span<const ProposalSet> sets,
                                        std::span<const double> thresholds);

}  // namespace pmil

#endif  // PMIL_GEOMETRY_H_
