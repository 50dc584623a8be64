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

#include "pmil/geometry.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "pmil/error.h"

namespace pmil {

namespace {

double IntersectionArea(const Box& a, const Box& b) {
  const double iw = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
  const double ih = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  return iw * ih;
}

void RequireSameVideo(const Tube& a, const Tube& b) {
  if (a.video_width != b.video_width || a.video_height != b.video_height ||
      a.video_frame_count != b.video_frame_count) {
    throw Error(ErrorKind::kInvalidArgument,
                "tubes reference videos of different dimensions");
  }
}

// Walks the temporal union of two tubes, calling fn(a_box*, b_box*) per frame
// with nullptr for the tube that is absent on that frame.
template <typename Fn>
void ForEachUnionFrame(const Tube& a, const Tube& b, Fn fn) {
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.entries.size() || j < b.entries.size()) {
    if (j == b.entries.size() ||
        (i < a.entries.size() && a.entries[i].frame < b.entries[j].frame)) {
      fn(&a.entries[i++].box, nullptr);
    } else if (i == a.entries.size() ||
               b.entries[j].frame < a.entries[i].frame) {
      fn(nullptr, &b.entries[j++].box);
    } else {
      fn(&a.entries[i++].box, &b.entries[j++].box);
    }
  }
}

}  // namespace

void ValidateBox(const Box& box) {
  if (!std::isfinite(box.x) || !std::isfinite(box.y) ||
      !std::isfinite(box.w) || !std::isfinite(box.h)) {
    throw Error(ErrorKind::kInvalidData, "box has non-finite coordinates");
  }
  if (box.w < 0.0 || box.h < 0.0) {
    throw Error(ErrorKind::kInvalidData, "box has negative extent");
  }
}

void ValidateTube(const Tube& tube) {
  if (tube.entries.empty()) {
    throw Error(ErrorKind::kInvalidData, "tube has no frames");
  }
  if (tube.video_frame_count == 0 || tube.video_width == 0 ||
      tube.video_height == 0) {
    throw Error(ErrorKind::kInvalidData, "tube video dimensions must be > 0");
  }
  for (std::size_t i = 0; i < tube.entries.size(); ++i) {
    const TubeEntry& e = tube.entries[i];
    if (i > 0 && e.frame <= tube.entries[i - 1].frame) {
      throw Error(ErrorKind::kInvalidData,
                  "tube frame indices not strictly increasing at frame " +
                      std::to_string(e.frame));
    }
    if (e.frame >= tube.video_frame_count) {
      throw Error(ErrorKind::kInvalidData,
                  "tube frame " + std::to_string(e.frame) +
                      " outside video of " +
                      std::to_string(tube.video_frame_count) + " frames");
    }
    ValidateBox(e.box);
  }
}

double SpatialIou(const Box& a, const Box& b) {
  const double inter = IntersectionArea(a, b);
  const double uni = a.Area() + b.Area() - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double ClippedArea(const Box& box, double width, double height) {
  return IntersectionArea(box, Box{0.0, 0.0, width, height});
}

double TubeIou(const Tube& a, const Tube& b) {
  RequireSameVideo(a, b);
  double sum = 0.0;
  std::size_t frames = 0;
  ForEachUnionFrame(a, b, [&](const Box* ba, const Box* bb) {
    ++frames;
    if (ba && bb) sum += SpatialIou(*ba, *bb);
  });
  return frames == 0 ? 0.0 : sum / static_cast<double>(frames);
}

double TubeCoverage(const Tube& proposal, const Tube& ground_truth) {
  RequireSameVideo(proposal, ground_truth);
  double covered = 0.0;
  double total = 0.0;
  ForEachUnionFrame(proposal, ground_truth, [&](const Box* p, const Box* g) {
    if (!g) return;
    total += g->Area();
    if (p) covered += IntersectionArea(*p, *g);
  });
  return total <= 0.0 ? 0.0 : std::clamp(covered / total, 0.0, 1.0);
}

double VolumeFraction(const Tube& tube) {
  const double w = tube.video_width;
  const double h = tube.video_height;
  double volume = 0.0;
  for (const TubeEntry& e : tube.entries) volume += ClippedArea(e.box, w, h);
  return std::clamp(volume / (w * h * tube.video_frame_count), 0.0, 1.0);
}

Bag FilterLargeProposals(const Bag& bag, double max_fraction) {
  if (!(max_fraction > 0.0 && max_fraction <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument,
                "max volume fraction must lie in (0,1]");
  }
  Bag out = bag;
  out.instances.clear();
  std::size_t smallest = 0;
  double smallest_fraction = 2.0;
  for (std::size_t j = 0; j < bag.instances.size(); ++j) {
    const Instance& inst = bag.instances[j];
    if (!inst.tube) {
      out.instances.push_back(inst);
      continue;
    }
    const double fraction = VolumeFraction(*inst.tube);
    if (fraction < smallest_fraction) {
      smallest_fraction = fraction;
      smallest = j;
    }
    if (fraction <= max_fraction) out.instances.push_back(inst);
  }
  if (out.instances.empty() && !bag.instances.empty()) {
    out.instances.push_back(bag.instances[smallest]);
  }
  return out;
}

std::vector<RecallPoint> RecallIouCurve(std::span<const ProposalSet> sets,
                                        std::span<const double> thresholds) {
  if (sets.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "no proposal sets");
  }
  for (std::size_t k = 0; k < thresholds.size(); ++k) {
    if (!(thresholds[k] >= 0.0 && thresholds[k] <= 1.0) ||
        (k > 0 && thresholds[k] < thresholds[k - 1])) {
      throw Error(ErrorKind::kInvalidArgument,
                  "thresholds must be ascending within [0,1]");
    }
  }
  std::vector<double> best(sets.size(), 0.0);
  for (std::size_t i = 0; i < sets.size(); ++i) {
    for (const Tube& proposal : sets[i].proposals) {
      best[i] = std::max(best[i], TubeIou(proposal, sets[i].ground_truth));
    }
  }
  std::vector<RecallPoint> curve;
  curve.reserve(thresholds.size());
  for (double tau : thresholds) {
    const auto hits = std::count_if(best.begin(), best.end(),
                                    [tau](double iou) { return iou >= tau; });
    curve.push_back({tau, static_cast<double>(hits) /
                              static_cast<double>(sets.size())});
  }
  return curve;
}

}  // namespace pmil
