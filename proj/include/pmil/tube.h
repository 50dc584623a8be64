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

#ifndef PMIL_TUBE_H_
#define PMIL_TUBE_H_

#include <cstdint>
#include <vector>

namespace pmil {

// Axis-aligned box in pixel coordinates; (x, y) is the top-left corner.
struct Box {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double Area() const { return w * h; }
  friend bool operator==(const Box&, const Box&) = default;
};

struct TubeEntry {
  std::uint32_t frame = 0;
  Box box;
  friend bool operator==(const TubeEntry&, const TubeEntry&) = default;
};

// A temporally ordered sequence of per-frame boxes inside one video.
struct Tube {
  std::vector<TubeEntry> entries;  // strictly increasing frame indices
  std::uint32_t video_frame_count = 1;
  std::uint32_t video_width = 1;
  std::uint32_t video_height = 1;

  friend bool operator==(const Tube&, const Tube&) = default;
};

// Throws pmil::Error(kInvalidData) when a Box or Tube invariant is violated.
void ValidateBox(const Box& box);
void ValidateTube(const Tube& tube);

}  // namespace pmil

#endif  // PMIL_TUBE_H_
