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

#include "pmil/synthetic.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "json.hpp"
#include "pmil/data.h"
#include "pmil/error.h"
#include "pmil/geometry.h"

namespace pmil {

namespace {

constexpr int kMaxCenterDraws = 1000;
constexpr int kMaxBoxDraws = 200;

enum class Role { kPlanted, kBackground, kDecoy };

class Generator {
 public:
  explicit Generator(const SyntheticSpec& spec)
      : spec_(spec), rng_(spec.seed) {}

  SyntheticDataset Run() {
    DrawCenters();
    SyntheticDataset out;
    Dataset& ds = out.dataset;
    ds.feature_dimension = spec_.feature_dimension;
    for (std::uint32_t c = 0; c < spec_.num_classes; ++c) {
      ds.classes.push_back("class_" + std::to_string(c));
    }
    const auto test_count = static_cast<std::uint32_t>(
        std::lround(spec_.test_fraction * spec_.bags_per_class));
    for (std::uint32_t c = 0; c < spec_.num_classes; ++c) {
      for (std::uint32_t b = 0; b < spec_.bags_per_class; ++b) {
        Bag bag = MakeBag(c, b, out);
        ds.splits.push_back(b + test_count >= spec_.bags_per_class
                                ? Split::kTest
                                : Split::kTrain);
        ds.bags.push_back(std::move(bag));
      }
    }
    ValidateDataset(ds);
    return out;
  }

 private:
  double Uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng_);
  }

  std::vector<double> Gaussian(std::size_t n) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> v(n);
    for (double& x : v) x = normal(rng_);
    return v;
  }

  void DrawCenters() {
    const double sep = spec_.cluster_separation;
    for (std::uint32_t c = 0; c < spec_.num_classes; ++c) {
      bool placed = false;
      for (int attempt = 0; attempt < kMaxCenterDraws && !placed; ++attempt) {
        std::vector<double> g = Gaussian(spec_.feature_dimension);
        const double len = std::sqrt(
            std::inner_product(g.begin(), g.end(), g.begin(), 0.0));
        if (len == 0.0) continue;
        for (double& x : g) x *= sep / len;
        placed = std::all_of(centers_.begin(), centers_.end(),
                             [&](const std::vector<double>& other) {
                               double d2 = 0.0;
                               for (std::size_t i = 0; i < g.size(); ++i) {
                                 d2 += (g[i] - other[i]) * (g[i] - other[i]);
                               }
                               return std::sqrt(d2) >= sep;
                             });
        if (placed) centers_.push_back(std::move(g));
      }
      if (!placed) {
        throw Error(ErrorKind::kInvalidArgument,
                    "cannot place " + std::to_string(spec_.num_classes) +
                        " class centers at separation " + std::to_string(sep) +
                        " in dimension " +
                        std::to_string(spec_.feature_dimension));
      }
    }
  }

  FeatureVector Features(const std::vector<double>* center) {
    std::vector<double> noise = Gaussian(spec_.feature_dimension);
    std::vector<float> v(spec_.feature_dimension);
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double mean = center ? (*center)[i] : 0.0;
      v[i] = static_cast<float>(mean + spec_.noise_sigma * noise[i]);
    }
    FeatureVector raw(std::move(v));
    if (!spec_.normalize_features) return raw;
    return AggregateFrameFeatures(std::span<const FeatureVector>(&raw, 1));
  }

  Tube EmptyTube() const {
    Tube t;
    t.video_frame_count = spec_.video_frames;
    t.video_width = spec_.video_width;
    t.video_height = spec_.video_height;
    return t;
  }

  Tube GroundTruth() {
    const double W = spec_.video_width;
    const double H = spec_.video_height;
    const double w = Uniform(0.2, 0.3) * W;
    const double h = Uniform(0.25, 0.4) * H;
    double x = Uniform(0.0, W - w);
    double y = Uniform(0.0, H - h);
    const double dx = Uniform(-1.0, 1.0);
    const double dy = Uniform(-0.5, 0.5);
    const std::uint32_t last = spec_.video_frames - 1;
    const auto first = static_cast<std::uint32_t>(
        std::min<double>(std::floor(Uniform(0.0, 3.0)), last));
    const auto end = static_cast<std::uint32_t>(std::max<double>(
        first, std::min<double>(last, last - std::floor(Uniform(0.0, 3.0)))));
    Tube t = EmptyTube();
    for (std::uint32_t f = first; f <= end; ++f) {
      x = std::clamp(x + dx, 0.0, W - w);
      y = std::clamp(y + dy, 0.0, H - h);
      t.entries.push_back({f, Box{x, y, w, h}});
    }
    return t;
  }

  // Ground truth with per-frame jitter, shrunk until IOU lands in [0.7, 1].
  Tube PlantedTube(const Tube& gt) {
    double scale = Uniform(0.02, 0.12);
    for (int attempt = 0; attempt < kMaxBoxDraws; ++attempt) {
      Tube t = EmptyTube();
      const double jx = Uniform(-1.0, 1.0) * scale;
      const double jy = Uniform(-1.0, 1.0) * scale;
      const double jw = Uniform(-1.0, 1.0) * scale;
      const double jh = Uniform(-1.0, 1.0) * scale;
      for (const TubeEntry& e : gt.entries) {
        const Box& b = e.box;
        t.entries.push_back({e.frame, Box{b.x + jx * b.w, b.y + jy * b.h,
                                          b.w * (1.0 + jw), b.h * (1.0 + jh)}});
      }
      if (TubeIou(t, gt) >= 0.7) return t;
      scale *= 0.5;
    }
    return gt;
  }

  // Small box on a random span, redrawn until IOU <= 0.1.
  Tube BackgroundTube(const Tube& gt) {
    const double W = spec_.video_width;
    const double H = spec_.video_height;
    for (int attempt = 0; attempt < kMaxBoxDraws; ++attempt) {
      const double w = Uniform(0.08, 0.3) * W;
      const double h = Uniform(0.1, 0.4) * H;
      const double x = Uniform(0.0, W - w);
      const double y = Uniform(0.0, H - h);
      const auto a = static_cast<std::uint32_t>(Uniform(0.0, spec_.video_frames));
      const auto b = static_cast<std::uint32_t>(Uniform(0.0, spec_.video_frames));
      Tube t = EmptyTube();
      for (std::uint32_t f = std::min(a, b); f <= std::max(a, b); ++f) {
        t.entries.push_back({f, Box{x, y, w, h}});
      }
      if (TubeIou(t, gt) <= 0.1) return t;
    }
    Tube t = EmptyTube();
    t.entries.push_back({0, Box{0.0, 0.0, 0.0, 0.0}});
    return t;
  }

  Tube DecoyTube() {
    const double W = spec_.video_width;
    const double H = spec_.video_height;
    const double x = Uniform(0.0, 0.01) * W;
    const double y = Uniform(0.0, 0.01) * H;
    const double w = W - x - Uniform(0.0, 0.01) * W;
    const double h = H - y - Uniform(0.0, 0.01) * H;
    Tube t = EmptyTube();
    for (std::uint32_t f = 0; f < spec_.video_frames; ++f) {
      t.entries.push_back({f, Box{x, y, w, h}});
    }
    return t;
  }

  Bag MakeBag(std::uint32_t cls, std::uint32_t index, SyntheticDataset& out) {
    const std::uint32_t n = spec_.instances_per_bag;
    const auto decoys = static_cast<std::uint32_t>(
        std::lround(spec_.decoy_fraction * n));
    std::vector<Role> roles(n, Role::kBackground);
    std::fill_n(roles.begin(), spec_.positives_per_positive_bag, Role::kPlanted);
    std::fill_n(roles.begin() + spec_.positives_per_positive_bag, decoys,
                Role::kDecoy);
    std::shuffle(roles.begin(), roles.end(), rng_);

    Bag bag;
    bag.id = "c" + std::to_string(cls) + "_b" + std::to_string(index);
    bag.class_label = "class_" + std::to_string(cls);
    bag.ground_truth = GroundTruth();
    auto& planted = out.planted[bag.id];
    auto& decoy_list = out.decoys[bag.id];
    for (std::uint32_t j = 0; j < n; ++j) {
      Instance inst;
      inst.id = "i" + std::to_string(j);
      inst.source_bag_id = bag.id;
      switch (roles[j]) {
        case Role::kPlanted:
          inst.features = Features(&centers_[cls]);
          inst.tube = PlantedTube(*bag.ground_truth);
          planted.push_back(j);
          break;
        case Role::kDecoy:
          inst.features = Features(&centers_[cls]);
          inst.tube = DecoyTube();
          decoy_list.push_back(j);
          break;
        case Role::kBackground:
          inst.features = Features(nullptr);
          inst.tube = BackgroundTube(*bag.ground_truth);
          break;
      }
      bag.instances.push_back(std::move(inst));
    }
    return bag;
  }

  const SyntheticSpec& spec_;
  std::mt19937_64 rng_;
  std::vector<std::vector<double>> centers_;
};

}  // namespace

void ValidateSyntheticSpec(const SyntheticSpec& spec) {
  auto fail = [](const std::string& what) {
    throw Error(ErrorKind::kInvalidArgument, "synthetic spec: " + what);
  };
  if (spec.num_classes < 1 || spec.bags_per_class < 1 ||
      spec.instances_per_bag < 1 || spec.positives_per_positive_bag < 1 ||
      spec.feature_dimension < 1) {
    fail("counts and dimension must be positive");
  }
  if (spec.positives_per_positive_bag > spec.instances_per_bag) {
    fail("positives_per_positive_bag exceeds instances_per_bag");
  }
  if (!(spec.cluster_separation > 0.0) || !(spec.noise_sigma > 0.0)) {
    fail("separation and sigma must be positive");
  }
  if (!(spec.decoy_fraction >= 0.0 && spec.decoy_fraction < 1.0)) {
    fail("decoy_fraction must lie in [0,1)");
  }
  const auto decoys = std::lround(spec.decoy_fraction * spec.instances_per_bag);
  if (spec.positives_per_positive_bag + decoys > spec.instances_per_bag) {
    fail("planted positives plus decoys exceed instances_per_bag");
  }
  if (!(spec.test_fraction >= 0.0 && spec.test_fraction < 1.0)) {
    fail("test_fraction must lie in [0,1)");
  }
  if (spec.video_frames < 1 || spec.video_width < 16 ||
      spec.video_height < 16) {
    fail("video must have >= 1 frame and be at least 16x16 pixels");
  }
}

SyntheticDataset GenerateSynthetic(const SyntheticSpec& spec) {
  ValidateSyntheticSpec(spec);
  return Generator(spec).Run();
}

void SavePlantedSidecar(const SyntheticDataset& data,
                        const std::filesystem::path& path) {
  nlohmann::ordered_json doc;
  doc["format"] = "pmil-planted";
  doc["version"] = 1;
  doc["planted"] = data.planted;
  doc["decoys"] = data.decoys;
  WriteFile(path, doc.dump(1) + "\n");
}

SyntheticDataset LoadPlantedSidecar(const std::filesystem::path& path,
                                    Dataset dataset) {
  SyntheticDataset out;
  out.dataset = std::move(dataset);
  try {
    const auto doc = nlohmann::json::parse(ReadFile(path));
    if (doc.at("format") != "pmil-planted" || doc.at("version") != 1) {
      throw Error(ErrorKind::kCorruptFile,
                  path.string() + ": not a planted-instance sidecar");
    }
    out.planted = doc.at("planted")
                      .get<std::map<std::string, std::vector<std::size_t>>>();
    out.decoys = doc.at("decoys")
                     .get<std::map<std::string, std::vector<std::size_t>>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kCorruptFile, path.string() + ": " + e.what());
  }
  return out;
}

}  // namespace pmil
