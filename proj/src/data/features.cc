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

#include <cmath>
#include <fstream>
#include <iterator>

#include "binary_io.h"
#include "pmil/data.h"
#include "pmil/error.h"

namespace pmil {

namespace {
constexpr std::string_view kFeatureMagic = "PMILFEAT";
}  // namespace

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::kIo, "cannot open " + path.string());
  }
  std::string data((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorKind::kIo, "cannot read " + path.string());
  return data;
}

void WriteFile(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot create " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
}

std::vector<std::vector<float>> ReadFeaturePayload(
    const std::filesystem::path& path) {
  const std::string data = ReadFile(path);
  internal::ByteReader r(data, path.string());
  if (r.Bytes(kFeatureMagic.size()) != kFeatureMagic) r.Fail("bad magic");
  const std::uint32_t version = r.U32();
  if (version == 0 || version > kFeaturePayloadVersion) {
    throw Error(ErrorKind::kVersionMismatch,
                path.string() + ": unsupported feature payload version " +
                    std::to_string(version));
  }
  const std::uint64_t dim = r.U32();
  const std::uint64_t count = r.U32();
  if (dim == 0 || count == 0) r.Fail("empty payload");
  if (r.remaining() != dim * count * 4) {
    r.Fail("expected " + std::to_string(dim * count * 4) +
           " bytes of features, found " + std::to_string(r.remaining()));
  }
  std::vector<std::vector<float>> out(count, std::vector<float>(dim));
  for (auto& v : out) {
    for (float& x : v) {
      x = r.F32();
      if (!std::isfinite(x)) r.Fail("non-finite feature value");
    }
  }
  return out;
}

void WriteFeaturePayload(const std::filesystem::path& path,
                         std::span<const std::vector<float>> vectors,
                         std::size_t dimension) {
  internal::ByteWriter w;
  w.Bytes(kFeatureMagic);
  w.U32(kFeaturePayloadVersion);
  w.U32(static_cast<std::uint32_t>(dimension));
  w.U32(static_cast<std::uint32_t>(vectors.size()));
  for (const auto& v : vectors) {
    if (v.size() != dimension) {
      throw Error(ErrorKind::kDimensionMismatch,
                  "feature vector of dimension " + std::to_string(v.size()) +
                      " written to payload of dimension " +
                      std::to_string(dimension));
    }
    for (float x : v) w.F32(x);
  }
  WriteFile(path, w.str());
}

FeatureVector AggregateFrameFeatures(std::span<const FeatureVector> frames,
                                     FeatureNorm norm) {
  if (frames.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "no frame features to aggregate");
  }
  const std::size_t d = frames.front().dimension();
  std::vector<double> mean(d, 0.0);
  for (const FeatureVector& f : frames) {
    if (f.dimension() != d) {
      throw Error(ErrorKind::kDimensionMismatch,
                  "frame feature dimension " + std::to_string(f.dimension()) +
                      " differs from " + std::to_string(d));
    }
    for (std::size_t i = 0; i < d; ++i) mean[i] += f[i];
  }
  double length = 0.0;
  for (double& m : mean) {
    m /= static_cast<double>(frames.size());
    length += norm == FeatureNorm::kL2 ? m * m : std::abs(m);
  }
  if (norm == FeatureNorm::kL2) length = std::sqrt(length);
  std::vector<float> out(d, 0.0f);
  if (length > 0.0) {
    for (std::size_t i = 0; i < d; ++i) {
      out[i] = static_cast<float>(mean[i] / length);
    }
  }
  return FeatureVector(std::move(out));
}

}  // namespace pmil
