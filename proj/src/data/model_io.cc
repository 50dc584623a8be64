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

#include "binary_io.h"
#include "pmil/data.h"
#include "pmil/error.h"

namespace pmil {

namespace {

constexpr std::string_view kModelMagic = "PMILMODL";
constexpr std::size_t kChecksumBytes = 8;

}  // namespace

std::string SerializeModel(const ClassModel& model) {
  internal::ByteWriter w;
  w.Bytes(kModelMagic);
  w.U32(kModelVersion);
  w.U32(static_cast<std::uint32_t>(model.class_name.size()));
  w.Bytes(model.class_name);
  w.U64(model.weights.size());
  for (double v : model.weights) w.F64(v);
  w.F64(model.bias);
  const Hyperparameters& hp = model.hyperparameters;
  w.F64(hp.lambda);
  w.F64(hp.beta);
  w.F64(hp.gamma);
  w.F64(hp.eta);
  w.F64(hp.zeta);
  w.F64(hp.omega);
  w.U32(hp.pi);
  w.F64(hp.filter_max_volume_fraction);
  w.U32(hp.split_mode == SplitMode::kThreshold ? 0 : 1);
  w.U32(hp.top_k);
  w.U64(hp.seed);
  w.U64(model.trained_iterations);
  std::string bytes = w.str();
  internal::ByteWriter trailer;
  trailer.U64(internal::Fnv1a64(bytes));
  return bytes + trailer.str();
}

ClassModel DeserializeModel(std::string_view bytes) {
  internal::ByteReader r(bytes, "model");
  if (r.Bytes(kModelMagic.size()) != kModelMagic) r.Fail("bad magic");
  const std::uint32_t version = r.U32();
  if (version == 0 || version > kModelVersion) {
    throw Error(ErrorKind::kVersionMismatch,
                "model: unsupported format version " + std::to_string(version));
  }
  if (bytes.size() < r.position() + kChecksumBytes) r.Fail("truncated");
  const std::string_view body = bytes.substr(0, bytes.size() - kChecksumBytes);
  internal::ByteReader tail(bytes.substr(body.size()), "model");
  if (tail.U64() != internal::Fnv1a64(body)) r.Fail("checksum mismatch");

  internal::ByteReader b(body, "model");
  b.Bytes(kModelMagic.size() + 4);
  ClassModel model;
  const std::uint32_t name_len = b.U32();
  model.class_name = std::string(b.Bytes(name_len));
  const std::uint64_t dim = b.U64();
  if (dim > b.remaining() / 8) b.Fail("weight count exceeds file size");
  model.weights.resize(dim);
  for (double& v : model.weights) v = b.F64();
  model.bias = b.F64();
  Hyperparameters& hp = model.hyperparameters;
  hp.lambda = b.F64();
  hp.beta = b.F64();
  hp.gamma = b.F64();
  hp.eta = b.F64();
  hp.zeta = b.F64();
  hp.omega = b.F64();
  hp.pi = b.U32();
  hp.filter_max_volume_fraction = b.F64();
  const std::uint32_t mode = b.U32();
  if (mode > 1) b.Fail("unknown split mode");
  hp.split_mode = mode == 0 ? SplitMode::kThreshold : SplitMode::kTopK;
  hp.top_k = b.U32();
  hp.seed = b.U64();
  model.trained_iterations = b.U64();
  if (b.remaining() != 0) b.Fail("trailing bytes");

  if (model.class_name.empty()) b.Fail("empty class name");
  for (double v : model.weights) {
    if (!std::isfinite(v)) b.Fail("non-finite weight");
  }
  if (!std::isfinite(model.bias)) b.Fail("non-finite bias");
  try {
    ValidateHyperparameters(hp);
  } catch (const Error& e) {
    b.Fail(e.what());
  }
  return model;
}

void SaveModel(const ClassModel& model, const std::filesystem::path& path) {
  WriteFile(path, SerializeModel(model));
}

ClassModel LoadModel(const std::filesystem::path& path) {
  const std::string bytes = ReadFile(path);
  try {
    return DeserializeModel(bytes);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

}  // namespace pmil
